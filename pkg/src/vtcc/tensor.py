"""Dense tensors with tape-based reverse-mode automatic differentiation.

Every differentiable value in the engine is a :class:`Tensor` wrapping a
row-major numpy buffer (float32 for training, float64 for gradient checks).
Operations that participate in differentiation attach a :class:`TapeNode`
to their result; nodes carry a globally increasing sequence number, so the
implicit tape is the set of nodes ordered by creation.  ``backward`` walks
the nodes reachable from the loss in exact reverse creation order, which is
a valid reverse topological order because inputs always predate outputs.

Broadcasting in the elementwise ops is deliberately restricted to three
cases so that every backward rule stays auditable:

* scalar (0-d) against anything,
* a trailing-suffix shape, e.g. ``[N, L, d] op [d]`` or ``[N, K] op [K]``,
* equal rank with size-1 axes, e.g. ``[M, D] op [M, 1]`` (keepdims results).

No operation mutates its inputs; gradient buffers are only written by
``backward`` (accumulating) and by the optimizer step.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, ShapeError

LOG_CLAMP = 1e-12

_seq_counter = itertools.count()
_grad_enabled = True


class no_grad:
    """Context manager that disables tape recording (evaluation passes)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class TapeNode:
    """One recorded operation: parents, saved state and a backward rule.

    ``backward_fn(grad_out)`` returns one gradient array (or None) per
    parent, aligned with ``parents``.
    """

    __slots__ = ("seq", "op_name", "parents", "backward_fn")

    def __init__(self, op_name, parents, backward_fn):
        self.seq = next(_seq_counter)
        self.op_name = op_name
        self.parents = parents
        self.backward_fn = backward_fn


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "node")

    def __init__(self, data, dtype=None, requires_grad=False):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.node = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{flag})"

    def item(self):
        return float(self.data)

    def numpy(self):
        """Read-only view of the underlying buffer."""
        v = self.data.view()
        v.flags.writeable = False
        return v

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def astype(self, dtype):
        return Tensor(self.data.astype(dtype), requires_grad=False)

    def zero_grad(self):
        self.grad = None

    # -- autodiff plumbing ---------------------------------------------------

    def _attach(self, op_name, parents, backward_fn):
        self.node = TapeNode(op_name, parents, backward_fn)
        self.requires_grad = True

    def backward(self):
        backward(self)

    # -- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return slice_(self, idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def _as_tensor(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _check_dtypes(a, b, op):
    if a.data.dtype != b.data.dtype:
        raise ShapeError(f"{op}: dtype mismatch {a.data.dtype} vs {b.data.dtype}")


def _tracking(*tensors):
    return _grad_enabled and any(t.requires_grad for t in tensors)


def backward(loss):
    """Reverse sweep from a scalar loss.

    Gradients accumulate into every reachable leaf with ``requires_grad``;
    calling twice without zeroing doubles the leaf gradients.
    """
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
    if loss.node is None:
        if loss.requires_grad:
            _accumulate_leaf(loss, np.ones_like(loss.data))
        return

    # Collect reachable tape nodes, then visit in reverse creation order.
    seen = {id(loss.node): loss.node}
    stack = [loss.node]
    while stack:
        node = stack.pop()
        for parent in node.parents:
            pn = parent.node
            if pn is not None and id(pn) not in seen:
                seen[id(pn)] = pn
                stack.append(pn)
    order = sorted(seen.values(), key=lambda n: n.seq, reverse=True)

    grads = {id(loss.node): np.ones_like(loss.data)}
    for node in order:
        g = grads.pop(id(node), None)
        if g is None:
            continue
        parent_grads = node.backward_fn(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            pn = parent.node
            if pn is not None:
                key = id(pn)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
            elif parent.requires_grad:
                _accumulate_leaf(parent, pg)


def _accumulate_leaf(t, g):
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True).reshape(t.data.shape)
    else:
        t.grad = t.grad + g.reshape(t.data.shape)


# -- restricted broadcasting ----------------------------------------------


def _shapes_compatible(sa, sb):
    """Restricted broadcast admissibility (see module docstring)."""
    if sa == () or sb == ():
        return True
    if len(sa) == len(sb):
        return all(x == y or x == 1 or y == 1 for x, y in zip(sa, sb))
    small, big = (sa, sb) if len(sa) < len(sb) else (sb, sa)
    return tuple(big[len(big) - len(small):]) == tuple(small)


def _reduce_to(g, shape):
    """Sum a full-shape gradient down to a broadcast operand's shape."""
    if g.shape == tuple(shape):
        return g
    lead = g.ndim - len(shape)
    if lead:
        g = g.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _binary(op_name, a, b, fwd, bwd_a, bwd_b):
    """Shared skeleton for elementwise binary ops with restricted broadcast."""
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise ContractError(f"{op_name}: at least one Tensor operand required")
    if not isinstance(a, Tensor):
        a = _as_tensor(a, b.dtype)
    if not isinstance(b, Tensor):
        b = _as_tensor(b, a.dtype)
    _check_dtypes(a, b, op_name)
    if not _shapes_compatible(a.shape, b.shape):
        raise ShapeError(f"{op_name}: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(fwd(a.data, b.data))
    if _tracking(a, b):
        need_a, need_b = a.requires_grad, b.requires_grad

        def bw(g):
            ga = _reduce_to(bwd_a(g), a.shape) if need_a else None
            gb = _reduce_to(bwd_b(g), b.shape) if need_b else None
            return ga, gb

        out._attach(op_name, (a, b), bw)
    return out


# -- elementwise ops -------------------------------------------------------


def add(a, b):
    return _binary("add", a, b, lambda x, y: x + y, lambda g: g, lambda g: g)


def sub(a, b):
    return _binary("sub", a, b, lambda x, y: x - y, lambda g: g, lambda g: -g)


def mul(a, b):
    a = a if isinstance(a, Tensor) else _as_tensor(a, b.dtype)
    b = b if isinstance(b, Tensor) else _as_tensor(b, a.dtype)
    return _binary("mul", a, b, lambda x, y: x * y,
                   lambda g: g * b.data, lambda g: g * a.data)


def div(a, b):
    a = a if isinstance(a, Tensor) else _as_tensor(a, b.dtype)
    b = b if isinstance(b, Tensor) else _as_tensor(b, a.dtype)
    return _binary("div", a, b, lambda x, y: x / y,
                   lambda g: g / b.data,
                   lambda g: -g * a.data / (b.data * b.data))


def neg(a):
    out = Tensor(-a.data)
    if _tracking(a):
        out._attach("neg", (a,), lambda g: (-g,))
    return out


def power(a, p):
    if not isinstance(p, (int, float)):
        raise ContractError("power: exponent must be a python scalar")
    out = Tensor(a.data ** p)
    if _tracking(a):
        x = a.data

        def bw(g):
            return (g * p * x ** (p - 1),)

        out._attach("power", (a,), bw)
    return out


def exp(a):
    y = np.exp(a.data)
    out = Tensor(y)
    if _tracking(a):
        out._attach("exp", (a,), lambda g: (g * y,))
    return out


def log(a):
    """Natural log with its argument clamped at ``LOG_CLAMP``.

    The clamp guards probabilities that underflow to exact zero in float32;
    below the clamp the function is constant, so its gradient there is zero.
    """
    x = np.maximum(a.data, np.asarray(LOG_CLAMP, dtype=a.data.dtype))
    out = Tensor(np.log(x))
    if _tracking(a):
        mask = a.data > LOG_CLAMP

        def bw(g):
            return (g * mask / x,)

        out._attach("log", (a,), bw)
    return out


def sqrt(a):
    y = np.sqrt(a.data)
    out = Tensor(y)
    if _tracking(a):
        out._attach("sqrt", (a,), lambda g: (g * 0.5 / y,))
    return out


def relu(a):
    out = Tensor(np.maximum(a.data, 0))
    if _tracking(a):
        mask = a.data > 0
        out._attach("relu", (a,), lambda g: (g * mask,))
    return out


GELU_CUBIC = 0.044715
_GELU_SCALE = float(np.sqrt(2.0 / np.pi))


def gelu(a):
    """Gaussian error linear unit, tanh approximation."""
    x = a.data
    c = _GELU_SCALE
    x2 = x * x
    u = c * x
    u += (c * GELU_CUBIC) * (x2 * x)
    t = np.tanh(u)
    half_1pt = 0.5 * (1.0 + t)
    out = Tensor(x * half_1pt)
    if _tracking(a):
        def bw(g):
            du = (3.0 * c * GELU_CUBIC) * x2
            du += c
            sech2 = 1.0 - t * t
            d = (0.5 * x) * sech2
            d *= du
            d += half_1pt
            return (g * d,)

        out._attach("gelu", (a,), bw)
    return out


def activation(a, kind):
    if kind == "relu":
        return relu(a)
    if kind == "gelu":
        return gelu(a)
    raise ContractError(f"unknown activation kind {kind!r}")


def softmax(a, axis=-1):
    """Numerically stable softmax along ``axis``; rows sum to 1."""
    x = a.data
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)
    if _tracking(a):
        def bw(g):
            inner = (g * y).sum(axis=axis, keepdims=True)
            return (y * (g - inner),)

        out._attach("softmax", (a,), bw)
    return out


# -- reductions ------------------------------------------------------------


def _expand_reduced(g, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = axis if isinstance(axis, tuple) else (axis,)
    axes = tuple(ax % len(shape) for ax in axes)
    if not keepdims:
        for ax in sorted(axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def sum_(a, axis=None, keepdims=False):
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))
    if _tracking(a):
        shape = a.shape

        def bw(g):
            return (np.ascontiguousarray(_expand_reduced(g, shape, axis, keepdims)),)

        out._attach("sum", (a,), bw)
    return out


def mean(a, axis=None, keepdims=False):
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    if _tracking(a):
        shape = a.shape
        count = a.data.size // out.data.size

        def bw(g):
            return (np.ascontiguousarray(_expand_reduced(g, shape, axis, keepdims)) / count,)

        out._attach("mean", (a,), bw)
    return out


def l2_norm(a, axis=-1, keepdims=True):
    """Euclidean norm along one axis; gradient is x / ||x||."""
    n = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=True))
    out_data = n if keepdims else n.squeeze(axis)
    out = Tensor(out_data)
    if _tracking(a):
        x = a.data

        def bw(g):
            gk = g if keepdims else np.expand_dims(g, axis)
            return (gk * x / n,)

        out._attach("l2_norm", (a,), bw)
    return out


# -- shape ops ---------------------------------------------------------------


def reshape(a, shape):
    try:
        out = Tensor(a.data.reshape(shape))
    except ValueError as e:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from e
    if _tracking(a):
        orig = a.shape
        out._attach("reshape", (a,), lambda g: (g.reshape(orig),))
    return out


def transpose(a, axes=None):
    out = Tensor(a.data.transpose(axes))
    if _tracking(a):
        if axes is None:
            inv = None
        else:
            inv = tuple(np.argsort(axes))

        def bw(g):
            return (g.transpose(inv),)

        out._attach("transpose", (a,), bw)
    return out


def concat(tensors: Sequence[Tensor], axis=0):
    tensors = list(tensors)
    if not tensors:
        raise ContractError("concat: empty input list")
    for t in tensors[1:]:
        _check_dtypes(tensors[0], t, "concat")
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    if _tracking(*tensors):
        sizes = [t.shape[axis] for t in tensors]
        split_at = np.cumsum(sizes)[:-1]

        def bw(g):
            return tuple(np.split(g, split_at, axis=axis))

        out._attach("concat", tuple(tensors), bw)
    return out


def slice_(a, idx):
    """Basic (non-advanced) indexing; gradient scatters into zeros."""
    if isinstance(idx, (np.ndarray, list, Tensor)):
        raise ContractError("slice: only basic indexing (ints/slices) is supported")
    if isinstance(idx, tuple):
        for part in idx:
            if isinstance(part, (np.ndarray, list, Tensor)):
                raise ContractError("slice: only basic indexing (ints/slices) is supported")
    out = Tensor(a.data[idx])
    if _tracking(a):
        shape = a.shape
        dtype = a.data.dtype

        def bw(g):
            full = np.zeros(shape, dtype=dtype)
            full[idx] = g
            return (full,)

        out._attach("slice", (a,), bw)
    return out


# -- matmul ------------------------------------------------------------------


def _swap_last(x):
    return np.swapaxes(x, -1, -2)


def matmul(a, b):
    """Matrix product over the last two axes.

    Both operands must be 2-d, or share identical leading (batch) dims.
    """
    _check_dtypes(a, b, "matmul")
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-d, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(np.matmul(a.data, b.data))
    if _tracking(a, b):
        need_a, need_b = a.requires_grad, b.requires_grad
        ad, bd = a.data, b.data

        def bw(g):
            ga = np.matmul(g, _swap_last(bd)) if need_a else None
            gb = np.matmul(_swap_last(ad), g) if need_b else None
            return ga, gb

        out._attach("matmul", (a, b), bw)
    return out


# -- convolution --------------------------------------------------------------


def _conv_out_dim(size, k, stride, padding):
    return (size + 2 * padding - k) // stride + 1


def _im2col(xp, kh, kw, stride, ho, wo):
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, ho, wo), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
    return cols.reshape(n, c * kh * kw, ho * wo)


def _col2im(dcols, xp_shape, kh, kw, stride, ho, wo):
    n, c, hp, wp = xp_shape
    dxp = np.zeros(xp_shape, dtype=dcols.dtype)
    d6 = dcols.reshape(n, c, kh, kw, ho, wo)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += d6[:, :, i, j]
    return dxp


def conv2d(x, w, bias=None, stride=1, padding=0):
    """2-d cross-correlation over NCHW input with OIHW weights."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d: need 4-d input and weight, got {x.shape} and {w.shape}")
    _check_dtypes(x, w, "conv2d")
    n, c, h, wd = x.shape
    f, cw, kh, kw = w.shape
    if cw != c:
        raise ShapeError(f"conv2d: input channels {c} != weight channels {cw}")
    if stride < 1:
        raise ContractError(f"conv2d: stride must be >= 1, got {stride}")
    if kh > h + 2 * padding or kw > wd + 2 * padding:
        raise ShapeError(f"conv2d: kernel ({kh},{kw}) larger than padded input "
                         f"({h + 2 * padding},{wd + 2 * padding})")
    ho = _conv_out_dim(h, kh, stride, padding)
    wo = _conv_out_dim(wd, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: output dims ({ho},{wo}) would be < 1")

    if padding:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    else:
        xp = x.data
    cols = _im2col(xp, kh, kw, stride, ho, wo)          # [N, C*kh*kw, Ho*Wo]
    w2 = w.data.reshape(f, c * kh * kw)
    out_data = np.matmul(w2, cols)                      # [N, F, Ho*Wo]
    if bias is not None:
        _check_dtypes(x, bias, "conv2d")
        if bias.shape != (f,):
            raise ShapeError(f"conv2d: bias shape {bias.shape} != ({f},)")
        out_data = out_data + bias.data[:, None]
    out = Tensor(out_data.reshape(n, f, ho, wo))

    parents = (x, w) if bias is None else (x, w, bias)
    if _tracking(*parents):
        xp_shape = xp.shape
        need_x = x.requires_grad

        def bw(g):
            g2 = g.reshape(n, f, ho * wo)
            gw = np.einsum("nfl,ncl->fc", g2, cols, optimize=True).reshape(w.shape)
            gb = g2.sum(axis=(0, 2)) if bias is not None else None
            gx = None
            if need_x:
                dcols = np.matmul(w2.T, g2)
                dxp = _col2im(dcols, xp_shape, kh, kw, stride, ho, wo)
                gx = dxp[:, :, padding:padding + h, padding:padding + wd] if padding else dxp
            if bias is None:
                return gx, gw
            return gx, gw, gb

        out._attach("conv2d", parents, bw)
    return out


# -- normalization -----------------------------------------------------------


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize each row over the last dim, then apply the affine pair."""
    d = x.shape[-1]
    if d < 2:
        raise ShapeError(f"layer_norm: last dim must be >= 2, got {d}")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(f"layer_norm: affine shapes {gamma.shape}/{beta.shape} != ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    invstd = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.data.dtype))
    xhat = xc * invstd
    out = Tensor(xhat * gamma.data + beta.data)
    if _tracking(x, gamma, beta):
        reduce_axes = tuple(range(x.ndim - 1))
        need = (x.requires_grad, gamma.requires_grad, beta.requires_grad)

        def bw(g):
            gx = ggamma = gbeta = None
            if need[1]:
                ggamma = (g * xhat).sum(axis=reduce_axes)
            if need[2]:
                gbeta = g.sum(axis=reduce_axes)
            if need[0]:
                dxhat = g * gamma.data
                gx = invstd * (dxhat
                               - dxhat.mean(axis=-1, keepdims=True)
                               - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
            return gx, ggamma, gbeta

        out._attach("layer_norm", (x, gamma, beta), bw)
    return out


def batch_norm(x, gamma, beta, running_mean, running_var, momentum=0.1,
               eps=1e-5, training=True):
    """Channel-wise batch normalization for 2-d (N,C) or 4-d (N,C,H,W) input.

    Returns ``(out, new_running_mean, new_running_var)``; the running
    buffers are plain arrays and are never part of the tape.  Statistics
    use the population variance.  Train mode requires at least 2 samples
    per channel.
    """
    if x.ndim not in (2, 4):
        raise ShapeError(f"batch_norm: expected 2-d or 4-d input, got {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"batch_norm: affine shapes {gamma.shape}/{beta.shape} != ({c},)")
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    cshape = (1, c) if x.ndim == 2 else (1, c, 1, 1)
    g4 = gamma.data.reshape(cshape)
    b4 = beta.data.reshape(cshape)
    eps = np.asarray(eps, dtype=x.data.dtype)

    if training:
        count = x.data.size // c
        if count < 2:
            raise ContractError("batch_norm: train mode needs >= 2 values per channel")
        mu = x.data.mean(axis=axes, keepdims=True)
        xc = x.data - mu
        var = (xc * xc).mean(axis=axes, keepdims=True)
        invstd = 1.0 / np.sqrt(var + eps)
        xhat = xc * invstd
        new_rm = (1.0 - momentum) * running_mean + momentum * mu.reshape(c)
        new_rv = (1.0 - momentum) * running_var + momentum * var.reshape(c)
    else:
        invstd = (1.0 / np.sqrt(running_var + eps)).reshape(cshape).astype(x.data.dtype)
        xhat = (x.data - running_mean.reshape(cshape).astype(x.data.dtype)) * invstd
        new_rm, new_rv = running_mean, running_var

    out = Tensor(xhat * g4 + b4)
    if _tracking(x, gamma, beta):
        need = (x.requires_grad, gamma.requires_grad, beta.requires_grad)

        def bw(g):
            gx = ggamma = gbeta = None
            if need[1]:
                ggamma = (g * xhat).sum(axis=axes)
            if need[2]:
                gbeta = g.sum(axis=axes)
            if need[0]:
                dxhat = g * g4
                if training:
                    gx = invstd * (dxhat
                                   - dxhat.mean(axis=axes, keepdims=True)
                                   - xhat * (dxhat * xhat).mean(axis=axes, keepdims=True))
                else:
                    gx = dxhat * invstd
            return gx, ggamma, gbeta

        out._attach("batch_norm", (x, gamma, beta), bw)
    return out, new_rm, new_rv


# -- constructors --------------------------------------------------------------


def zeros(shape, dtype=np.float32, requires_grad=False):
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=np.float32, requires_grad=False):
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)


def eye(n, dtype=np.float32):
    return Tensor(np.eye(n, dtype=dtype))
