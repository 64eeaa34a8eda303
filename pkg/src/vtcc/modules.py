"""Lightweight layer containers over the tensor library.

A Module tracks parameters (trainable tensors), buffers (non-trainable
state such as batch-norm running statistics) and child modules in
registration order, so parameter iteration, initialization and
checkpoint naming are all deterministic.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .tensor import Tensor


def trunc_normal(shape, std, rng, dtype=np.float32):
    """Normal(0, std) clipped to +/- 2 std by resampling."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2.0 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * std
    return out.astype(dtype)


class Module:
    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name, array):
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    def set_buffer(self, name, array):
        """Replace a registered buffer (keeps registration order)."""
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for cname, child in self._children.items():
            yield from child.named_parameters(prefix + cname + ".")

    def named_buffers(self, prefix=""):
        for name, b in self._buffers.items():
            yield prefix + name, b
        for cname, child in self._children.items():
            yield from child.named_buffers(prefix + cname + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def modules(self):
        yield self
        for child in self._children.values():
            yield from child.modules()

    def train(self, mode=True):
        for m in self.modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def load_buffer_state(self, name, array):
        cur = self._buffers.get(name)
        if cur is None or cur.shape != array.shape:
            raise ShapeError(f"buffer {name!r} shape mismatch")
        self.set_buffer(name, array.astype(cur.dtype))

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng, bias=True, dtype=np.float32, std=0.02):
        super().__init__()
        self.weight = Tensor(trunc_normal((in_dim, out_dim), std, rng, dtype),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x):
        flat = x if x.ndim == 2 else T.reshape(x, (-1, x.shape[-1]))
        out = T.matmul(flat, self.weight)
        if self.bias is not None:
            out = T.add(out, self.bias)
        if x.ndim != 2:
            out = T.reshape(out, x.shape[:-1] + (out.shape[-1],))
        return out


class Conv2d(Module):
    def __init__(self, in_ch, out_ch, kernel, stride, padding, rng,
                 bias=True, dtype=np.float32, std=0.02):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.weight = Tensor(trunc_normal((out_ch, in_ch, kernel, kernel), std, rng, dtype),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x):
        return T.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm(Module):
    """Batch normalization over (N, C) or (N, C, H, W) input."""

    def __init__(self, num_features, dtype=np.float32, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(num_features, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(num_features, dtype=dtype), requires_grad=True)
        self.register_buffer("running_mean", np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_var", np.ones(num_features, dtype=dtype))

    def forward(self, x):
        out, rm, rv = T.batch_norm(x, self.gamma, self.beta,
                                   self.running_mean, self.running_var,
                                   self.momentum, self.eps, self.training)
        if self.training:
            self.set_buffer("running_mean", rm.astype(self.running_mean.dtype))
            self.set_buffer("running_var", rv.astype(self.running_var.dtype))
        return out


class LayerNorm(Module):
    def __init__(self, dim, dtype=np.float32, eps=1e-5):
        super().__init__()
        self.eps = eps
        self.gamma = Tensor(np.ones(dim, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(dim, dtype=dtype), requires_grad=True)

    def forward(self, x):
        return T.layer_norm(x, self.gamma, self.beta, self.eps)
