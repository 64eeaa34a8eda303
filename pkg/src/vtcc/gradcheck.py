"""Finite-difference verification of every differentiable operation.

Central differences with h=1e-5 in float64; relative error is measured
element-wise against max(1e-8, |analytic|).  The end-to-end check builds
a micro model and differentiates the full training objective through
stem, encoder, both heads and both losses.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .config import TrainConfig, desk_profile
from .heads import cluster_contrastive_loss, instance_contrastive_loss, total_loss
from .tensor import Tensor, backward

FD_STEP = 1e-5
OP_TOLERANCE = 1e-5
END_TO_END_TOLERANCE = 1e-4


def fd_gradient(f, x: np.ndarray, h=FD_STEP) -> np.ndarray:
    """Central-difference gradient of scalar-valued f at x (float64)."""
    x = x.astype(np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(1e-8, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom))


def _check(name, build, *input_shapes, low=-2.0, high=2.0, seed=0, positive=False):
    """Compare autodiff and finite differences for one op.

    ``build(*tensors)`` must return a scalar Tensor; gradients are checked
    for every input.
    """
    rng = np.random.default_rng(seed)
    arrays = []
    for shape in input_shapes:
        a = rng.uniform(low, high, size=shape)
        if positive:
            a = np.abs(a) + 0.1
        arrays.append(a)
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build(*tensors)
    backward(loss)

    worst = 0.0
    for k, arr in enumerate(arrays):
        def f(x, k=k):
            probe = [Tensor(a.copy()) for a in arrays]
            probe[k] = Tensor(x.copy())
            return float(build(*probe).data)

        numeric = fd_gradient(f, arr.copy())
        worst = max(worst, max_rel_err(tensors[k].grad, numeric))
    return name, worst


def op_checks():
    """(name, max relative error) for each differentiable operation."""
    results = [
        _check("add", lambda a, b: T.sum_(T.mul(T.add(a, b), a)), (3, 4), (3, 4)),
        _check("add_broadcast", lambda a, b: T.sum_(T.mul(T.add(a, b), a)), (2, 3, 4), (4,)),
        _check("sub", lambda a, b: T.sum_(T.mul(T.sub(a, b), b)), (3, 4), (3, 4)),
        _check("mul", lambda a, b: T.sum_(T.mul(a, b)), (3, 4), (3, 4)),
        _check("div", lambda a, b: T.sum_(T.div(a, b)), (3, 4), (3, 4), positive=True),
        _check("div_keepdims", lambda a, b: T.sum_(T.div(a, b)), (3, 4), (3, 1),
               positive=True),
        _check("neg", lambda a: T.sum_(T.mul(T.neg(a), a)), (5,)),
        _check("power", lambda a: T.sum_(T.power(a, 3)), (3, 3)),
        _check("exp", lambda a: T.sum_(T.exp(a)), (3, 4), low=-1.5, high=1.5),
        _check("log", lambda a: T.sum_(T.log(a)), (3, 4), positive=True),
        _check("sqrt", lambda a: T.sum_(T.sqrt(a)), (3, 4), positive=True),
        _check("relu", lambda a: T.sum_(T.relu(a)), (4, 4)),
        _check("gelu", lambda a: T.sum_(T.gelu(a)), (4, 4)),
        _check("softmax", lambda a: T.sum_(T.mul(T.softmax(a, axis=-1),
                                                 Tensor(_weights((3, 5))))), (3, 5)),
        _check("mean", lambda a: T.sum_(T.mul(T.mean(a, axis=1), Tensor(_weights((3,))))),
               (3, 4)),
        _check("sum_axis", lambda a: T.sum_(T.mul(T.sum_(a, axis=0),
                                                  Tensor(_weights((4,))))), (3, 4)),
        _check("l2_norm", lambda a: T.sum_(T.l2_norm(a, axis=-1, keepdims=True)),
               (3, 4), positive=True),
        _check("reshape", lambda a: T.sum_(T.mul(T.reshape(a, (4, 3)),
                                                 Tensor(_weights((4, 3))))), (3, 4)),
        _check("transpose", lambda a: T.sum_(T.mul(T.transpose(a, (1, 0)),
                                                   Tensor(_weights((4, 3))))), (3, 4)),
        _check("concat", lambda a, b: T.sum_(T.mul(T.concat([a, b], axis=0),
                                                   Tensor(_weights((5, 3))))),
               (2, 3), (3, 3)),
        _check("slice", lambda a: T.sum_(T.mul(a[1:3, ::2], Tensor(_weights((2, 2))))),
               (4, 4)),
        _check("matmul", lambda a, b: T.sum_(T.matmul(a, b)), (3, 4), (4, 2)),
        _check("matmul_batched", lambda a, b: T.sum_(T.matmul(a, b)),
               (2, 3, 4), (2, 4, 2)),
        _check("conv2d", lambda x, w, b: T.sum_(T.conv2d(x, w, b, stride=2, padding=1)),
               (2, 3, 6, 6), (4, 3, 3, 3), (4,)),
        _check("layer_norm", lambda x, g, b: T.sum_(T.mul(T.layer_norm(x, g, b),
                                                          Tensor(_weights((3, 6))))),
               (3, 6), (6,), (6,)),
        _check("batch_norm_train",
               lambda x, g, b: T.sum_(T.mul(
                   T.batch_norm(x, g, b, np.zeros(3), np.ones(3), training=True)[0],
                   Tensor(_weights((2, 3, 4, 4))))),
               (2, 3, 4, 4), (3,), (3,)),
        _check("batch_norm_eval",
               lambda x, g, b: T.sum_(T.mul(
                   T.batch_norm(x, g, b, np.full(3, 0.3), np.full(3, 1.7),
                                training=False)[0],
                   Tensor(_weights((2, 3, 4, 4))))),
               (2, 3, 4, 4), (3,), (3,)),
    ]
    return results


def _weights(shape):
    return np.random.default_rng(1234).uniform(-1.0, 1.0, size=shape)


def micro_config() -> TrainConfig:
    cfg = desk_profile(side=8, batch_size=4, epochs=1, seed=11)
    cfg.encoder.embed_dim = 8
    cfg.encoder.depth = 1
    cfg.encoder.heads = 2
    cfg.stem.embed_dim = 8
    cfg.stem.conv_blocks = 1
    cfg.stem.patch_size = 2
    cfg.stem.channel_schedule = []
    cfg.stem.__post_init__()
    cfg.projector.input_dim = 8
    cfg.projector.hidden_dim = 8
    cfg.projector.instance_out_dim = 4
    cfg.projector.cluster_out_dim = 3
    return cfg.validate()


def end_to_end_check(progress=None):
    """Finite-difference check of the full objective on a micro model."""
    from .trainer import build_model

    cfg = micro_config()
    model = build_model(cfg, dtype=np.float64)
    n = cfg.batch_size
    rng = np.random.default_rng(99)
    x_np = rng.uniform(0.0, 1.0, size=(2 * n, 3, cfg.side, cfg.side))

    def objective():
        _h, z, y = model(Tensor(x_np))
        li = instance_contrastive_loss(z[:n], z[n:], cfg.loss)
        lc = cluster_contrastive_loss(y[:n], y[n:], cfg.loss)
        return total_loss(li, lc)

    loss = objective()
    backward(loss)
    analytic = {name: p.grad.copy() for name, p in model.named_parameters()}

    worst = 0.0
    worst_name = ""
    for name, p in model.named_parameters():
        flat = p.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + FD_STEP
            with T.no_grad():
                fp = float(objective().data)
            flat[i] = orig - FD_STEP
            with T.no_grad():
                fm = float(objective().data)
            flat[i] = orig
            numeric[i] = (fp - fm) / (2.0 * FD_STEP)
        err = max_rel_err(analytic[name].reshape(-1), numeric)
        if err > worst:
            worst, worst_name = err, name
        if progress:
            progress(f"  {name}: rel_err={err:.3e}")
    return worst, worst_name


def run_all(progress=None):
    """Full suite; returns (ok, op_results, end_to_end_err)."""
    ok = True
    results = op_checks()
    for name, err in results:
        line = f"op {name}: rel_err={err:.3e} " + \
            ("PASS" if err < OP_TOLERANCE else "FAIL")
        if progress:
            progress(line)
        ok &= err < OP_TOLERANCE
    e2e_err, worst_name = end_to_end_check()
    if progress:
        progress(f"end-to-end objective: rel_err={e2e_err:.3e} (worst: {worst_name}) "
                 + ("PASS" if e2e_err < END_TO_END_TOLERANCE else "FAIL"))
    ok &= e2e_err < END_TO_END_TOLERANCE
    return ok, results, e2e_err
