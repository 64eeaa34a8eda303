"""Adam optimizer with bias correction.

Moment buffers are keyed by parameter position, zero-initialized, and
live outside the autodiff tape.  Defaults: beta1=0.9, beta2=0.999,
eps=1e-8, no weight decay.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .tensor import Tensor


class AdamState:
    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
            raise ContractError(f"Adam betas must lie in (0,1), got {beta1}, {beta2}")
        if eps <= 0.0:
            raise ContractError(f"Adam eps must be > 0, got {eps}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.params = list(params)
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]


def adam_step(state: AdamState):
    """One in-place update over all tracked parameters.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), with
    m_hat = m / (1 - beta1^t) and v_hat = v / (1 - beta2^t).
    """
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, m, v in zip(state.params, state.m, state.v):
        g = p.grad
        if g is None:
            raise ContractError("adam_step: parameter has no gradient")
        if g.shape != m.shape:
            raise ContractError(
                f"adam_step: grad shape {g.shape} does not match moment buffer {m.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.data.dtype)


def zero_grads(params):
    for p in params:
        p.grad = None
