"""Twin projectors and the contrastive objectives.

The instance head maps representations to a low-dimensional space for
sample-level contrast; the cluster head ends in a softmax whose columns
are per-cluster assignment profiles contrasted across the two views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ContractError, NumericGuardError, TrainingDiverged
from .modules import BatchNorm, Linear, Module
from .tensor import Tensor


@dataclass
class ProjectorConfig:
    input_dim: int = 64
    instance_out_dim: int = 128
    cluster_out_dim: int = 4
    hidden_dim: int = 0     # 0 -> same as input_dim

    def __post_init__(self):
        if self.cluster_out_dim < 2:
            raise ContractError(f"cluster_out_dim must be >= 2, got {self.cluster_out_dim}")
        if self.hidden_dim <= 0:
            self.hidden_dim = self.input_dim


@dataclass
class LossConfig:
    tau_instance: float = 0.5
    tau_cluster: float = 1.0
    entropy_weight: float = 1.0

    def __post_init__(self):
        if self.tau_instance <= 0 or self.tau_cluster <= 0:
            raise ContractError("temperatures must be positive")


class ProjectorMLP(Module):
    """Three-layer MLP: linear -> BN -> ReLU, twice, then a final linear."""

    def __init__(self, in_dim, hidden, out_dim, rng, dtype=np.float32):
        super().__init__()
        self.fc1 = Linear(in_dim, hidden, rng, dtype=dtype)
        self.bn1 = BatchNorm(hidden, dtype=dtype)
        self.fc2 = Linear(hidden, hidden, rng, dtype=dtype)
        self.bn2 = BatchNorm(hidden, dtype=dtype)
        self.fc3 = Linear(hidden, out_dim, rng, dtype=dtype)

    def forward(self, h):
        x = T.relu(self.bn1(self.fc1(h)))
        x = T.relu(self.bn2(self.fc2(x)))
        return self.fc3(x)


class InstanceProjector(Module):
    """g_I: representation -> instance embedding (no terminal nonlinearity)."""

    def __init__(self, cfg: ProjectorConfig, rng, dtype=np.float32):
        super().__init__()
        self.mlp = ProjectorMLP(cfg.input_dim, cfg.hidden_dim, cfg.instance_out_dim,
                                rng, dtype=dtype)

    def forward(self, h):
        return self.mlp(h)


class ClusterProjector(Module):
    """g_C: representation -> soft cluster assignment rows (softmax over K)."""

    def __init__(self, cfg: ProjectorConfig, rng, dtype=np.float32):
        super().__init__()
        self.mlp = ProjectorMLP(cfg.input_dim, cfg.hidden_dim, cfg.cluster_out_dim,
                                rng, dtype=dtype)

    def forward(self, h):
        return T.softmax(self.mlp(h), axis=-1)


def cosine_similarity(a: Tensor, b: Tensor) -> Tensor:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ContractError(f"cosine_similarity expects equal-length vectors, "
                            f"got {a.shape} and {b.shape}")
    na = float(np.linalg.norm(a.data))
    nb = float(np.linalg.norm(b.data))
    if na == 0.0 or nb == 0.0:
        raise NumericGuardError("cosine_similarity: zero-norm input")
    num = T.sum_(T.mul(a, b))
    return T.div(num, T.mul(T.l2_norm(a, axis=0, keepdims=False),
                            T.l2_norm(b, axis=0, keepdims=False)))


def _nt_xent(rows: Tensor, tau: float, what: str) -> Tensor:
    """Shared contrastive core over 2M stacked rows.

    Row i's positive is row (i+M) mod 2M; the denominator runs over the
    2M-1 pairs excluding the anchor itself (positive included).  Returns
    the mean loss over all 2M anchors.
    """
    two_m = rows.shape[0]
    m = two_m // 2
    norms = np.sqrt((rows.data * rows.data).sum(axis=1))
    if not np.all(norms > 0.0):
        bad = int(np.argmin(norms))
        raise NumericGuardError(f"{what}: zero-norm row {bad} makes cosine undefined")

    unit = T.div(rows, T.l2_norm(rows, axis=-1, keepdims=True))
    sims = T.matmul(unit, T.transpose(unit))            # [2M, 2M] cosines
    logits = T.mul(sims, 1.0 / tau)

    not_self = 1.0 - np.eye(two_m, dtype=rows.data.dtype)
    pos = np.zeros((two_m, two_m), dtype=rows.data.dtype)
    idx = np.arange(two_m)
    pos[idx, (idx + m) % two_m] = 1.0

    denom = T.sum_(T.mul(T.exp(logits), Tensor(not_self)), axis=1)
    pos_logit = T.sum_(T.mul(logits, Tensor(pos)), axis=1)
    return T.mean(T.sub(T.log(denom), pos_logit))


def instance_contrastive_loss(z_a: Tensor, z_b: Tensor, cfg: LossConfig) -> Tensor:
    """Sample-level InfoNCE over the 2N embeddings of a twin-view batch."""
    if z_a.shape != z_b.shape:
        raise ContractError(f"view shapes differ: {z_a.shape} vs {z_b.shape}")
    n = z_a.shape[0]
    if n < 2:
        raise ContractError(f"instance loss needs N >= 2 samples, got {n}")
    return _nt_xent(T.concat([z_a, z_b], axis=0), cfg.tau_instance, "instance loss")


def assignment_entropy(y: Tensor):
    """Marginal cluster mass and its entropy for one view.

    Mass p_k is the column mean of the assignment matrix (sums to 1);
    H = -sum p log p with 0 log 0 treated as 0.
    """
    p = T.mean(y, axis=0)
    h = T.neg(T.sum_(T.mul(p, T.log(p))))
    return p, h


def cluster_contrastive_loss(y_a: Tensor, y_b: Tensor, cfg: LossConfig) -> Tensor:
    """Cluster-level InfoNCE over the 2K assignment columns, minus the
    per-view assignment entropies (omitted when entropy_weight is 0)."""
    if y_a.shape != y_b.shape:
        raise ContractError(f"view shapes differ: {y_a.shape} vs {y_b.shape}")
    k = y_a.shape[1]
    if k < 2:
        raise ContractError(f"cluster loss needs K >= 2 clusters, got {k}")
    cols = T.concat([T.transpose(y_a), T.transpose(y_b)], axis=0)   # [2K, N]
    loss = _nt_xent(cols, cfg.tau_cluster, "cluster loss")
    if cfg.entropy_weight != 0.0:
        _, h_a = assignment_entropy(y_a)
        _, h_b = assignment_entropy(y_b)
        loss = T.sub(loss, T.mul(T.add(h_a, h_b), cfg.entropy_weight))
    return loss


def total_loss(loss_ins: Tensor, loss_clu: Tensor) -> Tensor:
    """Unweighted sum of the two objectives."""
    li = float(loss_ins.data)
    lc = float(loss_clu.data)
    if not (np.isfinite(li) and np.isfinite(lc)):
        raise TrainingDiverged(
            f"non-finite loss terms: instance={li}, cluster={lc}",
            diagnostics={"loss_ins": li, "loss_clu": lc})
    return T.add(loss_ins, loss_clu)


def hard_assignments(y) -> np.ndarray:
    """Row argmax; ties resolve to the lowest cluster index."""
    data = y.data if isinstance(y, Tensor) else np.asarray(y)
    return np.argmax(data, axis=1)
