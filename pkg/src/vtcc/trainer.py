"""End-to-end training, evaluation, embedding export and checkpoints.

One model instance serves both augmented views: each step concatenates
the two view batches and runs a single forward pass, so weight sharing
holds by construction.  All stochastic choices derive from
(seed, stream, epoch, sample) keys, which makes runs reproducible and
resumable, and keeps labels out of every training code path.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .augment import (STREAM_INIT, STREAM_SHUFFLE, AugmentationSpec, eval_transform,
                      generate_view_pair, make_rng, sample_seed_sequence)
from .backbone import Backbone
from .checkpoint import load_checkpoint, save_checkpoint, seed_quarters
from .config import TrainConfig, parse_config, serialize_config
from .data import DatasetSource, load_dataset
from .errors import ConfigError, ContractError, TrainingDiverged
from .heads import (ClusterProjector, InstanceProjector, cluster_contrastive_loss,
                    hard_assignments, instance_contrastive_loss, total_loss)
from .metrics import MetricsReport, evaluate_labels, kmeans
from .modules import Module
from .optim import AdamState, adam_step
from .tensor import Tensor


class VtccModel(Module):
    """Backbone plus the projector heads selected by the run mode."""

    def __init__(self, cfg: TrainConfig, dtype=np.float32):
        super().__init__()
        rng = make_rng(cfg.seed, STREAM_INIT)
        self.mode = cfg.projectors
        self.backbone = Backbone(cfg.stem, cfg.encoder, cfg.side, rng, dtype=dtype)
        if self.mode != "cluster_only":
            self.instance_head = InstanceProjector(cfg.projector, rng, dtype=dtype)
        if self.mode != "instance_only":
            self.cluster_head = ClusterProjector(cfg.projector, rng, dtype=dtype)

    def forward(self, images):
        h = self.backbone(images)
        z = self.instance_head(h) if self.mode != "cluster_only" else None
        y = self.cluster_head(h) if self.mode != "instance_only" else None
        return h, z, y


def build_model(cfg: TrainConfig, dtype=np.float32) -> VtccModel:
    return VtccModel(cfg, dtype=dtype)


@dataclass
class RunReport:
    epochs: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    final_metrics: dict = field(default_factory=dict)
    wall_clock_sec: float = 0.0
    assignments_path: str = ""
    final_checkpoint: str = ""

    def as_dict(self):
        return {
            "epochs": self.epochs,
            "steps": self.steps,
            "metrics": self.metrics,
            "final_metrics": self.final_metrics,
            "wall_clock_sec": self.wall_clock_sec,
            "assignments_path": self.assignments_path,
            "final_checkpoint": self.final_checkpoint,
        }

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.as_dict(), f, indent=1, sort_keys=True)
            f.write("\n")


def assemble_views(dataset: DatasetSource, indices, spec: AugmentationSpec,
                   seed, epoch):
    """Augment each selected image twice; returns two stacked view batches."""
    n = len(indices)
    side = spec.output_side
    xa = np.empty((n, 3, side, side), dtype=np.float32)
    xb = np.empty((n, 3, side, side), dtype=np.float32)
    for row, idx in enumerate(indices):
        img = dataset.images[idx].astype(np.float32) / 255.0
        ss = sample_seed_sequence(seed, epoch, int(idx))
        xa[row], xb[row] = generate_view_pair(img, spec, ss)
    return xa, xb


def _state_sections(cfg, model, adam, epoch, step):
    sections = []
    for name, p in model.named_parameters():
        sections.append(("param." + name, p.data))
    for name, b in model.named_buffers():
        sections.append(("buffer." + name, b))
    for (name, _p), m, v in zip(model.named_parameters(), adam.m, adam.v):
        sections.append(("adam.m." + name, m))
        sections.append(("adam.v." + name, v))
    sections.append(("meta.epoch", np.float32(epoch)))
    sections.append(("meta.step", np.float32(step)))
    sections.append(("meta.adam_t", np.float32(adam.step_count)))
    sections.append(("rng.seed_quarters", np.asarray(seed_quarters(cfg.seed),
                                                     dtype=np.float32)))
    return sections


def save_train_checkpoint(path, cfg, model, adam, epoch, step):
    save_checkpoint(path, serialize_config(cfg),
                    _state_sections(cfg, model, adam, epoch, step))


def load_train_checkpoint(path, dtype=np.float32):
    """Rebuild (cfg, model, adam, epoch, step) from a checkpoint file."""
    text, sections = load_checkpoint(path)
    cfg = parse_config(text).validate()
    model = build_model(cfg, dtype=dtype)
    for name, p in model.named_parameters():
        arr = sections.get("param." + name)
        if arr is None or arr.shape != p.data.shape:
            raise ConfigError(f"checkpoint is missing parameter {name!r} "
                              f"or its shape changed")
        p.data = arr.astype(dtype)
    for name, b in model.named_buffers():
        arr = sections.get("buffer." + name)
        if arr is None or arr.shape != b.shape:
            raise ConfigError(f"checkpoint is missing buffer {name!r}")
        np.copyto(b, arr.astype(b.dtype))
    adam = AdamState(model.parameters(), lr=cfg.optim.lr, beta1=cfg.optim.beta1,
                     beta2=cfg.optim.beta2, eps=cfg.optim.eps)
    for i, (name, _p) in enumerate(model.named_parameters()):
        m = sections.get("adam.m." + name)
        v = sections.get("adam.v." + name)
        if m is None or v is None:
            raise ConfigError(f"checkpoint is missing optimizer state for {name!r}")
        adam.m[i] = m.astype(dtype)
        adam.v[i] = v.astype(dtype)
    adam.step_count = int(sections["meta.adam_t"])
    epoch = int(sections["meta.epoch"])
    step = int(sections["meta.step"])
    return cfg, model, adam, epoch, step


def _geometry_keys(cfg):
    return (cfg.side, cfg.projectors, cfg.stem.kind, cfg.stem.patch_size,
            cfg.stem.conv_blocks, tuple(cfg.stem.channel_schedule),
            cfg.encoder.embed_dim, cfg.encoder.depth, cfg.encoder.heads,
            cfg.encoder.mlp_ratio, cfg.encoder.pos_encoding, cfg.encoder.pool,
            cfg.projector.hidden_dim, cfg.projector.instance_out_dim,
            cfg.projector.cluster_out_dim, cfg.seed)


def _compute_losses(model, x, n, cfg):
    """Forward both stacked views and build the configured objective."""
    _h, z, y = model(x)
    loss_ins = loss_clu = None
    if z is not None:
        loss_ins = instance_contrastive_loss(z[:n], z[n:], cfg.loss)
    if y is not None:
        loss_clu = cluster_contrastive_loss(y[:n], y[n:], cfg.loss)
    if loss_ins is not None and loss_clu is not None:
        total = total_loss(loss_ins, loss_clu)
    else:
        total = loss_ins if loss_ins is not None else loss_clu
        if not np.isfinite(float(total.data)):
            raise TrainingDiverged(
                f"non-finite loss: {float(total.data)}",
                diagnostics={"loss_total": float(total.data)})
    li = float(loss_ins.data) if loss_ins is not None else 0.0
    lc = float(loss_clu.data) if loss_clu is not None else 0.0
    return total, li, lc


def train(cfg: TrainConfig, dataset: DatasetSource | None = None,
          resume: str | None = None, log=None) -> RunReport:
    """Run the full training loop and write report plus checkpoints."""
    cfg.validate()
    if dataset is None:
        dataset = load_dataset(cfg.data, cfg.data_kind)
    n_batch = cfg.batch_size
    if dataset.n < n_batch:
        raise ContractError(f"dataset has {dataset.n} samples < batch size {n_batch}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    start_epoch = 0
    step = 0
    if resume is not None:
        ck_cfg, model, adam, start_epoch, step = load_train_checkpoint(resume)
        if _geometry_keys(ck_cfg) != _geometry_keys(cfg):
            raise ConfigError("resume checkpoint was trained with a different "
                              "model geometry or seed")
    else:
        model = build_model(cfg)
        adam = AdamState(model.parameters(), lr=cfg.optim.lr, beta1=cfg.optim.beta1,
                         beta2=cfg.optim.beta2, eps=cfg.optim.eps)

    report = RunReport()
    last_good = str(out_dir / "final.ckpt") if resume is None else resume
    started = time.perf_counter()
    grad_norm = 0.0

    model.train()
    try:
        for epoch in range(start_epoch + 1, cfg.epochs + 1):
            order = make_rng(cfg.seed, STREAM_SHUFFLE, epoch).permutation(dataset.n)
            num_batches = dataset.n // n_batch      # drop the partial remainder
            sums = np.zeros(3)
            for b in range(num_batches):
                idx = order[b * n_batch:(b + 1) * n_batch]
                xa, xb = assemble_views(dataset, idx, cfg.augment, cfg.seed, epoch)
                x = Tensor(np.concatenate([xa, xb], axis=0))
                total, li, lc = _compute_losses(model, x, n_batch, cfg)
                T.backward(total)
                grad_norm = float(np.sqrt(sum(
                    float((p.grad * p.grad).sum()) for p in adam.params
                    if p.grad is not None)))
                adam_step(adam)
                model.zero_grad()
                step += 1
                lt = float(total.data)
                sums += (li, lc, lt)
                report.steps.append({"step": step, "epoch": epoch,
                                     "loss_ins": li, "loss_clu": lc, "loss_total": lt})
            means = sums / max(1, num_batches)
            report.epochs.append({"epoch": epoch, "loss_ins": float(means[0]),
                                  "loss_clu": float(means[1]),
                                  "loss_total": float(means[2])})
            if log:
                log(f"epoch {epoch}: loss_total={means[2]:.4f} "
                    f"(ins={means[0]:.4f}, clu={means[1]:.4f})")
            if cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0 \
                    and epoch < cfg.epochs:
                path = str(out_dir / f"ckpt_ep{epoch:04d}.ckpt")
                save_train_checkpoint(path, cfg, model, adam, epoch, step)
                last_good = path
            if cfg.eval_every and epoch % cfg.eval_every == 0 and dataset.has_labels:
                mrep = evaluate_model(model, cfg, dataset)
                report.metrics.append({"epoch": epoch, **mrep.as_dict()})
                if log:
                    log(f"epoch {epoch}: nmi={mrep.nmi:.4f} acc={mrep.acc:.4f} "
                        f"ari={mrep.ari:.4f}")
    except TrainingDiverged as e:
        diag = dict(e.diagnostics)
        diag["last_grad_norm"] = grad_norm
        diag["last_good_checkpoint"] = last_good
        with open(out_dir / "diverged.json", "w", encoding="utf-8") as f:
            json.dump(diag, f, indent=1, sort_keys=True)
        e.diagnostics = diag
        raise

    final_path = str(out_dir / "final.ckpt")
    save_train_checkpoint(final_path, cfg, model, adam, cfg.epochs, step)
    report.final_checkpoint = final_path

    assignments = predict_assignments(model, cfg, dataset)
    assign_path = str(out_dir / "assignments.tsv")
    with open(assign_path, "w", encoding="utf-8") as f:
        f.write("index\tcluster\n")
        for i, a in enumerate(assignments):
            f.write(f"{i}\t{int(a)}\n")
    report.assignments_path = assign_path

    if dataset.has_labels:
        mrep = evaluate_model(model, cfg, dataset)
        report.final_metrics = mrep.as_dict()
    report.wall_clock_sec = time.perf_counter() - started
    report.write(out_dir / "report.json")
    return report


def _eval_forward(model, cfg, dataset, batch_size=256):
    """Deterministic full-dataset forward pass (no augmentation)."""
    was_training = model.training
    model.eval()
    probs, embeds = [], []
    try:
        with T.no_grad():
            for lo in range(0, dataset.n, batch_size):
                chunk = dataset.images[lo:lo + batch_size]
                batch = np.stack([eval_transform(img.astype(np.float32) / 255.0,
                                                 cfg.augment) for img in chunk])
                _h, z, y = model(Tensor(batch))
                if y is not None:
                    probs.append(y.data.copy())
                if z is not None:
                    embeds.append(z.data.copy())
    finally:
        model.train(was_training)
    probs = np.concatenate(probs) if probs else None
    embeds = np.concatenate(embeds) if embeds else None
    return probs, embeds


def predict_assignments(model, cfg, dataset, batch_size=256):
    probs, embeds = _eval_forward(model, cfg, dataset, batch_size)
    if probs is not None:
        return hard_assignments(probs)
    return kmeans(embeds, cfg.projector.cluster_out_dim, seed=cfg.seed)


def _mass_entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def evaluate_model(model, cfg, dataset, batch_size=256) -> MetricsReport:
    """NMI/ACC/ARI of the model's assignments against dataset labels."""
    if not dataset.has_labels:
        raise ContractError("evaluation requires a fully labeled dataset")
    probs, embeds = _eval_forward(model, cfg, dataset, batch_size)
    k = cfg.projector.cluster_out_dim
    if probs is not None:
        pred = hard_assignments(probs)
        mass = probs.mean(axis=0)
    else:
        pred = kmeans(embeds, k, seed=cfg.seed)
        mass = np.bincount(pred, minlength=k) / len(pred)
    rep = evaluate_labels(pred, dataset.labels)
    rep.cluster_sizes = np.bincount(pred, minlength=k).astype(int).tolist()
    rep.extras["mass_entropy"] = _mass_entropy(mass)
    rep.extras["mode"] = cfg.projectors
    return rep


def export_embeddings(model, cfg, dataset, out_path, batch_size=256):
    """TSV export: index, optional label, cluster probabilities, instance
    embedding values; floats carry 9 significant digits."""
    probs, embeds = _eval_forward(model, cfg, dataset, batch_size)
    labeled = dataset.has_labels
    cols = ["index"]
    if labeled:
        cols.append("label")
    if probs is not None:
        cols += [f"p{k}" for k in range(probs.shape[1])]
    if embeds is not None:
        cols += [f"z{d}" for d in range(embeds.shape[1])]
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("\t".join(cols) + "\n")
        for i in range(dataset.n):
            row = [str(i)]
            if labeled:
                row.append(str(int(dataset.labels[i])))
            if probs is not None:
                row += [f"{v:.9g}" for v in probs[i]]
            if embeds is not None:
                row += [f"{v:.9g}" for v in embeds[i]]
            f.write("\t".join(row) + "\n")
    return out_path
