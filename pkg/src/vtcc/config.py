"""Run configuration: dataclasses plus a flat ``section.key=value`` format.

The text format is line-oriented (one assignment per line, ``#`` starts a
comment) and serializes in a fixed key order, so two equal configurations
always produce byte-identical text; the checkpoint format relies on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .augment import AugmentationSpec
from .backbone import ENCODER_PRESETS, EncoderConfig, StemConfig
from .errors import ConfigError
from .heads import LossConfig, ProjectorConfig

PROJECTOR_MODES = ("both", "instance_only", "cluster_only")


@dataclass
class OptimConfig:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainConfig:
    side: int = 32
    projectors: str = "both"
    stem: StemConfig = field(default_factory=StemConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    projector: ProjectorConfig = field(default_factory=ProjectorConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    augment: AugmentationSpec = field(default_factory=AugmentationSpec)
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0
    data: str = "data.bin"
    data_kind: str = "binary_records"
    out: str = "runs/out"
    checkpoint_every: int = 0
    eval_every: int = 0

    def validate(self):
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.projectors not in PROJECTOR_MODES:
            raise ConfigError(f"projectors must be one of {PROJECTOR_MODES}, "
                              f"got {self.projectors!r}")
        if self.projector.cluster_out_dim < 2:
            raise ConfigError("projector.cluster_out_dim must be >= 2")
        if self.stem.embed_dim != self.encoder.embed_dim:
            raise ConfigError("stem.embed_dim must equal encoder.embed_dim")
        if self.projector.input_dim != self.encoder.embed_dim:
            raise ConfigError("projector.input_dim must equal encoder.embed_dim")
        self.augment.output_side = self.side   # model input geometry wins
        self.stem.token_count(self.side)       # raises on indivisible side
        return self


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


# key -> (getter, setter); the emission order below is the canonical order.
def _schema():
    return [
        ("model.side", lambda c: c.side, lambda c, v: setattr(c, "side", int(v))),
        ("model.projectors", lambda c: c.projectors,
         lambda c, v: setattr(c, "projectors", v)),
        ("stem.kind", lambda c: c.stem.kind, lambda c, v: setattr(c.stem, "kind", v)),
        ("stem.patch_size", lambda c: c.stem.patch_size,
         lambda c, v: setattr(c.stem, "patch_size", int(v))),
        ("stem.conv_blocks", lambda c: c.stem.conv_blocks,
         lambda c, v: _set_conv_blocks(c, int(v))),
        ("encoder.embed_dim", lambda c: c.encoder.embed_dim,
         lambda c, v: _set_embed_dim(c, int(v))),
        ("stem.channel_schedule", lambda c: c.stem.channel_schedule,
         lambda c, v: setattr(c.stem, "channel_schedule", list(_ints(v)))),
        ("encoder.depth", lambda c: c.encoder.depth,
         lambda c, v: setattr(c.encoder, "depth", int(v))),
        ("encoder.heads", lambda c: c.encoder.heads,
         lambda c, v: setattr(c.encoder, "heads", int(v))),
        ("encoder.mlp_ratio", lambda c: c.encoder.mlp_ratio,
         lambda c, v: setattr(c.encoder, "mlp_ratio", float(v))),
        ("encoder.pos_encoding", lambda c: c.encoder.pos_encoding,
         lambda c, v: setattr(c.encoder, "pos_encoding", v)),
        ("encoder.pool", lambda c: c.encoder.pool,
         lambda c, v: setattr(c.encoder, "pool", v)),
        ("projector.hidden_dim", lambda c: c.projector.hidden_dim,
         lambda c, v: setattr(c.projector, "hidden_dim", int(v))),
        ("projector.instance_out_dim", lambda c: c.projector.instance_out_dim,
         lambda c, v: setattr(c.projector, "instance_out_dim", int(v))),
        ("projector.cluster_out_dim", lambda c: c.projector.cluster_out_dim,
         lambda c, v: setattr(c.projector, "cluster_out_dim", int(v))),
        ("loss.tau_instance", lambda c: c.loss.tau_instance,
         lambda c, v: setattr(c.loss, "tau_instance", float(v))),
        ("loss.tau_cluster", lambda c: c.loss.tau_cluster,
         lambda c, v: setattr(c.loss, "tau_cluster", float(v))),
        ("loss.entropy_weight", lambda c: c.loss.entropy_weight,
         lambda c, v: setattr(c.loss, "entropy_weight", float(v))),
        ("optim.lr", lambda c: c.optim.lr, lambda c, v: setattr(c.optim, "lr", float(v))),
        ("optim.beta1", lambda c: c.optim.beta1,
         lambda c, v: setattr(c.optim, "beta1", float(v))),
        ("optim.beta2", lambda c: c.optim.beta2,
         lambda c, v: setattr(c.optim, "beta2", float(v))),
        ("optim.eps", lambda c: c.optim.eps, lambda c, v: setattr(c.optim, "eps", float(v))),
        ("augment.crop_scale", lambda c: c.augment.crop_scale_range,
         lambda c, v: setattr(c.augment, "crop_scale_range", _floats(v))),
        ("augment.flip_prob", lambda c: c.augment.flip_prob,
         lambda c, v: setattr(c.augment, "flip_prob", float(v))),
        ("augment.jitter_strengths", lambda c: c.augment.jitter_strengths,
         lambda c, v: setattr(c.augment, "jitter_strengths", _floats(v))),
        ("augment.jitter_prob", lambda c: c.augment.jitter_prob,
         lambda c, v: setattr(c.augment, "jitter_prob", float(v))),
        ("augment.grayscale_prob", lambda c: c.augment.grayscale_prob,
         lambda c, v: setattr(c.augment, "grayscale_prob", float(v))),
        ("augment.blur_probs", lambda c: c.augment.blur_probs,
         lambda c, v: setattr(c.augment, "blur_probs", _floats(v))),
        ("augment.solarize_probs", lambda c: c.augment.solarize_probs,
         lambda c, v: setattr(c.augment, "solarize_probs", _floats(v))),
        ("augment.normalize_mean", lambda c: c.augment.normalize_mean,
         lambda c, v: setattr(c.augment, "normalize_mean", _floats(v))),
        ("augment.normalize_std", lambda c: c.augment.normalize_std,
         lambda c, v: setattr(c.augment, "normalize_std", _floats(v))),
        ("train.batch_size", lambda c: c.batch_size,
         lambda c, v: setattr(c, "batch_size", int(v))),
        ("train.epochs", lambda c: c.epochs, lambda c, v: setattr(c, "epochs", int(v))),
        ("train.seed", lambda c: c.seed, lambda c, v: setattr(c, "seed", int(v))),
        ("train.data", lambda c: c.data, lambda c, v: setattr(c, "data", v)),
        ("train.data_kind", lambda c: c.data_kind,
         lambda c, v: setattr(c, "data_kind", v)),
        ("train.out", lambda c: c.out, lambda c, v: setattr(c, "out", v)),
        ("train.checkpoint_every", lambda c: c.checkpoint_every,
         lambda c, v: setattr(c, "checkpoint_every", int(v))),
        ("train.eval_every", lambda c: c.eval_every,
         lambda c, v: setattr(c, "eval_every", int(v))),
    ]


def _set_embed_dim(cfg, d):
    cfg.encoder.embed_dim = d
    cfg.stem.embed_dim = d
    cfg.projector.input_dim = d
    cfg.stem.channel_schedule = []          # recompute ramp for the new width
    cfg.stem.__post_init__()


def _set_conv_blocks(cfg, s):
    cfg.stem.conv_blocks = s
    cfg.stem.channel_schedule = []          # recompute ramp for the new depth
    cfg.stem.__post_init__()


def apply_entry(cfg: TrainConfig, key, value):
    if key == "encoder.preset":
        preset = ENCODER_PRESETS.get(value)
        if preset is None:
            raise ConfigError(f"unknown encoder preset {value!r}")
        _set_embed_dim(cfg, preset["embed_dim"])
        cfg.encoder.depth = preset["depth"]
        cfg.encoder.heads = preset["heads"]
        return
    for k, _get, setter in _schema():
        if k == key:
            try:
                setter(cfg, value)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad value for {key}: {value!r} ({e})") from e
            return
    raise ConfigError(f"unknown config key {key!r}")


def parse_config(text, base: TrainConfig | None = None) -> TrainConfig:
    cfg = base if base is not None else TrainConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        apply_entry(cfg, key, value)
    # re-run invariant checks that depend on combinations of fields
    cfg.encoder.__post_init__()
    cfg.stem.__post_init__()
    return cfg


def serialize_config(cfg: TrainConfig) -> str:
    lines = [f"{key}={_fmt(get(cfg))}" for key, get, _set in _schema()]
    return "\n".join(lines) + "\n"


def load_config_file(path, overrides=()) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as f:
        cfg = parse_config(f.read())
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must look like key=value, got {ov!r}")
        key, value = (part.strip() for part in ov.split("=", 1))
        apply_entry(cfg, key, value)
    return cfg.validate()


def desk_profile(**updates) -> TrainConfig:
    """Default CPU-scale profile; field updates applied on top."""
    cfg = TrainConfig()
    cfg.projector.instance_out_dim = 32
    for key, value in updates.items():
        setattr(cfg, key, value)
    return cfg


def paper_profile() -> TrainConfig:
    """Publication-scale profile: 224x224 input, small encoder preset."""
    cfg = TrainConfig(side=224, batch_size=128, epochs=1000)
    cfg.stem.conv_blocks = 4
    cfg.stem.patch_size = 16
    _set_embed_dim(cfg, ENCODER_PRESETS["small"]["embed_dim"])
    cfg.encoder.depth = ENCODER_PRESETS["small"]["depth"]
    cfg.encoder.heads = ENCODER_PRESETS["small"]["heads"]
    cfg.projector.instance_out_dim = 128
    cfg.augment.output_side = 224
    return cfg
