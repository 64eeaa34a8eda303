"""Image-to-representation encoder.

Pipeline: stem (patchify or stacked stride-2 convolutions), additive
positional encoding, a stack of pre-norm transformer blocks, a final
layer norm and token pooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .modules import BatchNorm, Conv2d, LayerNorm, Linear, Module, trunc_normal
from .tensor import Tensor

ENCODER_PRESETS = {
    "tiny": dict(embed_dim=192, depth=4, heads=12),
    "small": dict(embed_dim=384, depth=8, heads=12),
    "base": dict(embed_dim=768, depth=12, heads=12),
}


@dataclass
class StemConfig:
    kind: str = "convolutional"          # "patchify" | "convolutional"
    patch_size: int = 4
    conv_blocks: int = 2
    embed_dim: int = 64
    in_channels: int = 3
    channel_schedule: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("patchify", "convolutional"):
            raise ConfigError(f"unknown stem kind {self.kind!r}")
        if not self.channel_schedule:
            # geometric ramp ending at embed_dim, floored at 8 channels
            self.channel_schedule = [
                max(8, self.embed_dim // 2 ** (self.conv_blocks - i))
                for i in range(1, self.conv_blocks + 1)
            ]
        if self.kind == "convolutional" and len(self.channel_schedule) != self.conv_blocks:
            raise ConfigError("channel_schedule length must equal conv_blocks")

    @property
    def reduction(self):
        return self.patch_size if self.kind == "patchify" else 2 ** self.conv_blocks

    def token_count(self, side):
        r = self.reduction
        if side % r != 0:
            raise ShapeError(f"image side {side} not divisible by stem reduction {r}")
        return (side // r) ** 2


@dataclass
class EncoderConfig:
    embed_dim: int = 64
    depth: int = 2
    heads: int = 4
    mlp_ratio: float = 4.0
    pos_encoding: str = "learnable_once"  # "learnable_once" | "sinusoidal_once"
    pool: str = "mean"                    # "mean" | "cls_token"

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.pos_encoding not in ("learnable_once", "sinusoidal_once"):
            raise ConfigError(f"unknown pos_encoding {self.pos_encoding!r}")
        if self.pool not in ("mean", "cls_token"):
            raise ConfigError(f"unknown pool mode {self.pool!r}")


def sinusoidal_table(length, dim, dtype=np.float32):
    """Fixed sin/cos table, interleaved: row p = [sin(p*w0), cos(p*w0), ...]."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    idx = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * idx / dim)
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : (dim - dim // 2)])
    return table.astype(dtype)


class PatchifyStem(Module):
    """Non-overlapping patch embedding: a p x p convolution with stride p."""

    def __init__(self, cfg: StemConfig, rng, dtype=np.float32):
        super().__init__()
        self.patch_size = cfg.patch_size
        self.proj = Conv2d(cfg.in_channels, cfg.embed_dim, cfg.patch_size,
                           stride=cfg.patch_size, padding=0, rng=rng, dtype=dtype)

    def forward(self, images):
        side = images.shape[-1]
        if side % self.patch_size != 0:
            raise ShapeError(f"image side {side} not divisible by patch size {self.patch_size}")
        fmap = self.proj(images)                       # [N, d, side/p, side/p]
        return _flatten_grid(fmap)


class ConvStem(Module):
    """Stacked stride-2 3x3 conv + batch-norm + ReLU blocks, then a 1x1
    projection to the embedding width."""

    def __init__(self, cfg: StemConfig, rng, dtype=np.float32):
        super().__init__()
        self.blocks = cfg.conv_blocks
        in_ch = cfg.in_channels
        for i, out_ch in enumerate(cfg.channel_schedule):
            # bias would be cancelled by the batch norm that follows
            setattr(self, f"conv{i}", Conv2d(in_ch, out_ch, 3, stride=2, padding=1,
                                             rng=rng, bias=False, dtype=dtype))
            setattr(self, f"norm{i}", BatchNorm(out_ch, dtype=dtype))
            in_ch = out_ch
        self.proj = Conv2d(in_ch, cfg.embed_dim, 1, stride=1, padding=0,
                           rng=rng, dtype=dtype)

    def forward(self, images):
        side = images.shape[-1]
        if side % (2 ** self.blocks) != 0:
            raise ShapeError(f"image side {side} not divisible by 2^{self.blocks}")
        x = images
        for i in range(self.blocks):
            x = getattr(self, f"conv{i}")(x)
            x = getattr(self, f"norm{i}")(x)
            x = T.relu(x)
        return _flatten_grid(self.proj(x))


def _flatten_grid(fmap):
    """[N, d, g, g] feature map -> [N, g*g, d] token sequence."""
    n, d, gh, gw = fmap.shape
    return T.transpose(T.reshape(fmap, (n, d, gh * gw)), (0, 2, 1))


class MultiHeadSelfAttention(Module):
    def __init__(self, dim, heads, rng, dtype=np.float32):
        super().__init__()
        if dim % heads != 0:
            raise ConfigError(f"embed_dim {dim} not divisible by heads {heads}")
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = 1.0 / np.sqrt(self.head_dim)
        self.wq = Linear(dim, dim, rng, dtype=dtype)
        self.wk = Linear(dim, dim, rng, dtype=dtype)
        self.wv = Linear(dim, dim, rng, dtype=dtype)
        self.out = Linear(dim, dim, rng, dtype=dtype)

    def forward(self, x):
        n, l, d = x.shape
        h, hd = self.heads, self.head_dim

        def split(t):  # [N, L, d] -> [N, H, L, hd]
            return T.transpose(T.reshape(t, (n, l, h, hd)), (0, 2, 1, 3))

        q, k, v = split(self.wq(x)), split(self.wk(x)), split(self.wv(x))
        scores = T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), self.scale)
        attn = T.softmax(scores, axis=-1)              # rows sum to 1 per query
        ctx = T.matmul(attn, v)                        # [N, H, L, hd]
        merged = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (n, l, d))
        return self.out(merged)


class EncoderBlock(Module):
    """Pre-norm transformer block: x += MHSA(LN(x)); x += MLP(LN(x))."""

    def __init__(self, dim, heads, mlp_ratio, rng, dtype=np.float32):
        super().__init__()
        hidden = int(round(dim * mlp_ratio))
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.attn = MultiHeadSelfAttention(dim, heads, rng, dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.fc1 = Linear(dim, hidden, rng, dtype=dtype)
        self.fc2 = Linear(hidden, dim, rng, dtype=dtype)

    def forward(self, x):
        x = T.add(x, self.attn(self.norm1(x)))
        x = T.add(x, self.fc2(T.gelu(self.fc1(self.norm2(x)))))
        return x


def add_positional_encoding(seq, table):
    """Add the first L rows of a positional table to a token sequence."""
    l = seq.shape[1]
    if table.shape[0] < l:
        raise ShapeError(f"positional table length {table.shape[0]} < sequence length {l}")
    if isinstance(table, Tensor):
        rows = table[:l] if table.shape[0] != l else table
    else:
        rows = Tensor(table[:l])
    return T.add(seq, rows)


def pool_tokens(seq, mode):
    """Collapse [N, L, d] tokens to [N, d]: mean over tokens or token 0."""
    if mode == "mean":
        return T.mean(seq, axis=1)
    if mode == "cls_token":
        return seq[:, 0, :]
    raise ConfigError(f"unknown pool mode {mode!r}")


class Backbone(Module):
    """Full encoder f(.): images [N, C, side, side] -> representations [N, d]."""

    def __init__(self, stem_cfg: StemConfig, enc_cfg: EncoderConfig, side, rng,
                 dtype=np.float32):
        super().__init__()
        if stem_cfg.embed_dim != enc_cfg.embed_dim:
            raise ConfigError("stem and encoder embed_dim disagree")
        self.cfg = enc_cfg
        self.side = side
        d = enc_cfg.embed_dim
        self.stem = (PatchifyStem if stem_cfg.kind == "patchify" else ConvStem)(
            stem_cfg, rng, dtype=dtype)
        self.num_tokens = stem_cfg.token_count(side)
        table_len = self.num_tokens + (1 if enc_cfg.pool == "cls_token" else 0)
        if enc_cfg.pool == "cls_token":
            self.cls_token = Tensor(trunc_normal((1, 1, d), 0.02, rng, dtype),
                                    requires_grad=True)
        if enc_cfg.pos_encoding == "learnable_once":
            self.pos_table = Tensor(trunc_normal((table_len, d), 0.02, rng, dtype),
                                    requires_grad=True)
        else:
            self.register_buffer("pos_table_fixed", sinusoidal_table(table_len, d, dtype))
        for i in range(enc_cfg.depth):
            setattr(self, f"block{i}", EncoderBlock(d, enc_cfg.heads, enc_cfg.mlp_ratio,
                                                    rng, dtype=dtype))
        self.final_norm = LayerNorm(d, dtype=dtype)

    def positional_table(self):
        if self.cfg.pos_encoding == "learnable_once":
            return self.pos_table
        return self.pos_table_fixed

    def forward(self, images, use_positional=True):
        seq = self.stem(images)
        if self.cfg.pool == "cls_token":
            n = seq.shape[0]
            cls = T.add(T.zeros((n, 1, seq.shape[2]), dtype=seq.dtype), self.cls_token[0])
            seq = T.concat([cls, seq], axis=1)
        if use_positional:
            seq = add_positional_encoding(seq, self.positional_table())
        for i in range(self.cfg.depth):
            seq = getattr(self, f"block{i}")(seq)
        seq = self.final_norm(seq)
        return pool_tokens(seq, self.cfg.pool)
