"""Stems, attention, encoder blocks and the assembled backbone."""

import numpy as np
import pytest

from vtcc import tensor as T
from vtcc.backbone import (ENCODER_PRESETS, Backbone, EncoderConfig, MultiHeadSelfAttention,
                           EncoderBlock, PatchifyStem, ConvStem, StemConfig,
                           add_positional_encoding, pool_tokens, sinusoidal_table)
from vtcc.errors import ConfigError, ShapeError
from vtcc.gradcheck import max_rel_err
from vtcc.modules import Module
from vtcc.tensor import Tensor, backward

from oracles import attention_by_hand


def _rng():
    return np.random.default_rng(0)


def test_patchify_token_counts():
    cfg = StemConfig(kind="patchify", patch_size=16, embed_dim=8)
    assert cfg.token_count(224) == 196
    cfg = StemConfig(kind="patchify", patch_size=8, embed_dim=8)
    assert cfg.token_count(32) == 16
    with pytest.raises(ShapeError):
        StemConfig(kind="patchify", patch_size=16, embed_dim=8).token_count(100)


def test_conv_stem_token_counts_match_patchify():
    conv = StemConfig(kind="convolutional", conv_blocks=4, embed_dim=16)
    patch = StemConfig(kind="patchify", patch_size=16, embed_dim=16)
    assert conv.token_count(224) == patch.token_count(224) == 196
    conv2 = StemConfig(kind="convolutional", conv_blocks=2, embed_dim=64)
    assert conv2.token_count(32) == 64


def test_patchify_one_hot_projection_extracts_top_left_patch():
    p, d, c = 4, 4 * 4 * 3, 3
    cfg = StemConfig(kind="patchify", patch_size=p, embed_dim=d)
    stem = PatchifyStem(cfg, _rng(), dtype=np.float64)
    # weight[f, c, i, j] = 1 exactly where flat patch index f = (c, i, j)
    w = np.zeros((d, c, p, p))
    for f in range(d):
        ci, rest = divmod(f, p * p)
        i, j = divmod(rest, p)
        w[f, ci, i, j] = 1.0
    stem.proj.weight.data = w
    stem.proj.bias.data = np.zeros(d)
    img = np.random.default_rng(1).normal(size=(1, c, 8, 8))
    tokens = stem(Tensor(img))
    np.testing.assert_allclose(tokens.data[0, 0], img[0, :, :p, :p].ravel())


def test_conv_stem_shapes_and_schedule():
    cfg = StemConfig(kind="convolutional", conv_blocks=2, embed_dim=64)
    assert cfg.channel_schedule == [32, 64]
    stem = ConvStem(cfg, _rng())
    tokens = stem(Tensor(np.random.default_rng(0).normal(size=(2, 3, 32, 32))
                         .astype(np.float32)))
    assert tokens.shape == (2, 64, 64)
    cfg4 = StemConfig(kind="convolutional", conv_blocks=4, embed_dim=384)
    assert cfg4.channel_schedule == [48, 96, 192, 384]
    cfg_small = StemConfig(kind="convolutional", conv_blocks=4, embed_dim=64)
    assert cfg_small.channel_schedule == [8, 16, 32, 64]


def test_conv_stem_end_to_end_gradient():
    cfg = StemConfig(kind="convolutional", conv_blocks=1, embed_dim=4, in_channels=1)
    stem = ConvStem(cfg, _rng(), dtype=np.float64)
    x_np = np.random.default_rng(3).uniform(-1, 1, size=(1, 1, 8, 8))

    def run(x):
        return float(T.sum_(T.mul(stem(Tensor(x)),
                                  Tensor(_weights((1, 16, 4))))).data)

    x = Tensor(x_np.copy(), requires_grad=True)
    backward(T.sum_(T.mul(stem(x), Tensor(_weights((1, 16, 4))))))
    from vtcc.gradcheck import fd_gradient
    numeric = fd_gradient(run, x_np.copy())
    assert max_rel_err(x.grad, numeric) < 1e-5


def _weights(shape):
    return np.random.default_rng(77).uniform(-1, 1, size=shape)


def test_positional_zero_table_is_identity():
    seq = Tensor(np.random.default_rng(0).normal(size=(2, 5, 4)))
    table = Tensor(np.zeros((5, 4)), requires_grad=True)
    out = add_positional_encoding(seq, table)
    np.testing.assert_array_equal(out.data, seq.data)


def test_sinusoidal_row_zero_alternates():
    table = sinusoidal_table(4, 6)
    np.testing.assert_allclose(table[0], [0, 1, 0, 1, 0, 1])


def test_sinusoidal_rows_distinct():
    table = sinusoidal_table(1024, 4).astype(np.float64)
    # no two positions may share an encoding vector
    uniq = np.unique(table.round(12), axis=0)
    assert uniq.shape[0] == 1024


def test_positional_table_too_short():
    seq = Tensor(np.zeros((1, 10, 4)))
    with pytest.raises(ShapeError):
        add_positional_encoding(seq, Tensor(np.zeros((5, 4))))


def test_attention_identical_tokens_identical_outputs():
    attn = MultiHeadSelfAttention(8, 2, _rng())
    token = np.random.default_rng(1).normal(size=8).astype(np.float32)
    seq = np.tile(token, (1, 6, 1))
    out = attn(Tensor(seq))
    for t in range(6):
        np.testing.assert_allclose(out.data[0, t], out.data[0, 0], atol=1e-6)


def test_attention_permutation_equivariance():
    attn = MultiHeadSelfAttention(8, 2, _rng())
    seq = np.random.default_rng(2).normal(size=(1, 5, 8)).astype(np.float32)
    perm = np.random.default_rng(3).permutation(5)
    out = attn(Tensor(seq)).data
    out_perm = attn(Tensor(seq[:, perm])).data
    np.testing.assert_allclose(out_perm, out[:, perm], atol=1e-5)


def test_attention_matches_hand_computation():
    attn = MultiHeadSelfAttention(2, 1, _rng(), dtype=np.float64)
    rng = np.random.default_rng(4)
    wq, wk, wv, wo = (rng.normal(size=(2, 2)) for _ in range(4))
    bq, bk, bv, bo = (rng.normal(size=2) for _ in range(4))
    attn.wq.weight.data, attn.wq.bias.data = wq, bq
    attn.wk.weight.data, attn.wk.bias.data = wk, bk
    attn.wv.weight.data, attn.wv.bias.data = wv, bv
    attn.out.weight.data, attn.out.bias.data = wo, bo
    x = rng.normal(size=(2, 2))
    expected = attention_by_hand(x, wq, wk, wv, wo, bq, bk, bv, bo)
    out = attn(Tensor(x[None]))
    np.testing.assert_allclose(out.data[0], expected, atol=1e-6)


def test_attention_rejects_indivisible_heads():
    with pytest.raises(ConfigError):
        MultiHeadSelfAttention(10, 3, _rng())


def test_encoder_block_zeroed_projections_is_identity():
    block = EncoderBlock(8, 2, 4.0, _rng())
    block.attn.out.weight.data[:] = 0.0
    block.attn.out.bias.data[:] = 0.0
    block.fc2.weight.data[:] = 0.0
    block.fc2.bias.data[:] = 0.0
    seq = np.random.default_rng(5).normal(size=(2, 4, 8)).astype(np.float32)
    out = block(Tensor(seq))
    np.testing.assert_allclose(out.data, seq, atol=1e-6)


def test_encoder_block_preserves_shape():
    block = EncoderBlock(16, 4, 2.0, _rng())
    for shape in ((1, 3, 16), (4, 7, 16)):
        seq = Tensor(np.zeros(shape, dtype=np.float32))
        assert block(seq).shape == shape


def test_encoder_block_gradient_through_residual():
    block = EncoderBlock(4, 2, 2.0, _rng(), dtype=np.float64)
    x_np = np.random.default_rng(6).uniform(-1, 1, size=(1, 3, 4))

    def run(x):
        return float(T.sum_(T.mul(block(Tensor(x)), Tensor(_weights((1, 3, 4))))).data)

    x = Tensor(x_np.copy(), requires_grad=True)
    backward(T.sum_(T.mul(block(x), Tensor(_weights((1, 3, 4))))))
    from vtcc.gradcheck import fd_gradient
    numeric = fd_gradient(run, x_np.copy())
    assert max_rel_err(x.grad, numeric) < 1e-5
    assert np.abs(x.grad).min() > 0.0     # residual path keeps gradient alive


def test_pool_tokens_identity_cases():
    v = np.random.default_rng(7).normal(size=4).astype(np.float32)
    seq = Tensor(np.tile(v, (2, 5, 1)))
    np.testing.assert_allclose(pool_tokens(seq, "mean").data,
                               np.tile(v, (2, 1)), atol=1e-6)
    np.testing.assert_allclose(pool_tokens(seq, "cls_token").data,
                               np.tile(v, (2, 1)), atol=1e-6)


def _desk_backbone(stem_kind="convolutional", pos="learnable_once", pool="mean",
                   dtype=np.float32):
    stem = StemConfig(kind=stem_kind, conv_blocks=2, patch_size=4, embed_dim=64)
    enc = EncoderConfig(embed_dim=64, depth=2, heads=4, pos_encoding=pos, pool=pool)
    return Backbone(stem, enc, 32, _rng(), dtype=dtype)


def test_backbone_desk_output_shape():
    bb = _desk_backbone()
    h = bb(Tensor(np.zeros((3, 3, 32, 32), dtype=np.float32)))
    assert h.shape == (3, 64)


def test_backbone_preset_shapes_on_224_probe():
    for name, preset in ENCODER_PRESETS.items():
        stem = StemConfig(kind="convolutional", conv_blocks=4,
                          embed_dim=preset["embed_dim"])
        enc = EncoderConfig(embed_dim=preset["embed_dim"], depth=1,
                            heads=preset["heads"])
        bb = Backbone(stem, enc, 224, _rng())
        assert bb.num_tokens == 196
        h = bb(Tensor(np.zeros((1, 3, 224, 224), dtype=np.float32)))
        assert h.shape == (1, preset["embed_dim"]), name


def test_backbone_cls_token_mode():
    bb = _desk_backbone(pool="cls_token")
    h = bb(Tensor(np.zeros((2, 3, 32, 32), dtype=np.float32)))
    assert h.shape == (2, 64)


def test_backbone_sinusoidal_mode():
    bb = _desk_backbone(pos="sinusoidal_once")
    h = bb(Tensor(np.zeros((2, 3, 32, 32), dtype=np.float32)))
    assert h.shape == (2, 64)


def test_backbone_patch_permutation_invariance_without_positions():
    """With positions disabled and mean pooling, shuffling the stem's patch
    grid must not change the pooled representation."""
    stem = StemConfig(kind="patchify", patch_size=8, embed_dim=16)
    enc = EncoderConfig(embed_dim=16, depth=1, heads=2, pool="mean")
    bb = Backbone(stem, enc, 32, _rng())
    bb.eval()
    img = np.random.default_rng(8).normal(size=(1, 3, 32, 32)).astype(np.float32)
    # permute the 4x4 grid of 8x8 patches
    patches = img.reshape(1, 3, 4, 8, 4, 8).transpose(0, 2, 4, 1, 3, 5).reshape(1, 16, 3, 8, 8)
    perm = np.random.default_rng(9).permutation(16)
    shuffled = patches[:, perm].reshape(1, 4, 4, 3, 8, 8).transpose(0, 3, 1, 4, 2, 5) \
        .reshape(1, 3, 32, 32)
    h0 = bb(Tensor(img), use_positional=False).data
    h1 = bb(Tensor(np.ascontiguousarray(shuffled)), use_positional=False).data
    np.testing.assert_allclose(h1, h0, atol=1e-5)


def test_backbone_micro_gradient_check():
    stem = StemConfig(kind="convolutional", conv_blocks=1, embed_dim=8)
    enc = EncoderConfig(embed_dim=8, depth=1, heads=2)
    bb = Backbone(stem, enc, 8, _rng(), dtype=np.float64)
    x_np = np.random.default_rng(10).uniform(0, 1, size=(2, 3, 8, 8))

    def run(x):
        with T.no_grad():
            return float(T.sum_(T.mul(bb(Tensor(x)), Tensor(_weights((2, 8))))).data)

    x = Tensor(x_np.copy(), requires_grad=True)
    backward(T.sum_(T.mul(bb(x), Tensor(_weights((2, 8))))))
    from vtcc.gradcheck import fd_gradient
    numeric = fd_gradient(run, x_np.copy())
    assert max_rel_err(x.grad, numeric) < 1e-4


def test_weight_sharing_across_views_is_structural():
    bb = _desk_backbone()
    params = list(bb.named_parameters())
    names = [n for n, _ in params]
    assert len(names) == len(set(names))
    xa = np.random.default_rng(11).normal(size=(2, 3, 32, 32)).astype(np.float32)
    xb = np.random.default_rng(12).normal(size=(2, 3, 32, 32)).astype(np.float32)
    bb.eval()
    ha = bb(Tensor(xa)).data
    hb = bb(Tensor(xb)).data
    hcat = bb(Tensor(np.concatenate([xa, xb]))).data
    np.testing.assert_allclose(np.concatenate([ha, hb]), hcat, rtol=1e-5, atol=1e-6)
