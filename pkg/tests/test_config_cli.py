"""Config parsing/serialization and the command-line surface."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from vtcc.config import (TrainConfig, apply_entry, desk_profile, load_config_file,
                         paper_profile, parse_config, serialize_config)
from vtcc.errors import ConfigError


def test_serialize_parse_round_trip():
    cfg = desk_profile(seed=42, epochs=17)
    cfg.loss.entropy_weight = 0.0
    cfg.stem.kind = "patchify"
    text = serialize_config(cfg)
    again = parse_config(text)
    assert serialize_config(again) == text


def test_parse_comments_and_blanks():
    cfg = parse_config("# a comment\n\ntrain.seed=9   # trailing\nloss.tau_instance=0.25\n")
    assert cfg.seed == 9
    assert cfg.loss.tau_instance == 0.25


def test_parse_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config("nonsense.key=1\n")


def test_parse_rejects_bad_value():
    with pytest.raises(ConfigError):
        parse_config("train.epochs=soon\n")


def test_parse_rejects_missing_equals():
    with pytest.raises(ConfigError, match="key=value"):
        parse_config("just some words\n")


def test_defaults_match_desk_profile():
    cfg = desk_profile()
    assert cfg.side == 32
    assert cfg.encoder.embed_dim == 64
    assert cfg.encoder.depth == 2
    assert cfg.encoder.heads == 4
    assert cfg.stem.conv_blocks == 2
    assert cfg.projector.instance_out_dim == 32
    assert cfg.batch_size == 64
    assert cfg.optim.lr == 3e-4
    assert cfg.loss.tau_instance == 0.5
    assert cfg.loss.tau_cluster == 1.0
    assert cfg.epochs == 200
    # the type-level default stays at the publication value
    assert TrainConfig().projector.instance_out_dim == 128


def test_paper_profile_geometry():
    cfg = paper_profile().validate()
    assert cfg.side == 224
    assert cfg.encoder.embed_dim == 384
    assert cfg.encoder.depth == 8
    assert cfg.stem.conv_blocks == 4
    assert cfg.batch_size == 128
    assert cfg.epochs == 1000
    assert cfg.stem.token_count(224) == 196


def test_encoder_preset_key():
    cfg = TrainConfig()
    apply_entry(cfg, "encoder.preset", "tiny")
    assert cfg.encoder.embed_dim == 192
    assert cfg.encoder.depth == 4
    with pytest.raises(ConfigError):
        apply_entry(cfg, "encoder.preset", "giant")


def test_validate_catches_inconsistencies():
    cfg = desk_profile(batch_size=1)
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = desk_profile(side=33)
    with pytest.raises(Exception):
        cfg.validate()
    cfg = desk_profile(projectors="none_of_them")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_load_config_file_with_overrides(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text(serialize_config(desk_profile()))
    cfg = load_config_file(path, overrides=["train.seed=5", "train.epochs=3"])
    assert cfg.seed == 5 and cfg.epochs == 3
    with pytest.raises(ConfigError):
        load_config_file(path, overrides=["no_equals_here"])


def test_shipped_config_files_parse():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    desk = load_config_file(os.path.join(root, "desk.cfg"))
    assert desk.epochs == 200 and desk.side == 32
    paper = load_config_file(os.path.join(root, "paper.cfg"))
    assert paper.side == 224 and paper.encoder.embed_dim == 384


# -- CLI ------------------------------------------------------------------------


def _run_cli(args, cwd=None, env_extra=None):
    env = dict(os.environ)
    env.setdefault("VTCC_THREADS", "1")
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "vtcc.cli", *args],
                          capture_output=True, text=True, cwd=cwd, env=env)


def test_cli_unknown_subcommand_exits_2():
    res = _run_cli(["frobnicate"])
    assert res.returncode == 2
    assert "usage" in (res.stderr + res.stdout).lower()


def test_cli_unknown_flag_exits_2():
    res = _run_cli(["gen-data", "--what", "4"])
    assert res.returncode == 2


def test_cli_gen_data_and_train_eval_embed(tmp_path):
    data = tmp_path / "data.bin"
    res = _run_cli(["gen-data", "--k", "3", "--per-class", "8", "--side", "16",
                    "--seed", "1", "--out", str(data)])
    assert res.returncode == 0, res.stderr
    assert data.exists()

    run_dir = tmp_path / "run1"
    res = _run_cli(["train", "--data", str(data), "--out", str(run_dir),
                    "--seed", "1", "--epochs", "1", "--quiet",
                    "--set", "model.side=16", "--set", "encoder.embed_dim=16",
                    "--set", "encoder.depth=1", "--set", "encoder.heads=2",
                    "--set", "stem.conv_blocks=1",
                    "--set", "projector.hidden_dim=16",
                    "--set", "projector.instance_out_dim=8",
                    "--set", "projector.cluster_out_dim=3",
                    "--set", "train.batch_size=8"])
    assert res.returncode == 0, res.stderr
    report = json.loads((run_dir / "report.json").read_text())
    assert len(report["epochs"]) == 1

    res = _run_cli(["eval", "--ckpt", str(run_dir / "final.ckpt"),
                    "--data", str(data)])
    assert res.returncode == 0, res.stderr
    lines = res.stdout.strip().splitlines()
    assert lines[0].startswith("nmi=")
    assert lines[1].startswith("acc=")
    assert lines[2].startswith("ari=")

    out_tsv = tmp_path / "emb.tsv"
    res = _run_cli(["embed", "--ckpt", str(run_dir / "final.ckpt"),
                    "--data", str(data), "--out", str(out_tsv)])
    assert res.returncode == 0, res.stderr
    assert len(out_tsv.read_text().splitlines()) == 24 + 1


def test_cli_eval_on_missing_file_is_clean_error(tmp_path):
    res = _run_cli(["eval", "--ckpt", str(tmp_path / "none.ckpt"),
                    "--data", str(tmp_path / "none.bin")])
    assert res.returncode == 1
    assert res.stderr.startswith("error:")
    assert len(res.stderr.strip().splitlines()) == 1


def test_cli_train_bad_config_value_is_clean_error(tmp_path):
    res = _run_cli(["train", "--set", "train.batch_size=one"])
    assert res.returncode == 1
    assert res.stderr.startswith("error:")


def test_cli_print_config_round_trips():
    res = _run_cli(["print-config"])
    assert res.returncode == 0
    cfg = parse_config(res.stdout)
    assert serialize_config(cfg) == res.stdout
