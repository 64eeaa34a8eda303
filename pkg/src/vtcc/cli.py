"""Command-line entry points: gen-data, train, eval, embed, gradcheck."""

from __future__ import annotations

import argparse
import sys

from .config import desk_profile, load_config_file, serialize_config
from .errors import VtccError


def _build_parser():
    p = argparse.ArgumentParser(prog="vtcc",
                                description="Contrastive clustering engine")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic pattern dataset")
    g.add_argument("--k", type=int, default=4, help="number of classes")
    g.add_argument("--per-class", type=int, default=128)
    g.add_argument("--side", type=int, default=32)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a model end to end")
    t.add_argument("--config", help="config file (key=value lines)")
    t.add_argument("--data", help="dataset path override")
    t.add_argument("--data-kind", choices=["binary_records", "image_dir", "synthetic"])
    t.add_argument("--out", help="output directory override")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="additional config overrides")
    t.add_argument("--quiet", action="store_true")

    e = sub.add_parser("eval", help="evaluate a checkpoint on labeled data")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--data-kind", default="binary_records",
                   choices=["binary_records", "image_dir", "synthetic"])

    m = sub.add_parser("embed", help="export per-sample embeddings to TSV")
    m.add_argument("--ckpt", required=True)
    m.add_argument("--data", required=True)
    m.add_argument("--data-kind", default="binary_records",
                   choices=["binary_records", "image_dir", "synthetic"])
    m.add_argument("--out", required=True)

    c = sub.add_parser("print-config", help="print the default desk profile")

    gc = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    gc.add_argument("--quiet", action="store_true")
    return p


def _cmd_gen_data(args):
    from .data import generate_synthetic_dataset

    ds = generate_synthetic_dataset(args.k, args.per_class, args.side,
                                    args.seed, args.out)
    print(f"wrote {ds.n} records ({args.k} classes, side {args.side}) to {args.out}")
    return 0


def _cmd_train(args):
    from .trainer import train

    overrides = list(args.overrides)
    if args.data:
        overrides.append(f"train.data={args.data}")
    if args.data_kind:
        overrides.append(f"train.data_kind={args.data_kind}")
    if args.out:
        overrides.append(f"train.out={args.out}")
    if args.seed is not None:
        overrides.append(f"train.seed={args.seed}")
    if args.epochs is not None:
        overrides.append(f"train.epochs={args.epochs}")
    if args.config:
        cfg = load_config_file(args.config, overrides)
    else:
        cfg = desk_profile()
        from .config import apply_entry
        for ov in overrides:
            key, value = ov.split("=", 1)
            apply_entry(cfg, key.strip(), value.strip())
        cfg.validate()
    log = None if args.quiet else (lambda msg: print(msg, flush=True))
    report = train(cfg, resume=args.resume, log=log)
    print(f"done: {len(report.epochs)} epochs, "
          f"final loss_total={report.epochs[-1]['loss_total']:.4f}, "
          f"report at {cfg.out}/report.json")
    return 0


def _cmd_eval(args):
    from .data import load_dataset
    from .trainer import evaluate_model, load_train_checkpoint

    cfg, model, _adam, _epoch, _step = load_train_checkpoint(args.ckpt)
    dataset = load_dataset(args.data, args.data_kind)
    rep = evaluate_model(model, cfg, dataset)
    print(f"nmi={rep.nmi:.6f}")
    print(f"acc={rep.acc:.6f}")
    print(f"ari={rep.ari:.6f}")
    print(f"cluster_sizes={','.join(str(s) for s in rep.cluster_sizes)}")
    print(f"mass_entropy={rep.extras['mass_entropy']:.6f}")
    return 0


def _cmd_embed(args):
    from .data import load_dataset
    from .trainer import export_embeddings, load_train_checkpoint

    cfg, model, _adam, _epoch, _step = load_train_checkpoint(args.ckpt)
    dataset = load_dataset(args.data, args.data_kind)
    export_embeddings(model, cfg, dataset, args.out)
    print(f"wrote embeddings for {dataset.n} samples to {args.out}")
    return 0


def _cmd_gradcheck(args):
    from .gradcheck import run_all

    progress = None if args.quiet else (lambda msg: print(msg, flush=True))
    ok, _results, _e2e = run_all(progress=progress)
    print("gradcheck: PASS" if ok else "gradcheck: FAIL")
    return 0 if ok else 1


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen-data": _cmd_gen_data,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "embed": _cmd_embed,
        "gradcheck": _cmd_gradcheck,
        "print-config": lambda a: (print(serialize_config(desk_profile()), end=""), 0)[1],
    }
    try:
        return handlers[args.command](args)
    except VtccError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
