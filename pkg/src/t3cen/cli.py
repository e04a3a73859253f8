"""Command-line entry point: ``t3cen {gen-data,lift,analyze,equiv,train,eval}``.

Exit codes: 0 success, 1 I/O failure, 2 usage, 3 configuration, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import datasets as D
from .colorspace import RgbImage, hsl_to_rgb_array, read_ppm, rgb_to_hsl, write_ppm
from .config import ConfigFileError, normalize_key, read_config, write_config
from .groups import AXES, LUMINANCE, SATURATION, DomainError, HslGroup
from .lifting import (channel_histogram, coverage_grid, coverage_report, lift_arrays_lcer, lift_image,
                      select_order, write_coverage_csv)

log = logging.getLogger("t3cen")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3, 4
COVERS = {"sat": SATURATION, "lum": LUMINANCE}


class UsageError(Exception):
    pass


# --- argument types -----------------------------------------------------------


def int_list(text: str) -> list[int]:
    """'3,5,7' or '2..20' (inclusive range)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def orders_arg(text: str) -> tuple[int, int, int]:
    parts = [int(t) for t in text.replace("x", ",").replace("/", ",").split(",")]
    if len(parts) != 3 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"orders must be three positive integers N,M,R, got {text!r}")
    return tuple(parts)


def degree_range(text: str) -> tuple[float, float]:
    lo, hi = text.split(":", 1)
    return float(lo), float(hi)


def transform_arg(text: str) -> tuple[str, int]:
    axis, element = text.split(":", 1)
    return axis, int(element)


# --- subcommands ------------------------------------------------------------------


def _summary(ds: D.LabeledImageSet) -> str:
    return f"{ds.split}: {len(ds)} images, classes {ds.class_histogram()}"


def cmd_gen_data(args) -> dict:
    out = Path(args.out)
    written = {}
    if args.kind == "shapes":
        sets = D.shapes_splits(args.split, args.count, args.seed, args.size)
    else:
        for p in (args.images, args.labels):
            if p is not None and not Path(p).exists():
                raise UsageError(f"missing input {p}")
        sets = D.hue_shift_mnist(args.images, args.labels, args.test_count or None, args.train_range,
                                 args.test_range, args.seed)
    for name, ds in sets.items():
        ds.split = name
        path = D.write_manifest(ds, out / name)
        written[name] = json.loads(path.read_text())["content_hash"]
        print(f"{_summary(ds)} -> {path} (sha256 {written[name][:16]})")
    return written


def cmd_lift(args) -> None:
    rgb = read_ppm(args.image)
    hsl = rgb_to_hsl(rgb)
    group = HslGroup.of(*args.orders)
    out = Path(args.out) / "images"
    out.mkdir(parents=True, exist_ok=True)
    if args.model == "lcer":
        stack = hsl_to_rgb_array(lift_arrays_lcer(hsl.data, group))
    else:
        stack = lift_image(hsl, group).to_rgb()
    rows = ["i,j,k,hue_angle,sat_angle,lum_angle,file"]
    for i, j, k in group.elements():
        name = f"lift_{i:02d}_{j:02d}_{k:02d}.ppm"
        write_ppm(out / name, RgbImage(np.clip(stack[i, j, k], 0.0, 1.0)))
        a = group.angles((i, j, k))
        rows.append(f"{i},{j},{k},{a[0]:.12g},{a[1]:.12g},{a[2]:.12g},images/{name}")
    (Path(args.out) / "index.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {group.size} lifted copies to {out}")


def cmd_analyze(args) -> dict:
    cover = COVERS[args.cover]
    out = Path(args.out)
    if args.value is not None:
        rep = coverage_report(cover, args.value, args.order)
        result = {k: v for k, v in rep.row().items()}
        result["lifted_values"] = list(rep.lifted_values)
        (out / "report.json").write_text(json.dumps(result, indent=2))
        print(json.dumps(result))
        return result
    if args.dataset:
        ds = D.read_manifest(args.dataset)
        channel = 1 if args.cover == "sat" else 2
        hist = channel_histogram(ds.hsl()[:, channel], args.bins)
        values = [v for v, _ in hist]
    else:
        values = list(np.linspace(0.0, cover.c, args.grid))
        hist = [(v, 1.0) for v in values]
    reports = coverage_grid(cover, values, args.orders)
    write_coverage_csv(out / "coverage.csv", reports)
    best = select_order(cover, hist, args.orders)
    mean_density = {}
    for n in args.orders:
        dens = [r.entropy_density for r in reports if r.order == n]
        mean_density[int(n)] = float(np.mean(dens))
    result = {"cover": args.cover, "recommended_order": best, "mean_entropy_density": mean_density}
    (out / "recommendation.json").write_text(json.dumps(result, indent=2))
    print(f"recommended {args.cover} order: {best}")
    return result


def cmd_equiv(args) -> dict:
    from . import equivariance as E

    out = Path(args.out)
    images = E.synthetic_test_images(args.images, args.size, args.seed)
    seeds = list(range(args.seed, args.seed + args.seeds))
    results = E.equivariance_sweep(args.model, args.axis, args.orders, images, seeds, args.elements, args.depth)
    E.write_results_csv(out / "equivariance.csv", results)
    summary = E.summarize(results)[args.model]
    if args.model != "rgb_shift" and args.axis != "hue":
        summary["restoration_error"] = E.lifting_restoration_error(args.model, args.axis, args.shift,
                                                                   hsl_to_rgb_array(images))
        summary["restoration_shift"] = args.shift
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary))
    return summary


def _network_config(args, num_classes: int):
    from .gcnn.network import NetworkConfig

    return NetworkConfig(orders=args.orders, width=args.width, depth=args.depth, num_classes=num_classes,
                         model=args.model, encoding=args.encoding, pool=args.pool, seed=args.seed, dtype=args.dtype)


def _model_input(net, ds: D.LabeledImageSet) -> np.ndarray:
    return ds.images if net.cfg.model == "rgb_shift" else ds.hsl()


def cmd_train(args) -> dict:
    from .gcnn.network import build_network, save_checkpoint
    from .gcnn.train import TrainConfig, error_rate, save_metrics, train

    out = Path(args.out)
    train_set = D.read_manifest(args.train)
    tests = {Path(p).name: D.read_manifest(p) for p in (args.test or [])}
    net = build_network(_network_config(args, len(train_set.classes)), check=not args.no_budget_check)
    hyper = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, momentum=args.momentum,
                        seed=args.seed)
    evals = {name: (_model_input(net, ds), ds.labels) for name, ds in tests.items()}
    metrics_path = out / "metrics.jsonl"
    history = train(net, _model_input(net, train_set), train_set.labels, hyper, evals)
    save_metrics(metrics_path, history)
    (out / "checkpoints").mkdir(exist_ok=True)
    save_checkpoint(out / "checkpoints" / "model.t3cen", net)
    final = {f"{name}_error": error_rate(net, x, y) for name, (x, y) in evals.items()}
    final["parameters"] = net.num_parameters
    (out / "final.json").write_text(json.dumps(final, indent=2))
    print(json.dumps(final))
    return final


def cmd_eval(args) -> dict:
    from . import equivariance as E
    from .gcnn.network import load_checkpoint
    from .gcnn.train import error_rate

    net = load_checkpoint(args.checkpoint)
    ds = D.read_manifest(args.data)
    x = _model_input(net, ds)
    phase = None
    if args.transform:
        axis, element = args.transform
        names = E.RGB_AXES if net.cfg.model == "rgb_shift" else AXES
        if axis not in names:
            raise UsageError(f"transform axis must be one of {names}")
        order = net.cfg.orders[names.index(axis)]
        x, phase = E.transform_input(net.cfg.model, axis, element, order, x)
    result = {"data": str(args.data), "error": error_rate(net, x, ds.labels, phase=phase), "count": len(ds)}
    if args.transform:
        result["transform"] = list(args.transform)
    (Path(args.out) / "eval.json").write_text(json.dumps(result, indent=2))
    print(json.dumps(result))
    return result


# --- parser -----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags given on the command line win")
    p.add_argument("--out", default="runs/latest", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_network(p: argparse.ArgumentParser) -> None:
    p.add_argument("--orders", type=orders_arg, default=(1, 1, 1), help="group orders N,M,R")
    p.add_argument("--width", type=int, default=27)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--model", choices=("double_cover", "lcer", "rgb_shift"), default="double_cover")
    p.add_argument("--encoding", choices=("rgb", "hsl"), default="rgb")
    p.add_argument("--pool", choices=("max", "mean"), default="max")
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="t3cen", description="Color-equivariant CNN toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a shapes or hue-shift MNIST dataset as manifests")
    _add_common(p)
    p.add_argument("kind", choices=("shapes", "mnist-hue"))
    p.add_argument("--split", choices=D.SPLITS, default="hue-abc")
    p.add_argument("--count", type=int, default=600, help="images per shapes split")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--images", help="MNIST IDX images, .gz allowed (default: bundled 5000-digit sample)")
    p.add_argument("--labels", help="MNIST IDX labels, .gz allowed (default: bundled sample)")
    p.add_argument("--test-count", type=int, default=0, help="held-out digits (default: one fifth)")
    p.add_argument("--train-range", type=degree_range, default=(0.0, 120.0), help="hue degrees lo:hi")
    p.add_argument("--test-range", type=degree_range, default=(120.0, 360.0), help="hue degrees lo:hi")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("lift", help="dump the lifted copies of a PPM image")
    _add_common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--orders", type=orders_arg, default=(4, 1, 1))
    p.add_argument("--model", choices=("double_cover", "lcer"), default="double_cover")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("analyze", help="partition-entropy coverage grid and order recommendation")
    _add_common(p)
    p.add_argument("--cover", choices=tuple(COVERS), default="sat")
    p.add_argument("--orders", type=int_list, default=list(range(2, 21)), help="candidates, '2..20' or '2,3,4'")
    p.add_argument("--grid", type=int, default=101, help="uniform grid size")
    p.add_argument("--dataset", help="manifest directory whose channel histogram weights the grid")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--value", type=float, help="report a single value (with --order)")
    p.add_argument("--order", type=int, default=4)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("equiv", help="equivariance-error sweep and restoration error")
    _add_common(p)
    p.add_argument("--model", choices=("double_cover", "lcer", "rgb_shift"), default="double_cover")
    p.add_argument("--axis", default="sat")
    p.add_argument("--orders", type=int_list, default=[3, 5, 7, 9, 11, 15])
    p.add_argument("--images", type=int, default=20)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seeds", type=int, default=8, help="networks per order")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--elements", choices=("step", "all"), default="step")
    p.add_argument("--shift", type=float, default=0.75, help="restoration shift")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("train", help="train a network on a manifest dataset")
    _add_common(p)
    _add_network(p)
    p.add_argument("--train", required=True, help="training manifest directory")
    p.add_argument("--test", action="append", help="evaluation manifest directory (repeatable)")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--no-budget-check", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest dataset")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--transform", type=transform_arg, help="act on the inputs first, e.g. hue:1")
    p.set_defaults(func=cmd_eval)
    return ap


def _config_path(argv: list[str]):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv`` with defaults taken from ``--config`` when given."""
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    subparsers = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    if path is None or command not in subparsers:
        return parser.parse_args(argv)
    sub = subparsers[command]
    actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in read_config(path).items():
        key = normalize_key(key)
        if key in ("config", "command", "func"):
            continue
        action = actions.get(key)
        if action is None or key == "help":
            raise ConfigFileError(f"{path}: unknown key {key!r} for {command}")
        if action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigFileError(f"{path}: bad value for {key!r}: {exc}") from exc
        if action.choices is not None and value not in action.choices:
            raise ConfigFileError(f"{path}: {key!r} must be one of {list(action.choices)}")
        defaults[key] = [value] if isinstance(action, argparse._AppendAction) else value  # noqa: SLF001
        # a required flag may come from the file
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _thread_limit():
    n = os.environ.get("T3CEN_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigFileError as exc:
        print(f"t3cen: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"t3cen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    from .gcnn.network import ConfigError
    from .gcnn.train import NumericError

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        resolved = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
        write_config(out / "resolved-config.txt", resolved)
        with _thread_limit():
            args.func(args)
    except UsageError as exc:
        print(f"t3cen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ConfigFileError, DomainError) as exc:
        print(f"t3cen: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"t3cen: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, D.IdxParseError) as exc:
        print(f"t3cen: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
