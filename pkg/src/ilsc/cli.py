"""Command-line entry point: ``ilsc <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 I/O error.
Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from . import bayesnet as bn
from . import io
from .evaluation import evaluate, run_experiment
from .speckle import SpeckleParams, generate_speckle
from .texture import featurize_batch

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cmd_simulate(args):
    params = SpeckleParams(
        width=args.width,
        height=args.height,
        mode=args.mode,
        n=args.n,
        pupil_radius=args.pupil_radius,
        blur_sigma=args.blur_sigma,
        seed=args.seed,
    )
    io.write_image(generate_speckle(params), args.out, ascii=args.ascii)


def _cmd_features(args):
    images = [io.read_image(p) for p in io.list_images(args.images)]
    data = featurize_batch(images, args.class_label, args.progress, args.roi_size, args.stride)
    io.write_dataset(data, args.out, comment=io.FEATURE_COMMENT)


def _cmd_train(args):
    data = io.read_dataset(args.data)
    net = bn.train(data, args.t, args.bins, args.method, _significance(args), args.alpha)
    io.save_model(net, args.model)


def _cmd_classify(args):
    net = io.load_model(args.model)
    data = io.read_dataset(args.data)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["row", "class", "predicted"] + [f"p_{c}" for c in net.class_values])
        for i in range(len(data)):
            label, post = bn.classify(net, data.row(i))
            w.writerow([i + 1, data.labels[i], label] + [io.format_number(p) for p in post.values()])
    finally:
        if out is not sys.stdout:
            out.close()


def _cmd_evaluate(args):
    net = io.load_model(args.model)
    report = evaluate(net, io.read_dataset(args.data), args.positive_class)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_discover_links(args):
    data = io.read_dataset(args.data)
    spec = bn.fit_discretization(data, args.method, args.bins)
    skeleton, report = bn.discover_links(bn.apply_discretization(spec, data), args.t, _significance(args))
    io.write_link_report(report, args.report)
    if args.skeleton:
        Path(args.skeleton).write_text(json.dumps(io.skeleton_to_dict(skeleton), indent=2) + "\n", encoding="utf-8")


def _cmd_experiment(args):
    config = io.load_config(args.config)
    if args.seed is not None:
        config = type(config).from_dict({**config.to_dict(), "seed": args.seed})
    tables = io.read_group_tables(config, Path(args.config).parent)
    result = run_experiment(config, tables)
    for path in io.write_experiment(result, args.outdir):
        print(path, file=sys.stderr)


def _significance(args):
    return None if args.significance <= 0 else args.significance


def _add_learning_flags(p, with_bins=True):
    p.add_argument("--t", type=float, default=bn.DEFAULT_T, help="link threshold in bits")
    p.add_argument(
        "--significance",
        type=float,
        default=bn.DEFAULT_SIGNIFICANCE,
        help="G-test level for dependence; 0 disables the test",
    )
    if with_bins:
        p.add_argument("--bins", type=int, default=3)
        p.add_argument("--method", choices=[m.value for m in bn.Method], default="eqfreq")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ilsc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print artifact format versions")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic speckle image")
    p.add_argument("--mode", choices=["phasor", "pupil"], default="pupil")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--n", type=int, default=1000, help="phasors per pixel (phasor mode)")
    p.add_argument("--pupil-radius", type=float, default=0.2, help="fraction of the sampling rate (pupil mode)")
    p.add_argument("--blur-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ascii", action="store_true", help="write P2 instead of P5")
    p.add_argument("--out", required=True, help=".pgm or .spkl")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("features", help="texture features for a chronological image series")
    p.add_argument("--images", required=True, help="directory, list file, or comma-separated paths")
    p.add_argument("--class", dest="class_label", required=True)
    p.add_argument("--progress", action="store_true")
    p.add_argument("--roi-size", type=int, default=30)
    p.add_argument("--stride", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="learn a classifier from a feature CSV")
    p.add_argument("--data", required=True)
    _add_learning_flags(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="predict classes for a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="confusion-matrix metrics on a labelled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--positive-class", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("discover-links", help="find attributes linked to progress")
    p.add_argument("--data", required=True)
    _add_learning_flags(p)
    p.add_argument("--report", required=True)
    p.add_argument("--skeleton")
    p.set_defaults(func=_cmd_discover_links)

    p = sub.add_parser("experiment", help="run the pairwise-group and progress experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.version:
            print(f"ilsc {__version__}")
            for name, version in io.FORMAT_VERSIONS.items():
                print(f"{name} {version}")
            return EXIT_OK
        if args.command is None:
            raise UsageError("ilsc: a command is required")
        args.func(args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
