"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from headpose6d import samples
from headpose6d.errors import ConfigError, DataError, DegenerateInput
from headpose6d.evaluation import evaluate
from headpose6d.labeling import DEFAULT_RMSD_MAX, label_dataset, load_landmark_json
from headpose6d.losses import geodesic_distance
from headpose6d.metrics import DEFAULT_BIN_WIDTH
from headpose6d.poses import TAGS, PoseSet, load_pose_csv, save_pose_csv
from headpose6d.regressor import HEAD_WIDTH, LOSSES, SyntheticTask, TrainConfig, train
from headpose6d.so3 import canonical_quat, gs_drop, gs_map

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

#: Minimum Euler component gap (degrees) and maximum geodesic distance (rad)
#: for the ambiguity demo to count as a witness.
AMBIGUITY_MIN_EULER_GAP = 170.0
AMBIGUITY_MAX_GEODESIC = 0.20


class UsageError(Exception):
    def __init__(self, message, parser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self)


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _config_pairs(text):
    try:
        return _parse_configs(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    parser = _Parser(prog="headpose6d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    parser.subcommands = sub.choices

    p = sub.add_parser("convert", help="convert a pose CSV to another representation")
    p.add_argument("--in", dest="input", required=True, help="input pose CSV")
    p.add_argument("--out", required=True, help="output pose CSV")
    p.add_argument("--to", required=True, choices=TAGS, help="target representation")

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth pose CSV")
    p.add_argument("--pred", required=True, help="prediction pose CSV")
    p.add_argument("--wrap", action="store_true", help="wrap angle differences to (-180, 180]")
    p.add_argument("--bin-width", type=_positive_float, default=DEFAULT_BIN_WIDTH,
                   help="interval width in degrees (default %(default)s)")
    p.add_argument("--intersect", action="store_true", help="evaluate only ids present in both files")
    p.add_argument("--json", dest="json_out", help="also write the report as JSON here")

    p = sub.add_parser("label", help="label head poses from landmark JSON")
    p.add_argument("--landmarks", required=True, help="landmark JSON file")
    p.add_argument("--out", required=True, help="output pose CSV")
    p.add_argument("--to", default="matrix", choices=TAGS, help="output representation")
    p.add_argument("--rmsd-max", type=_positive_float, default=DEFAULT_RMSD_MAX,
                   help="skip frames whose alignment rmsd exceeds this (world units)")

    p = sub.add_parser("bench", help="train regressors and compare heads/losses")
    p.add_argument("--out-dir", required=True, help="directory for history.csv and summary.json")
    p.add_argument("--configs", type=_config_pairs, default="sixd:geodesic,euler:geodesic,sixd:mse",
                   help="comma-separated head:loss pairs (default %(default)s)")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4],
                   help="comma-separated seeds, each used for task and init")
    p.add_argument("--seed", type=int, help="single seed (overrides --seeds)")
    p.add_argument("--range", dest="yaw_range", choices=("narrow", "full"), default="full")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-mse", type=float, default=1.0)
    p.add_argument("--hidden", type=_int_list, default=[64, 64],
                   help="hidden layer widths, e.g. 32,32 (width sweep)")

    p = sub.add_parser("demo-ambiguity", help="show two near-identical poses with far-apart labels")
    p.add_argument("--tolerance", type=_positive_float, default=AMBIGUITY_MAX_GEODESIC,
                   help="largest geodesic distance (rad) that counts as near-identical "
                        "(default %(default)s)")
    return parser


def _require(args, parser):
    if args.command is None:
        raise UsageError("a subcommand is required", parser)


# ---------------------------------------------------------------------------
# subcommands


def cmd_convert(args, out):
    poses = load_pose_csv(args.input)
    save_pose_csv(poses.converted(args.to), args.out)
    print(f"wrote {len(poses)} {args.to} records to {args.out}", file=out)


def cmd_eval(args, out):
    gt = load_pose_csv(args.gt)
    pred = load_pose_csv(args.pred)
    report = evaluate(gt, pred, wrap=args.wrap, bin_width=args.bin_width, intersect=args.intersect)
    out.write(report.to_table())
    if args.json_out:
        Path(args.json_out).write_text(report.to_json() + "\n", encoding="utf-8")


def cmd_label(args, out):
    template, cameras, frames = load_landmark_json(args.landmarks)
    result = label_dataset(frames, cameras, template, rmsd_max=args.rmsd_max)
    poses = PoseSet("matrix")
    for rec in result.records:
        poses.records[rec.id] = rec
    save_pose_csv(poses.converted(args.to), args.out)
    print(f"wrote {len(poses)} records to {args.out}; skipped {result.skipped} frames", file=out)


def _parse_configs(text):
    pairs = []
    for item in text.split(","):
        head, _, loss = item.strip().partition(":")
        if head not in HEAD_WIDTH or loss not in LOSSES:
            raise ConfigError(f"bad config {item!r}; use head:loss with head in "
                              f"{sorted(HEAD_WIDTH)} and loss in {list(LOSSES)}")
        pairs.append((head, loss))
    return pairs


def cmd_bench(args, out):
    pairs = args.configs
    seeds = [args.seed] if args.seed is not None else args.seeds
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = []
    with (out_dir / "history.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["head", "loss", "seed", "epoch", "heldout_error_deg", "train_loss"])
        for seed in seeds:
            task = SyntheticTask(args.samples, args.noise, args.yaw_range, seed)
            for head, loss in pairs:
                cfg = TrainConfig(args.epochs, args.batch_size, args.lr, seed, head, loss,
                                  args.weight_mse, tuple(args.hidden))
                result = train(task, cfg)
                for epoch, (err, tl) in enumerate(zip(result.history, result.train_loss), 1):
                    writer.writerow([head, loss, seed, epoch, repr(err), repr(tl)])
                runs.append({"head": head, "loss": loss, "seed": seed,
                             "initial_error_deg": result.initial_error,
                             "final_error_deg": result.final_error,
                             "degenerate": result.degenerate})
                print(f"seed {seed} {head}+{loss}: {result.initial_error:.2f} -> "
                      f"{result.final_error:.2f} deg", file=out)
    by_config = {}
    for run in runs:
        by_config.setdefault(f"{run['head']}:{run['loss']}", []).append(run["final_error_deg"])
    summary = {
        "task": {"samples": args.samples, "noise": args.noise, "range": args.yaw_range},
        "train": {"epochs": args.epochs, "batch_size": args.batch_size, "lr": args.lr,
                  "weight_mse": args.weight_mse, "hidden": list(args.hidden)},
        "runs": runs,
        "mean_final_error_deg": {k: float(np.mean(v)) for k, v in by_config.items()},
    }
    if pairs:
        ref = f"{pairs[0][0]}:{pairs[0][1]}"
        summary["wins_vs_first"] = {
            k: int(sum(a <= b for a, b in zip(by_config[ref], v)))
            for k, v in by_config.items() if k != ref
        }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")


def ambiguity_witness(max_geodesic=AMBIGUITY_MAX_GEODESIC):
    """Numbers behind ``demo-ambiguity`` as a dict."""
    left = gs_map(gs_drop(samples.LEFT_MATRIX))
    right = gs_map(gs_drop(samples.RIGHT_MATRIX))
    distance = geodesic_distance(left, right)
    euler_gap = max(abs(a - b) for a, b in zip(samples.LEFT_EULER, samples.RIGHT_EULER))
    ql, qr = canonical_quat(samples.LEFT_QUAT), canonical_quat(samples.RIGHT_QUAT)
    signs_l, signs_r = np.sign(ql), np.sign(qr)
    return {
        "geodesic_rad": distance,
        "max_euler_gap_deg": euler_gap,
        "quat_left": tuple(ql),
        "quat_right": tuple(qr),
        "quat_sign_patterns_differ": bool(np.any(signs_l != signs_r)),
        "holds": bool(distance <= max_geodesic and euler_gap >= AMBIGUITY_MIN_EULER_GAP
                      and np.any(signs_l != signs_r)),
    }


def cmd_demo_ambiguity(args, out):
    w = ambiguity_witness(args.tolerance)

    def row(label, values, fmt="{:8.3f}"):
        return f"  {label:<12}" + " ".join(fmt.format(v) for v in values)

    for name, euler, quat, mat in (("left", samples.LEFT_EULER, w["quat_left"], samples.LEFT_MATRIX),
                                   ("right", samples.RIGHT_EULER, w["quat_right"], samples.RIGHT_MATRIX)):
        print(f"{name} sample", file=out)
        print(row("euler", euler, "{:8.2f}"), file=out)
        print(row("quat wxyz", quat), file=out)
        for k in range(3):
            print(row("matrix" if k == 0 else "", mat[k]), file=out)
    print(f"geodesic distance between matrices: {w['geodesic_rad']:.4f} rad", file=out)
    print(f"largest Euler component gap: {w['max_euler_gap_deg']:.2f} deg", file=out)
    print(f"quaternion sign patterns differ: {w['quat_sign_patterns_differ']}", file=out)
    if not w["holds"]:
        print("ambiguity witness FAILED", file=sys.stderr)
        return EXIT_DATA
    print("ambiguity witness holds", file=out)
    return EXIT_OK


COMMANDS = {
    "convert": cmd_convert,
    "eval": cmd_eval,
    "label": cmd_label,
    "bench": cmd_bench,
    "demo-ambiguity": cmd_demo_ambiguity,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        _require(args, parser)
        if extra:
            parser.subcommands[args.command].error(f"unrecognized arguments: {' '.join(extra)}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    try:
        code = COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
