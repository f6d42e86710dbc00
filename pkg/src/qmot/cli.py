"""``qmot`` command line.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 solver gave up
(exact solver edge cap exceeded).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .config import ConfigError, load_config
from .graph import GraphError, OracleCapError, is_maximal, matching_weight, read_graph
from .metrics import MetricError, evaluate
from .mot_io import DataError, format_track_table, read_detections, read_hashes, read_track_table
from .qubo import QuboError, build_matching_qubo, decode
from .scenario import ScenarioSpec, gen_scenario
from .solvers import REVERSE_SWEEP_FRACTION, SolverConfig, SolverError, run_solver
from .tracking.detections import Detection, FrameDetections
from .tracking.phash import crop_hash, load_gray
from .tracking.tracker import TrackerConfig, TrackingError, run_tracker

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
IMAGE_SUFFIXES = (".pgm", ".ppm", ".png", ".jpg", ".jpeg", ".bmp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# option -> (type, default); defaults live here so a config file can fill unset flags
OPTIONS: dict[str, tuple[type, object]] = {
    "solver": (str, "sa"), "lambda": (float, 0.7), "sweeps": (int, None), "trials": (int, None),
    "seed": (int, 0), "integrator": (str, "cyclic"), "models": (str, "both"), "grid": (str, "4x4"),
    "frame_dims": (str, "640x360"), "max_age": (int, 3), "min_hits": (int, 2),
    "iou_gate": (float, 0.1), "threshold": (float, 0.5), "sizes": (str, "4,6,8"),
    "degree": (int, 4), "graphs": (int, 10), "trials_per_graph": (int, 250),
    "multiplicities": (str, "1,2,3,5"), "flip_prob": (float, 0.05), "ra_sweeps": (int, None),
    "turning_point": (float, None), "oracle_cap": (int, None), "objects": (int, 5),
    "frames": (int, 200), "jitter": (float, 1.0), "dropout": (float, 0.0), "hash_noise": (int, 2),
}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from ``--config`` and then from the built-in defaults."""
    values = load_config(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(values) - set(OPTIONS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for name, (cast, default) in OPTIONS.items():
        if not hasattr(args, name) or getattr(args, name) is not None:
            continue
        if name in values:
            try:
                setattr(args, name, cast(values[name]))
            except ValueError:
                raise ConfigError(f"bad value for {name}: {values[name]!r}") from None
        else:
            setattr(args, name, default)
    return args


def _pair(text: str, sep: str = "x") -> tuple[int, int]:
    try:
        a, b = (int(p) for p in text.lower().split(sep))
    except ValueError:
        raise UsageError(f"expected AxB, got {text!r}") from None
    if a < 1 or b < 1:
        raise UsageError(f"dimensions must be positive, got {text!r}")
    return a, b


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solver_config(args, **overrides) -> SolverConfig:
    kw = dict(solver=args.solver, sweeps=args.sweeps, trials=args.trials, seed=args.seed,
              lam=args.__dict__["lambda"])
    if getattr(args, "turning_point", None) is not None:
        kw["turning_point"] = args.turning_point
    if getattr(args, "oracle_cap", None) is not None:
        kw["oracle_cap"] = args.oracle_cap
    kw.update(overrides)
    return SolverConfig(**kw)


def cmd_solve(args) -> int:
    graph = read_graph(args.graph)
    problem = build_matching_qubo(graph, args.__dict__["lambda"])
    result = run_solver(problem, _solver_config(args))
    m = decode(problem, result.best_state)[0].matching()
    lines = [
        f"solver: {args.solver}",
        "matching: " + " ".join(f"{u}-{v}" for u, v in m.sorted_edges()),
        f"weight: {matching_weight(graph, m)!r}",
        f"energy: {result.best_energy!r}",
        f"maximal: {str(is_maximal(graph, m)).lower()}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _frame_images(directory: Path) -> dict[int, Path]:
    out = {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() in IMAGE_SUFFIXES:
            try:
                out[int(p.stem)] = p
            except ValueError:
                continue
    return out


def _hash_from_images(frames: list[FrameDetections], directory: Path) -> list[FrameDetections]:
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    images = _frame_images(directory)
    out = []
    for fd in frames:
        if fd.frame not in images:
            raise DataError(f"no image for frame {fd.frame} in {directory}")
        gray = load_gray(images[fd.frame])
        out.append(FrameDetections(fd.frame, tuple(
            Detection(d.box, d.confidence, crop_hash(gray, d.box)) for d in fd.detections)))
    return out


def cmd_track(args) -> int:
    hashes = read_hashes(args.hashes) if args.hashes else None
    frames = read_detections(args.detections, hashes)
    if args.images and not args.hashes:
        frames = _hash_from_images(frames, Path(args.images))
    models = {"iou": ("iou",), "hash": ("hash",), "both": ("iou", "hash")}.get(args.models)
    if models is None:
        raise UsageError(f"--models must be iou, hash or both, not {args.models!r}")
    width, height = _pair(args.frame_dims)
    config = TrackerConfig(models=models, integrator=args.integrator,
                           solver=_solver_config(args), max_age=args.max_age,
                           min_hits=args.min_hits, iou_gate=args.iou_gate, grid=_pair(args.grid),
                           frame_dims=(float(width), float(height)))
    run = run_tracker(frames, config)
    tracks_text = format_track_table(run.table)
    summary = [f"tracks: {run.num_tracks}"]
    if args.solver == "rsa":
        ws = run.warm_start
        summary.append(f"warm_start_bit_error: {ws.error_rate:.6f} ({ws.wrong_bits}/{ws.total_bits})")
    if args.gt:
        report = evaluate(read_track_table(args.gt), run.table, run.num_tracks, args.threshold)
        summary.append(report.to_text().rstrip("\n"))
    summary_text = "\n".join(summary) + "\n"
    if args.out:
        Path(args.out).write_text(tracks_text)
        sys.stdout.write(summary_text)
    else:
        sys.stdout.write(tracks_text)
        sys.stderr.write(summary_text)
    return EXIT_OK


def _bench_spec(args) -> bench.BenchmarkSpec:
    kw = dict(sizes=_ints(args.sizes), degree=args.degree, graphs_per_n=args.graphs,
              trials_per_graph=args.trials_per_graph, multiplicities=_ints(args.multiplicities),
              flip_prob=args.flip_prob, seed=args.seed)
    if args.oracle_cap is not None:
        kw["oracle_cap"] = args.oracle_cap
    try:
        return bench.BenchmarkSpec(**kw)
    except (ValueError, GraphError) as exc:
        raise UsageError(str(exc)) from None


def cmd_bench_error(args) -> int:
    spec = _bench_spec(args)
    if args.solver not in ("sa", "sqa"):
        raise UsageError("bench-error runs forward solvers only (sa or sqa)")
    rows = bench.run_error_rate_experiment(spec, _solver_config(args), args.integrator)
    _emit(bench.rows_to_csv(rows, bench.ERROR_COLUMNS, args.timing), args.out)
    return EXIT_OK


def cmd_bench_reverse(args) -> int:
    spec = _bench_spec(args)
    fa = _solver_config(args, solver="sa", trials=1)
    ra_sweeps = args.ra_sweeps
    if ra_sweeps is None and args.sweeps is not None:
        ra_sweeps = max(1, round(REVERSE_SWEEP_FRACTION * args.sweeps))
    ra = _solver_config(args, solver="rsa", sweeps=ra_sweeps, trials=1)
    rows = bench.run_reverse_experiment(spec, fa, ra, args.integrator)
    _emit(bench.rows_to_csv(rows, bench.REVERSE_COLUMNS, args.timing), args.out)
    return EXIT_OK


def cmd_gen_scenario(args) -> int:
    width, height = _pair(args.frame_dims)
    try:
        spec = ScenarioSpec(num_objects=args.objects, frame_count=args.frames,
                            frame_dims=(float(width), float(height)), jitter=args.jitter,
                            dropout=args.dropout, hash_noise_bits=args.hash_noise,
                            crossing=args.crossing)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    gen_scenario(spec, args.seed).write(args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate(read_track_table(args.gt), read_track_table(args.tracks), args.nt,
                      args.threshold)
    _emit(report.to_csv() if args.format == "csv" else report.to_text(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmot", description="Multiplexed QUBO matching for object tracking.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, solver=True):
        p.add_argument("--config", help="key=value file supplying defaults for unset flags")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (default: stdout)")
        if solver:
            p.add_argument("--solver", choices=SolverConfig.SOLVERS)
            p.add_argument("--lambda", type=float, help="constraint penalty weight (default 0.7)")
            p.add_argument("--sweeps", type=int)
            p.add_argument("--trials", type=int)
            p.add_argument("--turning-point", type=float,
                           help="reverse-anneal turning point as a fluctuation level in (0, 1]")
            p.add_argument("--oracle-cap", type=int, help="edge limit for the exact solver")

    p = sub.add_parser("solve", help="solve one matching graph file")
    p.add_argument("graph")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("track", help="track a MOT detection file")
    p.add_argument("detections")
    p.add_argument("--hashes", help="frame,det_index,hash_hex sidecar")
    p.add_argument("--images", help="directory of frame images named by frame number")
    p.add_argument("--gt", help="ground truth for a metric report")
    p.add_argument("--models", choices=("iou", "hash", "both"))
    p.add_argument("--integrator", choices=("none", "majority", "cyclic"))
    p.add_argument("--grid", help="location-code grid ROWSxCOLS (default 4x4)")
    p.add_argument("--frame-dims", help="frame WIDTHxHEIGHT (default 640x360)")
    p.add_argument("--max-age", type=int)
    p.add_argument("--min-hits", type=int)
    p.add_argument("--iou-gate", type=float)
    p.add_argument("--threshold", type=float, help="IoU threshold for evaluation")
    common(p)
    p.set_defaults(func=cmd_track)

    for name, func, help_ in (("bench-error", cmd_bench_error, "error rate vs multiplicity"),
                              ("bench-reverse", cmd_bench_reverse, "forward vs reverse annealing")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--sizes", help="comma-separated graph sizes (default 4,6,8)")
        p.add_argument("--degree", type=int)
        p.add_argument("--graphs", type=int, help="graphs per size (default 10)")
        p.add_argument("--trials-per-graph", type=int)
        p.add_argument("--multiplicities", help="comma-separated P values (default 1,2,3,5)")
        p.add_argument("--flip-prob", type=float)
        p.add_argument("--integrator", choices=("none", "majority", "cyclic"))
        p.add_argument("--timing", action="store_true", help="include wall-clock columns")
        if name == "bench-reverse":
            p.add_argument("--ra-sweeps", type=int)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("gen-scenario", help="write a synthetic tracking scene")
    p.add_argument("--objects", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--frame-dims")
    p.add_argument("--jitter", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--hash-noise", type=int, help="bits flipped per detection hash")
    p.add_argument("--crossing", action="store_true")
    common(p, solver=False)
    p.set_defaults(func=cmd_gen_scenario)

    p = sub.add_parser("eval", help="score a tracks file against ground truth")
    p.add_argument("tracks")
    p.add_argument("gt")
    p.add_argument("--threshold", type=float)
    p.add_argument("--nt", type=int, help="tracked-object count (default: distinct track ids)")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    common(p, solver=False)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.command == "gen-scenario" and not args.out:
            raise UsageError("gen-scenario needs --out DIR")
        return args.func(_resolve(args))
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except OracleCapError as exc:
        sys.stderr.write(f"qmot: {exc}\n")
        return EXIT_SOLVER
    except (SolverError, TrackingError) as exc:
        sys.stderr.write(f"qmot: {exc}\n")
        return EXIT_USAGE
    except (ConfigError, DataError, GraphError, QuboError, MetricError, OSError) as exc:
        sys.stderr.write(f"qmot: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
