"""Command line interface.

``evbreak test DATA`` runs the dependence change-point test on a delimited
text file (header row, numeric columns, ``NA`` for missing) and writes a
JSON report; ``evbreak simulate CONFIG`` runs a Monte Carlo experiment
described by a JSON config (a packaged name such as ``table1_reduced`` or
a path) and writes a rate table.

Exit codes: 0 success, 1 usage error, 2 data or config error, 3 numeric
failure.  Reports avoid timestamps and environment details, so rerunning
with the same inputs and seed reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import replace
from importlib import resources

import numpy as np

from .bootstrap import run_test
from .copulas import MultivariateSample
from .cusum import GridMeasure, default_measure, field_table
from .errors import ConfigError, DataError, EvbreakError, NumericError
from .harness import load_experiment, experiment_from_dict, run_experiment
from .pickands import default_bandwidth, estimate_pickands
from .ranks import BreakSpec

__all__ = ["main", "read_dataset"]

_MIN_ROWS = 8


def read_dataset(
    path,
    missing: str = "NA",
    delimiter: str | None = None,
    index_col: str | None = None,
) -> tuple[MultivariateSample, dict]:
    """Read a delimited text file with a header row into a sample.

    Rows containing the missing token (or empty fields) are dropped and the
    remaining rows re-indexed consecutively; original labels (the index
    column if named, else 1-based file row numbers) are kept for reporting.

    Returns the sample and an info dict (columns, drop counts, digest).
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    text = raw.decode("utf-8-sig")
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: file is empty")
    if delimiter is None:
        try:
            delimiter = csv.Sniffer().sniff(lines[0], delimiters=",;\t| ").delimiter
        except csv.Error:
            delimiter = ","
    reader = csv.reader(lines, delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    if index_col is not None and index_col not in header:
        raise DataError(f"{path}: index column {index_col!r} not in header {header}")
    label_pos = header.index(index_col) if index_col is not None else None
    data_pos = [i for i in range(len(header)) if i != label_pos]
    if len(data_pos) < 2:
        raise DataError(f"{path}: need at least two data columns, found {len(data_pos)}")

    rows, labels, dropped = [], [], 0
    for line_no, rec in enumerate(reader, start=2):
        if not rec or all(not cell.strip() for cell in rec):
            continue
        if len(rec) != len(header):
            raise DataError(f"{path}: row {line_no} has {len(rec)} fields, header has {len(header)}")
        cells = [rec[i].strip() for i in data_pos]
        if any(cell == missing or cell == "" for cell in cells):
            dropped += 1
            continue
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise DataError(f"{path}: row {line_no}: cannot parse {bad!r} as a number") from None
        labels.append(rec[label_pos].strip() if label_pos is not None else str(len(rows)))

    if len(rows) < _MIN_ROWS:
        raise DataError(f"{path}: only {len(rows)} usable rows, need at least {_MIN_ROWS}")
    sample = MultivariateSample(np.asarray(rows), labels=np.asarray(labels))
    info = {
        "path": str(path),
        "sha256": digest,
        "columns": [header[i] for i in data_pos],
        "index_column": index_col,
        "rows_used": len(rows),
        "rows_dropped": dropped,
        "delimiter": delimiter,
    }
    return sample, info


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _parse_grid(text: str) -> np.ndarray:
    try:
        pts = np.asarray([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise DataError(f"--grid: {exc}") from exc
    if pts.size == 0 or (pts <= 0.0).any() or (pts >= 1.0).any():
        raise DataError("--grid needs comma-separated values strictly inside (0, 1)")
    return pts


def _parse_bandwidth(text: str) -> float | None:
    # used as an argparse type: bad values are usage errors (exit 1)
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"must be a number or 'auto', got {text!r}") from None
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _write_json(obj, stream) -> None:
    json.dump(obj, stream, sort_keys=True, indent=2)
    stream.write("\n")


def cmd_test(args) -> int:
    sample, info = read_dataset(
        args.data, missing=args.missing_token, delimiter=args.delimiter, index_col=args.index_col
    )
    n, d = sample.n, sample.d
    if args.grid is not None:
        if d != 2:
            raise DataError("--grid applies to bivariate data; higher dimensions use the default lattice")
        pts = _parse_grid(args.grid)
        measure = GridMeasure(points=pts, weights=np.full(pts.size, 1.0 / pts.size))
    else:
        measure = default_measure(d)
    breaks = BreakSpec(tuple(sorted(args.breaks)), n) if args.breaks else None
    bandwidth = args.bandwidth
    report = run_test(
        sample,
        measure=measure,
        n_boot=args.B,
        alpha=args.alpha,
        seed=args.seed,
        breaks=breaks,
        k_star=args.kstar,
        bandwidth=bandwidth,
        prefactor=args.prefactor,
    )

    grid_out = measure.points[:, 0].tolist() if d == 2 else measure.points.tolist()
    bounds = breaks.boundaries if breaks is not None else (0, n)
    segments = []
    for lo, hi in zip(bounds, bounds[1:]):
        est = estimate_pickands(sample, measure.points, k=lo + 1, l=hi)
        segments.append(
            {
                "rows": [lo + 1, hi],
                "labels": [str(sample.labels[lo]), str(sample.labels[hi - 1])],
                "values": est.values.tolist(),
            }
        )
    payload = {
        "input": info,
        "settings": {
            "B": report.n_boot,
            "alpha": args.alpha,
            "seed": args.seed,
            "grid": grid_out,
            "bandwidth": bandwidth if bandwidth is not None else default_bandwidth(n),
            "breaks": list(breaks.thetas) if breaks is not None else [],
            "k_star": args.kstar,
            "prefactor": args.prefactor,
        },
        "result": {
            "n": n,
            "d": d,
            "statistic": report.statistic,
            "p_value": report.p_value,
            "reject": report.reject,
            "threshold": report.threshold,
            "k_hat": report.k_hat,
            "break_fraction": report.break_fraction,
            "break_label": str(sample.labels[report.k_hat - 1]),
        },
        "pickands_segments": segments,
    }

    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w") as fh:
            _write_json(payload, fh)
        if args.plot_data:
            header, rows = field_table(report.field)
            with open(os.path.join(args.out, "cusum_field.csv"), "w") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(repr(v) for v in row) + "\n")
            with open(os.path.join(args.out, "pickands_curves.csv"), "w") as fh:
                fh.write("segment,row_start,row_end,t,value\n")
                for si, seg in enumerate(segments, start=1):
                    for t, v in zip(grid_out, seg["values"]):
                        fh.write(f"{si},{seg['rows'][0]},{seg['rows'][1]},{t!r},{v!r}\n")
    else:
        _write_json(payload, sys.stdout)
    return 0


def _locate_config(ref: str):
    if os.path.exists(ref):
        return load_experiment(ref)
    if os.sep not in ref and not ref.endswith(".json"):
        packaged = resources.files("evbreak").joinpath("configs", ref + ".json")
        if packaged.is_file():
            return experiment_from_dict(json.loads(packaged.read_text()))
    raise DataError(f"config {ref!r} is neither a file nor a packaged config name")


def cmd_simulate(args) -> int:
    config = _locate_config(args.config)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    if args.replications is not None:
        config = replace(config, replications=args.replications)
    if args.B is not None:
        config = replace(config, n_boot=args.B)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    table = run_experiment(config)
    print(table.pretty())
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        table.to_csv(os.path.join(args.out, "results.csv"))
    return 0


class _Parser(argparse.ArgumentParser):
    # exit code 1 for usage problems (argparse default is 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="evbreak",
        description="Change-point tests for the dependence structure of multivariate block maxima.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser(
        "test",
        help="run the dependence change-point test on a data file",
        description="Test a delimited data file (header row, numeric columns) for a "
        "change in its extreme-value dependence structure.",
    )
    p_test.add_argument("data", help="path to a delimited text file")
    p_test.add_argument(
        "--break",
        dest="breaks",
        type=float,
        action="append",
        default=[],
        metavar="FRACTION",
        help="known marginal break fraction in (0, 1); repeat for several",
    )
    p_test.add_argument("--kstar", type=int, default=None, help="evaluate at this split only")
    p_test.add_argument(
        "--grid",
        default=None,
        help="comma-separated aggregation grid in (0, 1); default 0.1..0.9",
    )
    p_test.add_argument(
        "--bandwidth",
        type=_parse_bandwidth,
        default=None,
        metavar="VALUE|auto",
        help="derivative bandwidth; 'auto' (default) uses 0.01/sqrt(n)",
    )
    p_test.add_argument("--B", type=int, default=1000, help="bootstrap replicates (default 1000)")
    p_test.add_argument("--alpha", type=float, default=0.05, help="nominal level (default 0.05)")
    p_test.add_argument("--seed", type=int, default=None, help="multiplier seed")
    p_test.add_argument("--out", default=None, metavar="DIR", help="write report files here")
    p_test.add_argument(
        "--plot-data",
        action="store_true",
        help="also write plottable CSVs of the CUSUM field and Pickands curves (needs --out)",
    )
    p_test.add_argument(
        "--prefactor",
        choices=("adapted", "plain"),
        default="adapted",
        help="leading-factor variant for break-adapted replicates",
    )
    p_test.add_argument("--missing-token", default="NA", help="missing value token (default NA)")
    p_test.add_argument("--delimiter", default=None, help="field delimiter; default: sniffed")
    p_test.add_argument("--index-col", default=None, help="name of a label column to exclude")
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser(
        "simulate",
        help="run a Monte Carlo experiment from a JSON config",
        description="Run rejection-rate experiments; CONFIG is a JSON file or a packaged "
        "config name (e.g. table1_reduced).",
    )
    p_sim.add_argument("config", help="config path or packaged name")
    p_sim.add_argument("--out", default=None, metavar="DIR", help="write results.csv here")
    p_sim.add_argument("--workers", type=int, default=None, help="worker processes (or set EVBREAK_WORKERS)")
    p_sim.add_argument("--replications", type=int, default=None, help="override replication count")
    p_sim.add_argument("--B", type=int, default=None, help="override bootstrap replicates")
    p_sim.add_argument("--seed", type=int, default=None, help="override master seed")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else (1 if exc.code in (1, 2) else int(exc.code))
    if getattr(args, "plot_data", False) and args.out is None:
        print("evbreak: error: --plot-data requires --out", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"evbreak: config error:\n{exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"evbreak: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"evbreak: numeric error: {exc}", file=sys.stderr)
        return 3
    except EvbreakError as exc:
        print(f"evbreak: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
