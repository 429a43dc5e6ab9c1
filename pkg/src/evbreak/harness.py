"""Monte Carlo harness for size and power experiments.

An experiment is a list of cells (scenario plus test settings) replicated
many times.  Random streams are keyed by ``(master seed, replication
index, purpose)``, never by worker id, so rejection rates are identical no
matter how many processes run them; purposes 0 and 1 separate data
generation from multiplier draws.  Result tables can be rendered as CSV
(stable bytes, no timing fields) or pretty-printed with timings.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
import io
import json
import math
import multiprocessing
import os
import time

import numpy as np

from .bootstrap import run_test
from .copulas import (
    DgpScenario,
    GevParams,
    GumbelHougaardParams,
    KhoudrajiParams,
    NormalParams,
    Segment,
    generate_scenario,
    gumbel_vartheta_for_tau,
)
from .errors import ConfigError, DataError
from .ranks import BreakSpec

__all__ = [
    "TestSpec",
    "CellSpec",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "iid_cell",
    "dependence_break_cell",
    "margin_break_cell",
    "run_experiment",
    "experiment_from_dict",
    "load_experiment",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "EVBREAK_WORKERS"

_PURPOSE_DATA = 0
_PURPOSE_MULTIPLIERS = 1


@dataclass(frozen=True)
class TestSpec:
    """Which variant of the test a cell runs.

    ``thetas`` switches to the break-adapted statistic, ``k_star`` to the
    fixed-split statistic; both may be combined.  Empty settings give the
    plain max-over-splits test.
    """

    __test__ = False  # not a pytest class, despite the name

    thetas: tuple[float, ...] = ()
    k_star: int | None = None
    prefactor: str = "adapted"

    def __post_init__(self) -> None:
        object.__setattr__(self, "thetas", tuple(float(v) for v in self.thetas))
        if self.prefactor not in ("adapted", "plain"):
            raise ConfigError(f"prefactor must be 'adapted' or 'plain', got {self.prefactor!r}")

    @property
    def variant(self) -> str:
        parts = []
        if self.thetas:
            parts.append("theta(" + ",".join(format(v, "g") for v in self.thetas) + ")")
        if self.k_star is not None:
            parts.append(f"kstar({self.k_star})")
        return "+".join(parts) if parts else "plain"


@dataclass(frozen=True)
class CellSpec:
    """One experiment cell: a scenario and the test applied to its draws."""

    label: str
    scenario: DgpScenario
    test: TestSpec = TestSpec()


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment: cells, replication count, and shared settings."""

    name: str
    cells: tuple[CellSpec, ...]
    replications: int
    n_boot: int = 1000
    alpha: float = 0.05
    seed: int = 0
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ConfigError("experiment needs at least one cell")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        if self.n_boot < 1:
            raise ConfigError("n_boot must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class ResultRow:
    """Rejection summary of one cell."""

    label: str
    n: int
    variant: str
    replications: int
    rejections: int
    rate: float
    std_error: float


@dataclass(frozen=True)
class ResultTable:
    """Experiment results; CSV output is byte-stable across worker counts."""

    name: str
    alpha: float
    n_boot: int
    seed: int
    rows: tuple[ResultRow, ...]
    wall_time: float

    _FIELDS = ("label", "n", "variant", "replications", "rejections", "rate", "std_error")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(",".join(self._FIELDS) + "\n")
        for row in self.rows:
            cells = [
                row.label,
                str(row.n),
                row.variant,
                str(row.replications),
                str(row.rejections),
                repr(row.rate),
                repr(row.std_error),
            ]
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def pretty(self) -> str:
        width = max([len(r.label) for r in self.rows] + [len("cell")])
        lines = [
            f"experiment: {self.name}  (alpha={self.alpha:g}, B={self.n_boot}, "
            f"seed={self.seed})",
            f"{'cell':<{width}}  {'n':>5}  {'variant':<16}  {'reject':>7}  {'rate':>7}  {'se':>7}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.label:<{width}}  {r.n:>5}  {r.variant:<16}  "
                f"{r.rejections:>4}/{r.replications:<4}  {100 * r.rate:>6.1f}%  {100 * r.std_error:>6.2f}%"
            )
        lines.append(f"wall time: {self.wall_time:.1f} s")
        return "\n".join(lines)


def iid_cell(label: str, n: int, copula, test: TestSpec = TestSpec()) -> CellSpec:
    """A stationary cell: ``n`` i.i.d. rows from one copula (size studies)."""
    scenario = DgpScenario(n=n, segments=(Segment(0.0, 1.0, copula),))
    return CellSpec(label=label, scenario=scenario, test=test)


def dependence_break_cell(
    label: str,
    n: int,
    copula_before,
    copula_after,
    break_at: float = 0.5,
    test: TestSpec = TestSpec(),
) -> CellSpec:
    """A cell whose copula changes at the given sample fraction."""
    scenario = DgpScenario(
        n=n,
        segments=(
            Segment(0.0, break_at, copula_before),
            Segment(break_at, 1.0, copula_after),
        ),
    )
    return CellSpec(label=label, scenario=scenario, test=test)


def margin_break_cell(
    label: str,
    n: int,
    tau: float,
    delta_mu: float,
    break_at: float = 0.5,
    base_margin: GevParams = GevParams(20.0, 10.0, 0.25),
    test: TestSpec = TestSpec(),
) -> CellSpec:
    """A cell with constant dependence but a location shift in margin 1.

    Margin 1 jumps from ``base_margin`` to the same GEV shifted by
    ``delta_mu`` at the break; margin 2 stays standard normal; the copula
    has Kendall's tau ``tau`` throughout.
    """
    copula = GumbelHougaardParams(gumbel_vartheta_for_tau(tau))
    before = (base_margin, NormalParams())
    after = (replace(base_margin, mu=base_margin.mu + delta_mu), NormalParams())
    scenario = DgpScenario(
        n=n,
        segments=(
            Segment(0.0, break_at, copula, margins=before),
            Segment(break_at, 1.0, copula, margins=after),
        ),
    )
    return CellSpec(label=label, scenario=scenario, test=test)


def _replicate_outcome(task) -> bool:
    cell, rep, seed, n_boot, alpha = task
    data_rng = np.random.default_rng(np.random.SeedSequence([seed, rep, _PURPOSE_DATA]))
    sample = generate_scenario(cell.scenario, rng=data_rng)
    mult_rng = np.random.default_rng(np.random.SeedSequence([seed, rep, _PURPOSE_MULTIPLIERS]))
    breaks = BreakSpec(cell.test.thetas, cell.scenario.n) if cell.test.thetas else None
    report = run_test(
        sample,
        n_boot=n_boot,
        alpha=alpha,
        seed=mult_rng,
        breaks=breaks,
        k_star=cell.test.k_star,
        prefactor=cell.test.prefactor,
    )
    return report.reject


def resolve_workers(workers: int | None) -> int:
    """Explicit value, else the environment variable, else the CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV_VAR, "").strip()
        if env:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer, got {env!r}") from exc
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(f"worker count must be positive, got {workers}")
    return workers


def _run_tasks(tasks: list, workers: int) -> list:
    if workers == 1:
        return [_replicate_outcome(t) for t in tasks]
    # spawn keeps forked BLAS state out of the workers; pin their thread
    # pools to one so results do not depend on core availability
    pinned = {"OMP_NUM_THREADS": "1", "OPENBLAS_NUM_THREADS": "1", "MKL_NUM_THREADS": "1"}
    saved = {k: os.environ.get(k) for k in pinned}
    os.environ.update(pinned)
    try:
        ctx = multiprocessing.get_context("spawn")
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            return list(pool.map(_replicate_outcome, tasks, chunksize=chunk))
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Run all cells of an experiment and summarise rejection rates.

    Replications are distributed over worker processes; see
    :func:`resolve_workers` for how the count is chosen.  The returned
    table is identical for any worker count and a fixed seed.
    """
    workers = resolve_workers(config.workers)
    start = time.perf_counter()
    tasks = [
        (cell, rep, config.seed, config.n_boot, config.alpha)
        for cell in config.cells
        for rep in range(config.replications)
    ]
    outcomes = _run_tasks(tasks, workers)
    rows = []
    per_cell = config.replications
    for idx, cell in enumerate(config.cells):
        flags = outcomes[idx * per_cell : (idx + 1) * per_cell]
        rejections = int(sum(flags))
        rate = rejections / per_cell
        rows.append(
            ResultRow(
                label=cell.label,
                n=cell.scenario.n,
                variant=cell.test.variant,
                replications=per_cell,
                rejections=rejections,
                rate=rate,
                std_error=math.sqrt(rate * (1.0 - rate) / per_cell),
            )
        )
    return ResultTable(
        name=config.name,
        alpha=config.alpha,
        n_boot=config.n_boot,
        seed=config.seed,
        rows=tuple(rows),
        wall_time=time.perf_counter() - start,
    )


def _parse_copula(obj, path: str, errors: list[str]):
    if not isinstance(obj, dict):
        errors.append(f"{path}: expected an object")
        return None
    family = obj.get("family")
    known = {"gumbel", "khoudraji"}
    if family not in known:
        errors.append(f"{path}.family: expected one of {sorted(known)}, got {family!r}")
        return None
    if "vartheta" in obj and "tau" in obj:
        errors.append(f"{path}: give either vartheta or tau, not both")
        return None
    try:
        if "tau" in obj:
            vartheta = gumbel_vartheta_for_tau(float(obj["tau"]))
        elif "vartheta" in obj:
            vartheta = float(obj["vartheta"])
        else:
            errors.append(f"{path}: vartheta or tau is required")
            return None
        base = GumbelHougaardParams(vartheta)
        if family == "gumbel":
            return base
        return KhoudrajiParams(a=tuple(obj.get("a", ())), base=base)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def _parse_margin(obj, path: str, errors: list[str]):
    if obj is None:
        return None
    if isinstance(obj, dict):
        dist = obj.get("dist")
        try:
            if dist == "uniform":
                return None
            if dist == "gev":
                return GevParams(float(obj["mu"]), float(obj["sigma"]), float(obj["gamma"]))
            if dist == "normal":
                return NormalParams(float(obj.get("mu", 0.0)), float(obj.get("sigma", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc!r}")
            return None
    errors.append(f"{path}: expected null or an object with dist uniform/gev/normal")
    return None


def _parse_cell(obj, path: str, errors: list[str]) -> CellSpec | None:
    if not isinstance(obj, dict):
        errors.append(f"{path}: expected an object")
        return None
    seen = len(errors)
    n = obj.get("n")
    if not isinstance(n, int) or n < 2:
        errors.append(f"{path}.n: expected an integer >= 2, got {n!r}")
        return None
    segs_obj = obj.get("segments")
    if not isinstance(segs_obj, list) or not segs_obj:
        errors.append(f"{path}.segments: expected a non-empty array")
        return None
    segments = []
    for i, seg in enumerate(segs_obj):
        seg_path = f"{path}.segments[{i}]"
        if not isinstance(seg, dict):
            errors.append(f"{seg_path}: expected an object")
            continue
        copula = _parse_copula(seg.get("copula"), f"{seg_path}.copula", errors)
        margins = None
        if seg.get("margins") is not None:
            raw = seg["margins"]
            if not isinstance(raw, list):
                errors.append(f"{seg_path}.margins: expected an array or null")
            else:
                margins = tuple(
                    _parse_margin(m, f"{seg_path}.margins[{j}]", errors) for j, m in enumerate(raw)
                )
        if copula is None:
            continue
        try:
            segments.append(
                Segment(float(seg.get("start", 0.0)), float(seg.get("stop", 1.0)), copula, margins)
            )
        except (TypeError, ValueError) as exc:
            errors.append(f"{seg_path}: {exc}")
    test_obj = obj.get("test", {})
    if not isinstance(test_obj, dict):
        errors.append(f"{path}.test: expected an object")
        return None
    try:
        test = TestSpec(
            thetas=tuple(test_obj.get("thetas", ())),
            k_star=test_obj.get("k_star"),
            prefactor=test_obj.get("prefactor", "adapted"),
        )
        if test.thetas:
            BreakSpec(test.thetas, n)  # fail here, not inside a worker
        if test.k_star is not None and not 1 <= test.k_star <= n - 1:
            raise ConfigError(f"k_star must lie in 1..{n - 1}, got {test.k_star}")
    except (ConfigError, DataError, TypeError, ValueError) as exc:
        errors.append(f"{path}.test: {exc}")
        return None
    if len(errors) > seen:
        return None
    try:
        scenario = DgpScenario(n=n, segments=tuple(segments))
    except (ValueError, TypeError) as exc:
        errors.append(f"{path}.segments: {exc}")
        return None
    label = str(obj.get("label", path.removeprefix("$.")))
    return CellSpec(label=label, scenario=scenario, test=test)


def experiment_from_dict(cfg: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from parsed JSON.

    All schema problems are collected and raised together as a
    :class:`~evbreak.errors.ConfigError`, one line per JSON path.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("$: expected a JSON object")
    errors: list[str] = []
    cells_obj = cfg.get("cells")
    cells: list[CellSpec] = []
    if not isinstance(cells_obj, list) or not cells_obj:
        errors.append("$.cells: expected a non-empty array")
    else:
        for i, cell in enumerate(cells_obj):
            parsed = _parse_cell(cell, f"$.cells[{i}]", errors)
            if parsed is not None:
                cells.append(parsed)
    reps = cfg.get("replications")
    if not isinstance(reps, int) or reps < 1:
        errors.append(f"$.replications: expected a positive integer, got {reps!r}")
    n_boot = cfg.get("B", 1000)
    if not isinstance(n_boot, int) or n_boot < 1:
        errors.append(f"$.B: expected a positive integer, got {n_boot!r}")
    alpha = cfg.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0.0 < float(alpha) < 1.0:
        errors.append(f"$.alpha: expected a number in (0, 1), got {alpha!r}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append(f"$.seed: expected a nonnegative integer, got {seed!r}")
    workers = cfg.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        errors.append(f"$.workers: expected a positive integer, got {workers!r}")
    if errors:
        raise ConfigError("\n".join(errors))
    return ExperimentConfig(
        name=str(cfg.get("name", "experiment")),
        cells=tuple(cells),
        replications=reps,
        n_boot=n_boot,
        alpha=float(alpha),
        seed=seed,
        workers=workers,
    )


def load_experiment(path) -> ExperimentConfig:
    """Load and validate an experiment configuration from a JSON file."""
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return experiment_from_dict(cfg)
