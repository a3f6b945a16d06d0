"""Experiment harness: seeded sweeps over (topology, size, delta) grids.

Determinism contract: every trial draws from a generator seeded with
SeedSequence([master_seed, point_index, trial_index]), and deterministic
topologies use SeedSequence([master_seed, point_index]).  Each trial is
self-contained (graph resampling, level assignment, protocol run all on
the trial stream, in that order), so the worker count never changes any
output row, and appending sweep points never perturbs existing trials.

Random graphs are resampled per trial; complete graphs and meshes are
built once per point.  A trial that raises is counted in the row's
errors column and excluded from the rate and the means.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dvb1 import dvb1_params, dvb1_run
from .dvb2 import ID_MODES, dvb2_params, dvb2_run
from .topology import (
    Complete,
    ErdosRenyi,
    LevelAssignment,
    Mesh2D,
    build,
    default_edge_probability,
)

CSV_HEADER = (
    "algo,topology,n,k,delta,trials,success_rate,mean_phases,"
    "mean_slots,mean_beeps,ci95_lo,ci95_hi,errors"
)
TOPOLOGY_NAMES = ("complete", "mesh2d", "erdos_renyi")
ALGOS = ("dvb1", "dvb2")
D_MODES = ("exact", "upper_bound_n")

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = p + z * z / (2 * trials)
    spread = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials))
    return (center - spread) / denom, (center + spread) / denom


def delta_fractions(level_count: int, delta: float) -> tuple[float, ...]:
    """Level fractions for the standard binary/ternary parameterization.

    Binary: (1 - delta, delta), the majority holding share delta.
    Ternary: (2/3 - delta, 1/3, delta), the majority holding 2/3 - delta.
    """
    if level_count == 2:
        if not 0.5 < delta <= 1.0:
            raise ValueError("binary delta must lie in (1/2, 1]")
        return (1.0 - delta, delta)
    if level_count == 3:
        if not 0.0 <= delta < 1.0 / 3.0:
            raise ValueError("ternary delta must lie in [0, 1/3)")
        return (2.0 / 3.0 - delta, 1.0 / 3.0, delta)
    raise ValueError("delta parameterization covers 2 or 3 levels; pass fractions")


def make_assignment(
    n: int,
    level_count: int,
    delta: float | None,
    rng: np.random.Generator,
    fractions=None,
) -> LevelAssignment:
    """Counts from level fractions (floor, remainder to the majority
    level), shuffled uniformly over node indices."""
    if fractions is None:
        fractions = delta_fractions(level_count, delta)
    if len(fractions) != level_count:
        raise ValueError("need one fraction per level")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    counts = [int(math.floor(f * n + 1e-9)) for f in fractions]
    majority = max(range(level_count), key=lambda i: fractions[i])
    counts[majority] += n - sum(counts)
    top = sorted(counts, reverse=True)
    if len(top) > 1 and top[0] == top[1]:
        raise ValueError("no strict plurality after rounding")
    values = np.repeat(np.arange(1, level_count + 1), counts)
    return LevelAssignment(tuple(int(v) for v in rng.permutation(values)), level_count)


@dataclass(frozen=True)
class ExperimentConfig:
    algo: str = "dvb1"
    topology: tuple[str, ...] = ("complete",)
    sizes: tuple[int, ...] = (100,)
    levels: int = 2
    deltas: tuple[float, ...] = ()
    trials: int = 1000
    master_seed: int = 0
    c1: float = 20.0
    c2: float = 20.0
    d_mode: str = "exact"
    id_mode: str = "random"
    max_phases: int | None = None
    format: str = "csv"
    out: str | None = None

    def __post_init__(self) -> None:
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}")
        for name in self.topology:
            if name not in TOPOLOGY_NAMES:
                raise ValueError(f"unknown topology {name!r}")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise ValueError("sizes must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.d_mode not in D_MODES:
            raise ValueError(f"d_mode must be one of {D_MODES}")
        if self.id_mode not in ID_MODES:
            raise ValueError(f"id_mode must be one of {ID_MODES}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.max_phases is not None and self.max_phases < 1:
            raise ValueError("max_phases must be >= 1")
        if not self.deltas:
            grid = (
                [0.55 + 0.05 * i for i in range(9)]
                if self.levels == 2
                else [0.05 * i for i in range(7)]
            )
            object.__setattr__(self, "deltas", tuple(round(d, 10) for d in grid))
        for d in self.deltas:
            delta_fractions(self.levels, d)


_CONFIG_PARSERS = {
    "algo": str,
    "topology": lambda s: tuple(t.strip() for t in s.replace(",", " ").split()),
    "sizes": lambda s: tuple(int(t) for t in s.replace(",", " ").split()),
    "levels": int,
    "deltas": lambda s: tuple(float(t) for t in s.replace(",", " ").split()),
    "trials": int,
    "master_seed": int,
    "c1": float,
    "c2": float,
    "d_mode": str,
    "id_mode": str,
    "max_phases": lambda s: None if s.lower() == "none" else int(s),
    "format": str,
    "out": lambda s: None if s.lower() == "none" else s,
}


def parse_config(text: str) -> ExperimentConfig:
    """Flat `key = value` lines; # starts a comment; unknown keys fail."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in fields:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            fields[key] = _CONFIG_PARSERS[key](value.strip())
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return ExperimentConfig(**fields)


def mesh_shape(n: int) -> tuple[int, int]:
    """Most-square factorization rows*cols == n (a path if n is prime)."""
    rows = int(math.isqrt(n))
    while n % rows:
        rows -= 1
    return rows, n // rows


def topology_spec(name: str, n: int):
    if name == "complete":
        return Complete(n)
    if name == "mesh2d":
        return Mesh2D(*mesh_shape(n))
    if name == "erdos_renyi":
        return ErdosRenyi(n, default_edge_probability(n))
    raise ValueError(f"unknown topology {name!r}")


@dataclass(frozen=True)
class SweepRow:
    algo: str
    topology: str
    n: int
    k: int
    delta: float
    trials: int
    success_rate: float
    mean_phases: float
    mean_slots: float
    mean_beeps: float
    ci95_lo: float
    ci95_hi: float
    errors: int

    def csv_line(self) -> str:
        return ",".join(
            [self.algo, self.topology, str(self.n), str(self.k)]
            + [
                f"{v:.6g}"
                for v in (
                    self.delta,
                    self.trials,
                    self.success_rate,
                    self.mean_phases,
                    self.mean_slots,
                    self.mean_beeps,
                    self.ci95_lo,
                    self.ci95_hi,
                    self.errors,
                )
            ]
        )

    def json_obj(self) -> dict:
        keys = CSV_HEADER.split(",")
        raw = [
            self.algo,
            self.topology,
            self.n,
            self.k,
            self.delta,
            self.trials,
            self.success_rate,
            self.mean_phases,
            self.mean_slots,
            self.mean_beeps,
            self.ci95_lo,
            self.ci95_hi,
            self.errors,
        ]
        return {
            k: float(f"{v:.6g}") if isinstance(v, float) else v
            for k, v in zip(keys, raw)
        }


def run_trial(config: ExperimentConfig, point_index: int, point, trial_index: int):
    """One self-contained seeded trial; returns a TrialResult."""
    name, n, delta = point
    rng = np.random.default_rng(
        np.random.SeedSequence([config.master_seed, point_index, trial_index])
    )
    spec = topology_spec(name, n)
    graph = build(spec, rng)
    assignment = make_assignment(n, config.levels, delta, rng)
    if config.algo == "dvb1":
        params = dvb1_params(graph, config.levels, c1=config.c1, d_mode=config.d_mode)
        return dvb1_run(
            graph, assignment, params, seed=rng, max_phases=config.max_phases
        )
    params = dvb2_params(
        graph, config.levels, c2=config.c2, id_mode=config.id_mode, d_mode=config.d_mode
    )
    return dvb2_run(graph, assignment, params, seed=rng, max_phases=config.max_phases)


def run_point(config: ExperimentConfig, point_index: int, point) -> SweepRow:
    name, n, delta = point
    successes = errors = 0
    phases = slots = beeps = 0.0
    for t in range(config.trials):
        try:
            res = run_trial(config, point_index, point, t)
        except Exception:
            errors += 1
            continue
        successes += bool(res.success)
        phases += res.consensus_phase if res.consensus_phase is not None else res.phases_elapsed
        slots += res.slots_elapsed
        beeps += res.total_beeps
    completed = config.trials - errors
    lo, hi = wilson_interval(successes, completed)
    scale = 1.0 / completed if completed else 0.0
    return SweepRow(
        algo=config.algo,
        topology=name,
        n=n,
        k=config.levels,
        delta=delta,
        trials=config.trials,
        success_rate=successes * scale,
        mean_phases=phases * scale,
        mean_slots=slots * scale,
        mean_beeps=beeps * scale,
        ci95_lo=lo,
        ci95_hi=hi,
        errors=errors,
    )


def sweep_points(config: ExperimentConfig):
    return [
        (name, n, delta)
        for name in config.topology
        for n in config.sizes
        for delta in config.deltas
    ]


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepRow]:
    points = sweep_points(config)
    if workers <= 1:
        return [run_point(config, i, p) for i, p in enumerate(points)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_point, [config] * len(points), range(len(points)), points))


def render(rows: list[SweepRow], format: str) -> str:
    if format == "csv":
        return "\n".join([CSV_HEADER] + [r.csv_line() for r in rows]) + "\n"
    if format == "json":
        return json.dumps([r.json_obj() for r in rows], indent=2) + "\n"
    raise ValueError("format must be csv or json")


def emit(rows: list[SweepRow], format: str, path: str | None) -> None:
    text = render(rows, format)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc
