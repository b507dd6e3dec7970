"""Sampling-based uncertainty quantification over solver runs.

Single-level estimates average a statistical functional G over M independent
samples; multilevel estimates telescope differences of G across a hierarchy
of nested grids, with both runs of each correction pair driven by the same
random vector.

Random numbers come from a counter-based generator keyed by (seed, level,
sample index), so any sample is reproducible in isolation and the estimate is
bitwise independent of worker count and scheduling.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SimulationError
from .grid import Field, GridSpec
from .solver import SchemeConfig, run_simulation

MC = "mc"
QMC = "qmc"

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


@dataclass(frozen=True)
class SamplePlan:
    method: str = MC
    samples: int = 1
    seed: int = 0
    stochastic_dim: int = 1

    def __post_init__(self):
        if self.method not in (MC, QMC):
            raise ConfigError(f"unknown sampling method {self.method!r}")
        if self.samples < 1:
            raise ConfigError(f"sample count must be >= 1, got {self.samples}")
        if self.stochastic_dim < 1:
            raise ConfigError(f"stochastic_dim must be >= 1, got {self.stochastic_dim}")


@dataclass(frozen=True)
class MlmcPlan:
    """Level grids run coarsest to finest; every axis doubles per level."""

    grids: tuple
    samples_per_level: tuple
    method: str = MC
    seed: int = 0
    stochastic_dim: int = 1

    def __post_init__(self):
        if len(self.grids) != len(self.samples_per_level):
            raise ConfigError("need one sample count per level")
        if len(self.grids) < 1:
            raise ConfigError("MLMC needs at least one level")
        if any(m < 1 for m in self.samples_per_level):
            raise ConfigError("per-level sample counts must be >= 1")
        for l in range(1, len(self.grids)):
            coarse, fine = self.grids[l - 1], self.grids[l]
            same = all(f == c for f, c in zip(fine.cells, coarse.cells))
            doubled = all(f == 2 * c for f, c in zip(fine.cells, coarse.cells))
            if not (same or doubled):
                raise ConfigError(
                    f"level {l} cells {fine.cells} are neither equal to nor "
                    f"double the level {l - 1} cells {coarse.cells}"
                )

    @property
    def levels(self) -> int:
        return len(self.grids)


def radical_inverse(index: int, base: int) -> float:
    """Van der Corput radical inverse of ``index`` in the given base."""
    inv = 0.0
    factor = 1.0 / base
    while index > 0:
        inv += factor * (index % base)
        index //= base
        factor /= base
    return inv


def halton_point(index: int, dim: int) -> np.ndarray:
    """Point ``index`` (1-based) of the Halton sequence in [0,1)^dim."""
    if dim > len(_PRIMES):
        raise ConfigError(f"Halton supports up to {len(_PRIMES)} dimensions")
    return np.array([radical_inverse(index, _PRIMES[d]) for d in range(dim)])


def draw_sample(plan, k: int, level: int = 0) -> np.ndarray:
    """Random vector in [0,1)^d for sample k (independent of the worker)."""
    samples = plan.samples_per_level[level] if isinstance(plan, MlmcPlan) else plan.samples
    if not 0 <= k < samples:
        raise ConfigError(f"sample index {k} out of range [0, {samples})")
    if plan.method == QMC:
        return halton_point(k + 1, plan.stochastic_dim)
    key = [np.uint64(plan.seed), np.uint64((level << 48) + k)]
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.random(plan.stochastic_dim)


# ---------------------------------------------------------------------------
# Streaming statistical functionals
# ---------------------------------------------------------------------------


class MomentAccumulator:
    """Streaming per-cell mean and M2 (Welford, with pairwise merge)."""

    def __init__(self, shape):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def fresh(self) -> "MomentAccumulator":
        return MomentAccumulator(self.mean.shape)

    def update(self, value: np.ndarray) -> None:
        if value.shape != self.mean.shape:
            raise ConfigError(
                f"accumulator shape {self.mean.shape} does not match value {value.shape}"
            )
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "MomentAccumulator") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count = other.count
            self.mean = other.mean.copy()
            self.m2 = other.m2.copy()
            return
        total = self.count + other.count
        delta = other.mean - self.mean
        frac = other.count / total
        self.mean = self.mean + delta * frac
        self.m2 = self.m2 + other.m2 + delta ** 2 * self.count * frac
        self.count = total

    def variance(self, ddof: int = 1) -> np.ndarray:
        if self.count <= ddof:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - ddof)

    def second_moment(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(self.m2)
        return self.m2 / self.count + self.mean ** 2


class FieldMoments:
    """Mean/variance of the full conserved field."""

    name = "moments"

    def __init__(self, grid: GridSpec, ncomp: int):
        self.grid = grid
        self.ncomp = ncomp
        self.acc = MomentAccumulator((ncomp,) + grid.interior_shape)

    def fresh(self):
        return FieldMoments(self.grid, self.ncomp)

    def update(self, field: Field) -> None:
        self.acc.update(np.asarray(field.interior))

    def merge(self, other: "FieldMoments") -> None:
        self.acc.merge(other.acc)


class Histogram:
    """Per-probe-point histogram of one component, with overflow bins.

    ``counts[p, 0]`` and ``counts[p, -1]`` hold under/overflow.
    """

    name = "histogram"

    def __init__(self, probe_cells, component: int, lo: float, hi: float, bins: int = 64):
        if hi <= lo:
            raise ConfigError(f"histogram range [{lo}, {hi}) is empty")
        if bins < 1:
            raise ConfigError(f"histogram needs >= 1 bins, got {bins}")
        self.probe_cells = tuple(tuple(int(i) for i in p) for p in probe_cells)
        self.component = component
        self.lo = float(lo)
        self.hi = float(hi)
        self.bins = int(bins)
        self.counts = np.zeros((len(self.probe_cells), bins + 2), dtype=np.int64)
        self.samples = 0

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def fresh(self):
        return Histogram(self.probe_cells, self.component, self.lo, self.hi, self.bins)

    def update(self, field: Field) -> None:
        interior = field.interior
        width = (self.hi - self.lo) / self.bins
        for p, cell in enumerate(self.probe_cells):
            # cell is x-first; data is x-last
            idx = (self.component,) + tuple(reversed(cell))
            v = float(interior[idx])
            if v < self.lo:
                self.counts[p, 0] += 1
            elif v >= self.hi:
                self.counts[p, -1] += 1
            else:
                self.counts[p, 1 + min(int((v - self.lo) / width), self.bins - 1)] += 1
        self.samples += 1

    def merge(self, other: "Histogram") -> None:
        if other.counts.shape != self.counts.shape:
            raise ConfigError("histogram shapes do not match")
        self.counts += other.counts
        self.samples += other.samples


class StructureFunctionAccumulator:
    """Mean two-point structure function |u(x + h e_k) - u(x)|^p.

    Averaged over all interior positions x (periodic wrapping) and all axes,
    for integer offsets h = 0..max_offset, one component.
    """

    name = "structure_function"

    def __init__(self, p: float, max_offset: int, component: int = 0):
        if p < 1:
            raise ConfigError(f"structure-function exponent must be >= 1, got {p}")
        if max_offset < 0:
            raise ConfigError(f"max offset must be >= 0, got {max_offset}")
        self.p = float(p)
        self.max_offset = int(max_offset)
        self.component = int(component)
        self.sums = np.zeros(self.max_offset + 1)
        self.samples = 0

    def fresh(self):
        return StructureFunctionAccumulator(self.p, self.max_offset, self.component)

    def update(self, field: Field) -> None:
        w = np.asarray(field.interior[self.component])
        dim = field.grid.dim
        for h in range(self.max_offset + 1):
            acc = 0.0
            for j in range(dim):
                acc += float(np.mean(np.abs(np.roll(w, -h, axis=j) - w) ** self.p))
            self.sums[h] += acc / dim
        self.samples += 1

    def merge(self, other: "StructureFunctionAccumulator") -> None:
        if other.max_offset != self.max_offset or other.p != self.p:
            raise ConfigError("structure-function specs do not match")
        self.sums += other.sums
        self.samples += other.samples

    def values(self) -> np.ndarray:
        if self.samples == 0:
            return np.zeros_like(self.sums)
        return self.sums / self.samples


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _run_one_sample(plan, level, k, grid, cfg, evaluate_init, functionals):
    vector = draw_sample(plan, k, level)
    try:
        init = evaluate_init(grid, vector)
        final, _ = run_simulation(init, cfg)
    except Exception as exc:
        where = f"level {level}, " if isinstance(plan, MlmcPlan) else ""
        raise SimulationError(f"{where}sample {k} failed: {exc}") from exc
    contribs = [f.fresh() for f in functionals]
    for c in contribs:
        c.update(final)
    return contribs


def _map_samples(worker_fn, n, workers):
    if workers <= 1:
        return [worker_fn(k) for k in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker_fn, range(n)))


def run_mc(
    plan: SamplePlan,
    grid: GridSpec,
    cfg: SchemeConfig,
    evaluate_init,
    functionals,
    workers: int = 1,
):
    """Single-level estimate: run M independent samples and stream every
    final field into each functional.  Merges happen in sample-index order,
    so the result does not depend on worker count."""
    per_sample = _map_samples(
        lambda k: _run_one_sample(plan, 0, k, grid, cfg, evaluate_init, functionals),
        plan.samples,
        workers,
    )
    merged = [f.fresh() for f in functionals]
    for contribs in per_sample:
        for m, c in zip(merged, contribs):
            m.merge(c)
    return merged


@dataclass
class MlmcMoments:
    """Telescoped first/second moments, combined on the finest grid."""

    mean: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray


def prolong(values: np.ndarray, factor_per_axis) -> np.ndarray:
    """Piecewise-constant injection of a coarse field onto a finer grid.

    ``values`` has the component axis first and x last, factors are x-first.
    """
    dim = len(factor_per_axis)
    out = values
    for j in range(dim):
        f = factor_per_axis[dim - 1 - j]
        if f != 1:
            out = np.repeat(out, f, axis=1 + j)
    return out


def run_mlmc(
    plan: MlmcPlan,
    make_cfg,
    evaluate_init,
    workers: int = 1,
):
    """Multilevel estimate of the field mean and variance.

    Sample k of level l runs the same random vector on the level-l and
    level-(l-1) grids; the level-0 correction uses the coarse run alone.
    ``make_cfg(grid)`` supplies the scheme configuration per level grid.
    With one level this reduces bitwise to the single-level estimator.
    """
    finest = plan.grids[-1]
    mean_total = None
    second_total = None
    acc_level0 = None
    for level in range(plan.levels):
        grid_f = plan.grids[level]
        cfg_f = make_cfg(grid_f)

        def one(k, level=level, grid_f=grid_f, cfg_f=cfg_f):
            vector = draw_sample(plan, k, level)
            try:
                fine, _ = run_simulation(evaluate_init(grid_f, vector), cfg_f)
                if level > 0:
                    grid_c = plan.grids[level - 1]
                    coarse, _ = run_simulation(
                        evaluate_init(grid_c, vector), make_cfg(grid_c)
                    )
                else:
                    coarse = None
            except Exception as exc:
                raise SimulationError(f"level {level}, sample {k} failed: {exc}") from exc
            sf = MomentAccumulator(np.asarray(fine.interior).shape)
            sf.update(np.asarray(fine.interior))
            sc = None
            if coarse is not None:
                sc = MomentAccumulator(np.asarray(coarse.interior).shape)
                sc.update(np.asarray(coarse.interior))
            return sf, sc

        singles = _map_samples(one, plan.samples_per_level[level], workers)
        # merge in sample-index order: matches run_mc's accumulation bitwise
        acc_f = singles[0][0].fresh()
        acc_c = singles[0][1].fresh() if singles[0][1] is not None else None
        for sf, sc in singles:
            acc_f.merge(sf)
            if acc_c is not None:
                acc_c.merge(sc)
        if level == 0:
            acc_level0 = acc_f
        factor_f = tuple(nf // nl for nf, nl in zip(finest.cells, grid_f.cells))
        mean_l = prolong(acc_f.mean, factor_f)
        second_l = prolong(acc_f.second_moment(), factor_f)
        if acc_c is not None:
            grid_c = plan.grids[level - 1]
            factor_c = tuple(nf // nl for nf, nl in zip(finest.cells, grid_c.cells))
            mean_l = mean_l - prolong(acc_c.mean, factor_c)
            second_l = second_l - prolong(acc_c.second_moment(), factor_c)
        if mean_total is None:
            mean_total = mean_l
            second_total = second_l
        else:
            mean_total = mean_total + mean_l
            second_total = second_total + second_l
    if plan.levels == 1:
        # telescoping degenerates to plain single-level sampling
        variance = acc_level0.variance(ddof=1)
    else:
        variance = second_total - mean_total ** 2
    return MlmcMoments(mean_total, second_total, variance)


# ---------------------------------------------------------------------------
# Sample-to-worker load balancing
# ---------------------------------------------------------------------------


def load_balance(sample_costs, workers: int) -> list[list[int]]:
    """Longest-processing-time-first assignment of samples to workers.

    Returns per-worker lists of sample indices; ties break toward the lowest
    worker index so the assignment is deterministic.
    """
    costs = list(sample_costs)
    if not costs:
        raise ConfigError("no samples to balance")
    if workers < 1:
        raise ConfigError(f"need at least one worker, got {workers}")
    if any(c <= 0 for c in costs):
        raise ConfigError("sample costs must be positive")
    order = sorted(range(len(costs)), key=lambda i: (-costs[i], i))
    heap = [(0.0, w) for w in range(workers)]
    heapq.heapify(heap)
    assignment: list[list[int]] = [[] for _ in range(workers)]
    for i in order:
        load, w = heapq.heappop(heap)
        assignment[w].append(i)
        heapq.heappush(heap, (load + costs[i], w))
    return assignment
