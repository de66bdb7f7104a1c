"""Simulation harness for occupation-time tails and the sup statistics.

Two estimators live here:

* truncated total occupation ``J_R`` of a set by walks from the origin, stopped
  once they leave ``|x| <= R``; ``J_R <= J`` and the gap is controlled by the
  chance of coming back from distance ``R``, which is ``O(R^(2-d))``;
* ``sup_x mu_n(x + A)`` and ``sup_m mu_n(X_m + A)`` along a single path, using
  an open-addressing visit map.

Walks are processed in fixed-size chunks, each with its own PCG64 stream keyed
by ``(seed, chunk)``, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ExcessiveTruncation, InsufficientTailMass, MemoryBudgetExceeded
from .green import decay_constant, get_table
from .spectral import SiteSet, limit_constant, lambda_max
from .walk import ValidatedWalk, covariance

CHUNK = 4096
DEFAULT_STEP_CAP = 10**7
MAX_TRUNCATED_FRACTION = 1e-3
# a block move reaches the set's neighbourhood with probability <= exp(-JUMP_LEVEL)
JUMP_LEVEL = 16.0
# below this many steps a block costs more than stepping one by one
MIN_JUMP = 12
DEFAULT_MAX_SITES = 60_000_000


def default_radius(u_max: int) -> float:
    """``max(10^3, 50 u_max^2)``."""
    return float(max(1000, 50 * u_max * u_max))


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for replica or chunk ``index`` of a seeded run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])))


@dataclass(frozen=True)
class SimConfig:
    walk: ValidatedWalk
    points: tuple[tuple[int, ...], ...]
    n_walks: int
    radius: float
    seed: int
    step_cap: int = DEFAULT_STEP_CAP
    workers: int = 1

    def __post_init__(self):
        if self.n_walks < 1:
            raise ValueError("n_walks must be >= 1")
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")
        pts = np.array(self.points, dtype=float)
        if len(pts) > 1:
            diam = float(np.linalg.norm(pts[:, None] - pts[None], axis=-1).max())
        else:
            diam = 0.0
        if not self.radius > max(diam, float(np.linalg.norm(pts, axis=1).max())):
            raise ValueError("truncation radius must exceed the extent of the set")

    @classmethod
    def for_set(cls, walk, sites: SiteSet, n_walks, radius=None, seed=0, **kw) -> "SimConfig":
        return cls(walk, sites.points, int(n_walks), float(radius or default_radius(15)), int(seed), **kw)


def _run_counts(cfg: SimConfig):
    """Per-walk arrays ``(counts, steps, blocks, capped)``."""
    walk = cfg.walk
    pts = np.array(cfg.points, dtype=np.int64)
    set_radius = float(np.linalg.norm(pts, axis=1).max())
    offsets = np.ascontiguousarray(walk.offsets, dtype=np.int64)
    probs = np.ascontiguousarray(walk.probs, dtype=np.float64)
    var_max = float(np.linalg.eigvalsh(covariance(walk).matrix).max())
    n_chunks = -(-cfg.n_walks // CHUNK)

    def job(i):
        size = min(CHUNK, cfg.n_walks - i * CHUNK)
        return _kernels.occupation_counts(
            stream(cfg.seed, i), offsets, probs, pts, set_radius, size, float(cfg.radius), int(cfg.step_cap),
            JUMP_LEVEL, MIN_JUMP, var_max,
        )

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(job, range(n_chunks)))
    else:
        parts = [job(i) for i in range(n_chunks)]
    counts = np.concatenate([p[0] for p in parts])
    steps = np.concatenate([p[1] for p in parts])
    blocks = np.concatenate([p[2] for p in parts])
    capped = np.concatenate([p[3] for p in parts])
    return counts, steps, blocks, capped


def block_bias_bound(mean_blocks: float) -> float:
    """Chance that some block move passed through the set unseen, ``E[blocks] exp(-L)``."""
    return float(mean_blocks) * math.exp(-JUMP_LEVEL)


def return_bias_bound(walk: ValidatedWalk, sites: SiteSet, radius: float) -> float:
    """Bound on ``P(J > u) - P(J_R > u)``.

    The gap is at most ``sup_{|v| > R} P^v(T_A < inf) <= sum_a G(v - a) / G(0)``,
    with ``G(x) <= c |x|^(2-d)`` and ``c`` measured on the Green table.
    """
    d = walk.dimension
    c = decay_constant(walk)
    dist = radius - sites.radius
    g0 = get_table(walk)((0,) * d)
    return len(sites) * c * dist ** (2 - d) / g0


@dataclass
class TailEstimate:
    """Empirical law of the truncated occupation total."""

    counts: np.ndarray
    n_walks: int
    truncated_fraction: float
    radius: float
    mean_steps: float
    bias_bound: float = 0.0
    extras: dict = field(default_factory=dict)

    def survival_hat(self, u: int) -> float:
        u = int(u)
        return float(self.counts[u + 1:].sum()) / self.n_walks if u + 1 < len(self.counts) else 0.0

    def stderr(self, u: int) -> float:
        s = self.survival_hat(u)
        return math.sqrt(max(s * (1.0 - s), 0.0) / self.n_walks)

    def survival_array(self, us) -> np.ndarray:
        return np.array([self.survival_hat(u) for u in us])

    def stderr_array(self, us) -> np.ndarray:
        return np.array([self.stderr(u) for u in us])


def simulate_occupation(cfg: SimConfig, check_truncation: bool = True) -> TailEstimate:
    """Histogram of the total visits to the configured set before leaving radius ``R``.

    Raises
    ------
    ExcessiveTruncation
        When at least a fraction 1e-3 of walks reached ``step_cap`` before exiting.
    """
    counts, steps, blocks, capped = _run_counts(cfg)
    frac = float(capped.mean())
    if check_truncation and frac >= MAX_TRUNCATED_FRACTION:
        raise ExcessiveTruncation(
            f"{frac:.2%} of walks hit the step cap {cfg.step_cap}; raise it"
        )
    hist = np.bincount(counts)
    sites = SiteSet(cfg.points)
    return TailEstimate(
        counts=hist,
        n_walks=cfg.n_walks,
        truncated_fraction=frac,
        radius=cfg.radius,
        mean_steps=float(steps.mean()),
        bias_bound=return_bias_bound(cfg.walk, sites, cfg.radius) + block_bias_bound(blocks.mean()),
        extras={"mean_blocks": float(blocks.mean())},
    )


def fit_log_slope(us, survival, variance=None) -> tuple[float, float]:
    """Weighted least-squares slope of ``-log survival`` against ``u``.

    ``variance`` is the variance of ``log survival`` at each point (uniform when
    omitted). Returns ``(slope, stderr)``; the stderr treats points as
    independent.
    """
    us = np.asarray(us, dtype=float)
    y = -np.log(np.asarray(survival, dtype=float))
    w = np.ones_like(us) if variance is None else 1.0 / np.asarray(variance, dtype=float)
    X = np.column_stack([np.ones_like(us), us])
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ (XtW @ y)
    if variance is None:
        resid = y - X @ beta
        dof = max(len(us) - 2, 1)
        cov = cov * float(resid @ resid) / dof
    return float(beta[1]), float(math.sqrt(max(cov[1, 1], 0.0)))


def estimate_tail_slope(est: TailEstimate, u_min: int, u_max: int) -> tuple[float, float]:
    """Exponential tail rate ``theta_hat`` fitted on ``u_min..u_max``.

    Weights are the inverse delta-method variances ``(1 - S)/(N S)`` of
    ``log S_hat(u)``.
    """
    us = np.arange(int(u_min), int(u_max) + 1)
    s = est.survival_array(us)
    if np.any(s <= 0):
        raise InsufficientTailMass(
            f"empirical survival vanishes inside [{u_min}, {u_max}]; shrink the window or add walks"
        )
    var = (1.0 - s) / (est.n_walks * s)
    var = np.maximum(var, 1.0 / (est.n_walks**2))
    return fit_log_slope(us, s, var)


@dataclass(frozen=True)
class SupStatistic:
    n: int
    sup_over_x: int
    sup_over_path: int
    distinct_sites: int

    @property
    def ratio_x(self) -> float:
        return self.sup_over_x / math.log(self.n)

    @property
    def ratio_path(self) -> float:
        return self.sup_over_path / math.log(self.n)


def _pack_bits(d: int) -> int:
    return 63 // d


def sup_path_checkpoints(walk: ValidatedWalk, sites: SiteSet, checkpoints, seed: int,
                         max_sites: int = DEFAULT_MAX_SITES, rep: int = 0) -> list[SupStatistic]:
    """Sup statistics of a single path evaluated at each of the increasing ``checkpoints``.

    The path is driven by ``stream(seed, rep)``.
    """
    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    if cps[0] < 1:
        raise ValueError("n must be >= 1")
    bx, bp, nd, status = _kernels.sup_path(
        stream(seed, rep),
        np.ascontiguousarray(walk.offsets, dtype=np.int64),
        np.ascontiguousarray(walk.probs, dtype=np.float64),
        sites.array, cps, int(max_sites), _pack_bits(walk.dimension),
    )
    if status == 1:
        raise MemoryBudgetExceeded(f"more than {max_sites} distinct sites visited")
    if status == 2:
        raise MemoryBudgetExceeded("path left the packable coordinate range")
    return [SupStatistic(int(n), int(x), int(p), int(k)) for n, x, p, k in zip(cps, bx, bp, nd)]


def sup_occupation(walk: ValidatedWalk, sites: SiteSet, n: int, seed: int,
                   max_sites: int = DEFAULT_MAX_SITES, rep: int = 0) -> SupStatistic:
    """``sup_x mu_n(x + A)`` and ``sup_{m <= n} mu_n(X_m + A)`` for one path of ``n`` steps.

    Only translates ``x = X_m - a`` can carry mass, so the first sup is taken
    over those candidates.
    """
    return sup_path_checkpoints(walk, sites, [n], seed, max_sites, rep)[0]


def sup_naive(positions: np.ndarray, sites: SiteSet) -> tuple[int, int]:
    """Direct recomputation of both sup statistics from explicit path positions."""
    from collections import Counter

    visits = Counter(map(tuple, positions.tolist()))
    pts = [tuple(p) for p in sites.array.tolist()]
    best_x = 0
    best_path = 0
    for y in visits:
        best_path = max(best_path, sum(visits.get(tuple(a + b for a, b in zip(y, q)), 0) for q in pts))
        for a in pts:
            x = tuple(c - e for c, e in zip(y, a))
            best_x = max(best_x, sum(visits.get(tuple(c + e for c, e in zip(x, q)), 0) for q in pts))
    return best_x, best_path


@dataclass(frozen=True)
class TrendRow:
    n: int
    median_x: float
    q1_x: float
    q3_x: float
    median_path: float
    q1_path: float
    q3_path: float
    predicted: float


def limit_trend(walk: ValidatedWalk, sites: SiteSet, n_schedule, reps: int, seed: int,
                workers: int = 1) -> tuple[list[TrendRow], list[SupStatistic]]:
    """Median and quartiles of the sup ratios over ``reps`` independent paths.

    Each replica is one path read at every ``n`` of the schedule. Returns the
    summary rows and the raw per-replica statistics (replica-major order).
    """
    sched = [int(n) for n in n_schedule]
    if sched != sorted(sched):
        raise ValueError("n_schedule must be increasing")
    predicted = limit_constant(lambda_max(walk, sites)).constant

    def job(r):
        return sup_path_checkpoints(walk, sites, sched, seed, rep=r)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            raw = list(pool.map(job, range(reps)))
    else:
        raw = [job(r) for r in range(reps)]
    rows = []
    for i, n in enumerate(sched):
        rx = np.array([rep[i].ratio_x for rep in raw])
        rp = np.array([rep[i].ratio_path for rep in raw])
        qx = np.percentile(rx, [25, 50, 75])
        qp = np.percentile(rp, [25, 50, 75])
        rows.append(TrendRow(n, qx[1], qx[0], qx[2], qp[1], qp[0], qp[2], predicted))
    flat = [s for rep in raw for s in rep]
    return rows, flat
