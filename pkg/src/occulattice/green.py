"""Lattice Green's function ``G(x) = sum_k P(X_k = x)``.

Values come from the Fourier representation

    G(x) = (2 pi)^-d  int_{[-pi, pi]^d} cos(x.p) / (1 - psi(p)) dp.

The cube is split into ``2d`` pyramids with apex at ``p = 0``; in pyramid
coordinates ``p = pi s (u_1, .., 1, .., u_{d-1})`` the Jacobian ``s^(d-1)``
cancels the ``|p|^-2`` pole, leaving an analytic integrand on which tensor
Gauss-Legendre converges geometrically. Pairs of opposite pyramids are folded
together using ``p -> -p`` symmetry. All points of an integer box are obtained
at once by contracting one axis at a time.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ToleranceUnachievable, ZeroOffset
from .walk import ValidatedWalk, covariance, one_minus_psi

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
REPORT_TOL = 1e-6
MAX_NODES = 512
# bytes of complex workspace allowed per s-slice
_SLICE_BUDGET = 64 * 2**20


def _gauss(n):
    s, ws = np.polynomial.legendre.leggauss(n)
    return s, ws


def fourier_green_box(walk: ValidatedWalk, coords, n: int) -> np.ndarray:
    """Gauss-Legendre estimate of G on the product grid ``coords[0] x ... x coords[d-1]``.

    ``n`` is the number of nodes along every pyramid coordinate.
    """
    d = walk.dimension
    coords = [np.asarray(c, dtype=float) for c in coords]
    x, wx = _gauss(n)
    s_nodes = 0.5 * (x + 1.0)
    s_weights = 0.5 * wx
    u, wu = x, wx
    ugrid = np.meshgrid(*([u] * (d - 1)), indexing="ij")
    uw = np.ones([n] * (d - 1))
    for j in range(d - 1):
        shape = [1] * (d - 1)
        shape[j] = n
        uw = uw * wu.reshape(shape)
    # 2 for the mirrored pyramid, (2 pi)^-d normalisation, pi^d Jacobian
    scale = 2.0 * np.pi**d / (2.0 * np.pi) ** d

    out = np.zeros(tuple(len(c) for c in coords))
    for k in range(d):
        others = [j for j in range(d) if j != k]
        acc = np.zeros(tuple(len(coords[j]) for j in [k] + others), dtype=complex)
        p = np.empty(ugrid[0].shape + (d,)) if d > 1 else None
        for s, ws in zip(s_nodes, s_weights):
            p[..., k] = np.pi * s
            for t, j in enumerate(others):
                p[..., j] = np.pi * s * ugrid[t]
            w = (scale * ws * s ** (d - 1)) * uw / one_minus_psi(walk, p)
            T = w.astype(complex)
            for j in others:
                E = np.exp(1j * np.pi * s * np.outer(u, coords[j]))
                T = np.tensordot(T, E, axes=([0], [0]))
            acc += np.multiply.outer(np.exp(1j * np.pi * s * coords[k]), T)
        out += np.transpose(acc.real, np.argsort([k] + others))
    return out


def _start_nodes(walk: ValidatedWalk, radius: float) -> int:
    return int(24 + math.ceil(2.0 * radius))


def adaptive_green_box(walk: ValidatedWalk, coords, tol: float):
    """Refine the node count until two successive rules agree to ``tol``.

    Returns ``(values, error_estimate, nodes)``. The finer rule is returned, so
    the estimate is conservative for geometrically converging rules.
    """
    radius = max(float(np.max(np.abs(c))) for c in coords)
    radius *= walk.max_step
    n = _start_nodes(walk, radius)
    prev = fourier_green_box(walk, coords, n)
    while True:
        n_next = n + max(8, n // 2)
        if n_next > MAX_NODES:
            raise ToleranceUnachievable(
                f"node budget {MAX_NODES} exhausted before error fell below {tol:g}"
            )
        cur = fourier_green_box(walk, coords, n_next)
        err = float(np.max(np.abs(cur - prev)))
        log.debug("green quadrature n=%d err=%.3g", n_next, err)
        if err <= tol:
            return cur, err, n_next
        prev, n = cur, n_next


def _canonical(x: tuple[int, ...]) -> tuple[int, ...]:
    neg = tuple(-c for c in x)
    return max(x, neg)


class GreenTable:
    """Cache of Green values for one ``(walk, tol)`` pair.

    Values live in a dense symmetric cube ``[-r, r]^d`` plus a dictionary of
    scattered points outside it. Only grows; lookups from several threads are
    safe while a single writer extends it.
    """

    def __init__(self, walk: ValidatedWalk, tol: float = DEFAULT_TOL):
        self.walk = walk
        self.tol = float(tol)
        self.radius = -1
        self.cube = np.zeros((0,) * walk.dimension)
        self.extra: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()

    @property
    def walk_id(self):
        return self.walk.walk_id

    def ensure_radius(self, r: int) -> None:
        r = int(r)
        if r <= self.radius:
            return
        with self._lock:
            if r <= self.radius:
                return
            c = np.arange(-r, r + 1)
            vals, err, n = adaptive_green_box(self.walk, [c] * self.walk.dimension, self.tol)
            log.info("green cube radius %d: nodes=%d err=%.2g", r, n, err)
            # enforce exact G(x) = G(-x)
            vals = 0.5 * (vals + vals[(slice(None, None, -1),) * self.walk.dimension])
            self.cube = vals
            self.radius = r

    def _compute_points(self, pts: list[tuple[int, ...]]) -> None:
        d = self.walk.dimension
        coords = [sorted({p[j] for p in pts}) for j in range(d)]
        vals, _, _ = adaptive_green_box(self.walk, coords, self.tol)
        index = [{c: i for i, c in enumerate(cj)} for cj in coords]
        with self._lock:
            for p in pts:
                self.extra[p] = float(vals[tuple(index[j][p[j]] for j in range(d))])

    def ensure_points(self, points) -> None:
        missing = []
        for x in points:
            key = _canonical(tuple(int(c) for c in x))
            if max(abs(c) for c in key) > self.radius and key not in self.extra:
                missing.append(key)
        if missing:
            self._compute_points(sorted(set(missing)))

    def __call__(self, x) -> float:
        key = _canonical(tuple(int(c) for c in x))
        if max(abs(c) for c in key) <= self.radius:
            return float(self.cube[tuple(c + self.radius for c in key)])
        if key not in self.extra:
            self._compute_points([key])
        return self.extra[key]

    def lookup(self, diffs) -> np.ndarray:
        """Vectorised values for an ``(N, d)`` integer array of offsets."""
        diffs = np.asarray(diffs, dtype=np.int64)
        if diffs.size == 0:
            return np.zeros(diffs.shape[:-1])
        need = int(np.abs(diffs).max())
        if need > self.radius:
            self.ensure_radius(need)
        idx = tuple(np.moveaxis(diffs + self.radius, -1, 0))
        return self.cube[idx]

    def entries(self):
        """Iterate ``(x, G(x))`` over every cached point."""
        r = self.radius
        if r >= 0:
            for idx in np.ndindex(self.cube.shape):
                yield tuple(i - r for i in idx), float(self.cube[idx])
        for k, v in self.extra.items():
            yield k, v
            neg = tuple(-c for c in k)
            if neg != k:
                yield neg, v

    def to_json(self) -> dict:
        return {
            "version": 1,
            "walk_id": self.walk_id,
            "tol": self.tol,
            "entries": [{"x": list(x), "g": g} for x, g in self.entries()],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def from_json(cls, walk: ValidatedWalk, payload: dict) -> "GreenTable":
        if payload.get("version") != 1:
            raise ValueError(f"unsupported cache version {payload.get('version')!r}")
        if payload["walk_id"] != walk.walk_id:
            raise ValueError("cache file belongs to a different walk")
        table = cls(walk, payload["tol"])
        values = {tuple(e["x"]): float(e["g"]) for e in payload["entries"]}
        d = walk.dimension
        r = 0
        while all(
            tuple(int(i) - (r + 1) for i in idx) in values
            for idx in np.ndindex((2 * r + 3,) * d)
        ):
            r += 1
            if r > 200:
                break
        if (0,) * d in values:
            cube = np.empty((2 * r + 1,) * d)
            for idx in np.ndindex(cube.shape):
                cube[idx] = values[tuple(int(i) - r for i in idx)]
            table.cube, table.radius = cube, r
        for k, v in values.items():
            if max(abs(c) for c in k) > table.radius:
                table.extra[_canonical(k)] = v
        return table

    @classmethod
    def load(cls, walk: ValidatedWalk, path) -> "GreenTable":
        return cls.from_json(walk, json.loads(Path(path).read_text()))


_TABLES: dict[tuple[str, float], GreenTable] = {}
_TABLES_LOCK = threading.Lock()


def get_table(walk: ValidatedWalk, tol: float = DEFAULT_TOL) -> GreenTable:
    """Shared per-process table for ``(walk, tol)``."""
    key = (walk.walk_id, float(tol))
    with _TABLES_LOCK:
        if key not in _TABLES:
            _TABLES[key] = GreenTable(walk, tol)
        return _TABLES[key]


def register_table(table: GreenTable) -> None:
    with _TABLES_LOCK:
        _TABLES[(table.walk_id, table.tol)] = table


def green(walk: ValidatedWalk, x, tol: float = REPORT_TOL) -> float:
    """``G(x)`` within ``tol`` of the Fourier integral."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return get_table(walk, tol)(x)


def escape_probability(walk: ValidatedWalk, tol: float = REPORT_TOL) -> float:
    """Probability ``gamma_d = 1/G(0)`` of never returning to the start."""
    return 1.0 / green(walk, (0,) * walk.dimension, tol)


def hit_probability(walk: ValidatedWalk, y, tol: float = REPORT_TOL) -> float:
    """``t_y = G(y)/G(0)``, the probability of ever reaching ``y != 0``."""
    y = tuple(int(c) for c in y)
    if not any(y):
        raise ZeroOffset("hit probability needs a nonzero offset")
    table = get_table(walk, tol)
    return table(y) / table((0,) * walk.dimension)


def decay_constant(walk: ValidatedWalk, radius: int = 8, tol: float = DEFAULT_TOL) -> float:
    """Measured ``sup |x|^(d-2) G(x)`` over the nonzero points of ``[-radius, radius]^d``.

    Stands in for the unspecified constant of the bound ``G(x) <= c |x|^(2-d)``.
    """
    table = get_table(walk, tol)
    table.ensure_radius(radius)
    d = walk.dimension
    c = np.arange(-radius, radius + 1)
    grid = np.stack(np.meshgrid(*([c] * d), indexing="ij"), axis=-1)
    norm = np.linalg.norm(grid, axis=-1)
    vals = table.lookup(grid)
    mask = norm > 0
    return float(np.max(vals[mask] * norm[mask] ** (d - 2)))


def asymptotic_green(walk: ValidatedWalk, x) -> np.ndarray:
    """Leading large-|x| form ``Gamma(d/2-1) / (2 pi^(d/2) sqrt(det C)) (x.C^-1.x)^(1-d/2)``.

    ``C`` is the step covariance; for ``C = sigma^2 I`` this is ``sigma^-2 u0(x)``.
    """
    x = np.asarray(x, dtype=float)
    d = walk.dimension
    cov = covariance(walk).matrix
    q = np.einsum("...i,ij,...j->...", x, np.linalg.inv(cov), x)
    cd = math.gamma(d / 2 - 1) / (2 * math.pi ** (d / 2))
    return cd / math.sqrt(np.linalg.det(cov)) * q ** (1 - d / 2)


@dataclass(frozen=True)
class GreenEstimate:
    value: float
    stderr: float
    n_walks: int
    truncation_radius: float
    bias_bound: float


def green_mc_oracle(
    walk: ValidatedWalk, x, n_walks: int, radius: float, seed: int, workers: int = 1
) -> GreenEstimate:
    """Monte Carlo estimate of ``G(x)``: mean visits to ``x`` before leaving ``|X| <= radius``.

    The estimator is biased low by at most ``G(0) sup_{|v|>R} P^v(T_x < inf)``,
    which is ``O(1/R)`` in d=3; that part of the reported bound uses the
    asymptotic form of ``G``. The estimate itself never touches the quadrature
    tables.
    """
    from .montecarlo import SimConfig, _run_counts, block_bias_bound

    x = tuple(int(c) for c in x)
    if radius <= math.sqrt(sum(c * c for c in x)):
        raise ValueError("truncation radius must exceed |x|")
    cfg = SimConfig(
        walk=walk,
        points=(x,),
        n_walks=int(n_walks),
        radius=float(radius),
        seed=int(seed),
        workers=workers,
    )
    counts, _, blocks, _ = _run_counts(cfg)
    counts = counts.astype(float)
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(len(counts))) if len(counts) > 1 else 0.0
    d = walk.dimension
    dist = radius - math.sqrt(sum(c * c for c in x))
    bias = float(asymptotic_green(walk, [dist] + [0] * (d - 1))) * 1.5
    # a missed neighbourhood entry costs at most G(0) expected visits
    bias += block_bias_bound(blocks.mean()) * get_table(walk)((0,) * d)
    return GreenEstimate(mean, stderr, int(n_walks), float(radius), bias)
