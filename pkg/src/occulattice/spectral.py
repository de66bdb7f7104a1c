"""Green matrices of finite sets and their eigenstructure.

For a finite ``A`` the matrix ``G_A(x, y) = G(x - y)`` is symmetric and
entrywise positive; its largest eigenvalue ``Lambda_A`` fixes the constant
``-1 / log(1 - 1/Lambda_A)`` for the growth of the most visited translate of
``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import LambdaNotAboveOne, NoConvergence, PowerIterationStall, ZeroOffset
from .green import DEFAULT_TOL, escape_probability, get_table, hit_probability
from .walk import ValidatedWalk, srw

JACOBI_TOL = 1e-13
MAX_SWEEPS = 60


@dataclass(frozen=True)
class SiteSet:
    """Ordered, duplicate-free list of lattice points; the order fixes matrix indexing."""

    points: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(int(c) for c in p) for p in self.points)
        if not pts:
            raise ValueError("site set must be non-empty")
        if len(set(pts)) != len(pts):
            raise ValueError("site set has repeated points")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("points have mixed dimensions")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points) -> "SiteSet":
        return cls(tuple(tuple(int(c) for c in p) for p in np.asarray(points).reshape(len(points), -1)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def dimension(self) -> int:
        return len(self.points[0])

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64)

    def translate(self, z) -> "SiteSet":
        z = tuple(int(c) for c in z)
        return SiteSet(tuple(tuple(a + b for a, b in zip(p, z)) for p in self.points))

    def index_of(self, x) -> int | None:
        x = tuple(int(c) for c in x)
        try:
            return self.points.index(x)
        except ValueError:
            return None

    @property
    def origin_index(self) -> int | None:
        return self.index_of((0,) * self.dimension)

    @property
    def radius(self) -> float:
        """Largest Euclidean norm of a point."""
        return float(np.linalg.norm(self.array, axis=1).max())

    @property
    def diameter(self) -> float:
        a = self.array
        return float(np.linalg.norm(a[:, None, :] - a[None, :, :], axis=-1).max())


def unit_vector(d: int, i: int, sign: int = 1) -> tuple[int, ...]:
    return tuple(sign if j == i else 0 for j in range(d))


def origin_set(d: int) -> SiteSet:
    return SiteSet(((0,) * d,))


def pair_set(y) -> SiteSet:
    y = tuple(int(c) for c in y)
    if not any(y):
        raise ZeroOffset("pair {0, y} needs y != 0")
    return SiteSet(((0,) * len(y), y))


def sphere1(d: int) -> SiteSet:
    """``S(0,1) = {e_1..e_d, -e_1..-e_d}``."""
    return SiteSet(tuple(unit_vector(d, i) for i in range(d)) + tuple(unit_vector(d, i, -1) for i in range(d)))


def ball1(d: int) -> SiteSet:
    """``B(0,1) = {0} u S(0,1)``."""
    return SiteSet(((0,) * d,) + sphere1(d).points)


def parse_set_ref(ref: str, d: int) -> SiteSet:
    """Resolve ``origin``, ``pair:y``, ``sphere1``, ``ball1`` or a JSON file path.

    ``y`` is ``e<i>`` (1-based unit vector) or a comma-separated vector.
    """
    if ref == "origin":
        return origin_set(d)
    if ref == "sphere1":
        return sphere1(d)
    if ref == "ball1":
        return ball1(d)
    if ref.startswith("pair:"):
        spec = ref.split(":", 1)[1]
        if spec.startswith("e"):
            y = unit_vector(d, int(spec[1:]) - 1)
        else:
            y = tuple(int(c) for c in spec.split(","))
        return pair_set(y)
    from .io import load_site_set

    return load_site_set(ref)


@dataclass(frozen=True)
class GreenMatrix:
    sites: SiteSet
    entries: np.ndarray
    tol: float


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a Green matrix sorted by decreasing eigenvalue.

    ``vectors[:, j]`` is ``phi_j``. ``weights`` (``h_j``) is only set when an
    origin index was supplied.
    """

    lambdas: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray | None
    ratios: np.ndarray
    origin_index: int | None = None

    @property
    def perron(self) -> float:
        return float(self.lambdas[0])


@dataclass(frozen=True)
class LimitConstant:
    lam: float
    theta_star: float
    constant: float


def build_green_matrix(walk: ValidatedWalk, sites: SiteSet, tol: float = DEFAULT_TOL) -> GreenMatrix:
    """``G_A(x_i, x_j) = G(x_i - x_j)`` from the shared Green table."""
    table = get_table(walk, tol)
    pts = sites.array
    diffs = pts[:, None, :] - pts[None, :, :]
    reach = int(np.abs(diffs).max())
    if reach <= max(table.radius, 12):
        mat = table.lookup(diffs)
    else:
        flat = diffs.reshape(-1, pts.shape[1])
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        table.ensure_points(uniq)
        mat = np.array([table(u) for u in uniq])[inv.ravel()].reshape(diffs.shape[:2])
    mat = 0.5 * (mat + mat.T)
    return GreenMatrix(sites, mat, tol)


def _round_robin(m: int):
    """Disjoint index pairs covering every pair of ``range(m)`` once per sweep (``m`` even)."""
    order = list(range(m))
    for _ in range(m - 1):
        yield [(order[i], order[m - 1 - i]) for i in range(m // 2)]
        order = [order[0], order[-1]] + order[1:-1]


def jacobi_eigh(mat, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Rotations on disjoint index pairs commute, so each round of the
    round-robin ordering is applied to all its pairs at once. Stops when the
    off-diagonal Frobenius norm is at most ``tol * ||mat||_F``.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns.
    """
    a = np.array(mat, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    target = tol * scale
    m = n + (n % 2)
    rounds = []
    for pairs in _round_robin(m):
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))

    def off_norm():
        off = a - np.diag(a.diagonal())
        return float(np.linalg.norm(off))

    for _ in range(max_sweeps):
        if off_norm() <= target:
            break
        for p, q in rounds:
            apq = a[p, q]
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(tau) > 1e150
            tau_safe = np.where(big, 0.0, tau)
            t = np.where(tau_safe >= 0, 1.0, -1.0) / (np.abs(tau_safe) + np.sqrt(1.0 + tau_safe * tau_safe))
            t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        if off_norm() > target:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = a.diagonal().copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        big = np.abs(col) > 1e-12 * np.abs(col).max()
        first = col[np.argmax(big)]
        if first < 0:
            vectors[:, j] = -col
    return vectors


def eigendecompose(mat: GreenMatrix | np.ndarray, origin_index: int | None = None) -> SpectralDecomposition:
    """Full eigendecomposition with ``h_j = (1, phi_j) phi_j(0)`` and ``f_j = (lambda_j - 1)/lambda_j``.

    ``phi_1`` is scaled so its first entry is positive; for a Green matrix it is
    then entrywise positive.
    """
    entries = mat.entries if isinstance(mat, GreenMatrix) else np.asarray(mat, dtype=float)
    if isinstance(mat, GreenMatrix) and origin_index is None:
        origin_index = mat.sites.origin_index
    lambdas, vectors = jacobi_eigh(entries)
    vectors = _normalize_signs(vectors)
    weights = None
    if origin_index is not None:
        weights = vectors.sum(axis=0) * vectors[origin_index, :]
    ratios = (lambdas - 1.0) / lambdas
    return SpectralDecomposition(lambdas, vectors, weights, ratios, origin_index)


def power_iteration(matvec, n: int, tol: float = 1e-13, max_iter: int = 5000, start=None):
    """Perron eigenpair of a positive symmetric operator given only ``matvec``.

    Starts from a positive vector and stops when successive Rayleigh quotients
    differ by less than ``tol`` relative. Returns ``(value, vector, iterations)``.
    """
    x = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    x /= np.linalg.norm(x)
    prev = None
    for it in range(1, max_iter + 1):
        y = matvec(x)
        rq = float(x @ y)
        if np.any(y <= 0):
            raise PowerIterationStall("iterate lost positivity; kernel is not entrywise positive")
        x = y / np.linalg.norm(y)
        if prev is not None and abs(rq - prev) < tol * abs(rq):
            return rq, x, it
        prev = rq
    raise PowerIterationStall(f"no convergence after {max_iter} iterations")


def lambda_max(walk: ValidatedWalk, sites: SiteSet, tol: float = DEFAULT_TOL) -> float:
    """``Lambda_A``, the Perron eigenvalue of ``G_A``."""
    return eigendecompose(build_green_matrix(walk, sites, tol)).perron


def limit_constant(lam: float) -> LimitConstant:
    """``theta* = log(lam/(lam-1))`` and the constant ``1/theta* = -1/log(1 - 1/lam)``."""
    lam = float(lam)
    if not lam > 1.0:
        raise LambdaNotAboveOne(f"Perron eigenvalue {lam} must exceed 1")
    theta = -math.log1p(-1.0 / lam)
    return LimitConstant(lam, theta, 1.0 / theta)


def two_point_constant(walk: ValidatedWalk, y, tol: float = DEFAULT_TOL) -> LimitConstant:
    """Closed form ``-1/log(1 - gamma_d/(1 + t_y))`` for ``A = {0, y}``."""
    y = tuple(int(c) for c in y)
    if not any(y):
        raise ZeroOffset("two-point set needs y != 0")
    gamma = escape_probability(walk, tol)
    t = hit_probability(walk, y, tol)
    return limit_constant((1.0 + t) / gamma)


def sphere_constant(d: int, tol: float = DEFAULT_TOL) -> LimitConstant:
    """SRW closed form for ``S(0,1)``: ``f_1 = 1 - gamma_d / (2d(1 - gamma_d))``."""
    gamma = escape_probability(srw(d), tol)
    f1 = 1.0 - gamma / (2 * d * (1.0 - gamma))
    return limit_constant(1.0 / (1.0 - f1))


def ball_p(d: int, tol: float = DEFAULT_TOL) -> float:
    gamma = escape_probability(srw(d), tol)
    return 1.0 - 1.0 / (2 * d * (1.0 - gamma))


def ball_ratios(d: int, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """The two ratios ``(p +- sqrt(p^2 + 2/d))/2`` that survive in the ``B(0,1)`` law."""
    p = ball_p(d, tol)
    r = math.sqrt(p * p + 2.0 / d)
    return (p + r) / 2.0, (p - r) / 2.0


def ball_constant(d: int, tol: float = DEFAULT_TOL) -> LimitConstant:
    """SRW closed form for ``B(0,1)``: ``-1/log((p + sqrt(p^2 + 2/d))/2)``."""
    f1, _ = ball_ratios(d, tol)
    return limit_constant(1.0 / (1.0 - f1))


def ball_reduction_matrix(d: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``L = [[1, 2ds], [s, Lambda]]`` with ``s = 1 - gamma_d``, ``Lambda = 2d(1 - gamma_d)``.

    ``G(0)`` times the eigenvalues of ``L`` are the eigenvalues of ``G_B(0,1)``
    on vectors of the form ``(v, w, .., w)``.
    """
    gamma = escape_probability(srw(d), tol)
    s = 1.0 - gamma
    lam = 2 * d * (1.0 - gamma)
    return np.array([[1.0, 2 * d * s], [s, lam]])


def ball_lambda_from_reduction(d: int, tol: float = DEFAULT_TOL) -> float:
    lmat = ball_reduction_matrix(d, tol)
    g0 = 1.0 / escape_probability(srw(d), tol)
    return g0 * float(np.max(np.linalg.eigvals(lmat).real))


@dataclass(frozen=True)
class NeighborBoundReport:
    bound: float
    gamma: float
    offsets: np.ndarray
    hit_margins: np.ndarray
    constant_margins: np.ndarray

    @property
    def min_hit_margin(self) -> float:
        return float(self.hit_margins.min())

    @property
    def min_constant_margin(self) -> float:
        return float(self.constant_margins.min())

    @property
    def ok(self) -> bool:
        return self.min_hit_margin > 0 and self.min_constant_margin > 0


def neighbor_bound_check(walk: ValidatedWalk, radius: int, tol: float = DEFAULT_TOL) -> NeighborBoundReport:
    """Check ``t_y^2 < 1 - gamma`` and the two-point constant bound for ``0 < |y| <= radius``."""
    d = walk.dimension
    gamma = escape_probability(walk, tol)
    bound = -2.0 / math.log1p(-gamma)
    r = int(radius)
    ys = [
        y for y in product(range(-r, r + 1), repeat=d)
        if 0 < sum(c * c for c in y) <= radius * radius
    ]
    get_table(walk, tol).ensure_radius(r)
    hit, const = [], []
    for y in ys:
        t = hit_probability(walk, y, tol)
        hit.append((1.0 - gamma) - t * t)
        const.append(bound - two_point_constant(walk, y, tol).constant)
    return NeighborBoundReport(bound, gamma, np.array(ys), np.array(hit), np.array(const))
