"""Lattice covers of a compact set and the continuum limit of the Perron eigenvalue.

For ``K`` a compact neighbourhood of the origin, ``L_eps(K)`` is the set of
``x in eps Z^d`` whose cube ``x + [0, eps]^d`` lies inside ``K``. As
``eps -> 0`` the scaled eigenvalue ``eps^2 Lambda`` of the Green matrix on
``L_eps(K) / eps`` tends to the norm ``Lambda0_K`` of the operator with kernel
``u0(x - y) = c_d |x - y|^(2-d)`` on ``L^2(K)``. For the unit ball
``Lambda0 = 2 / r_d^2`` with ``r_d`` the first positive zero of ``J_{d/2-2}``.

Walks with covariance ``sigma^2 I`` are compared through ``eps^2 Lambda sigma^2``
since ``G(x) ~ sigma^-2 u0(x)`` far from the origin.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.fft

from .errors import AnisotropicWalk, EmptyCover, OriginSingularity, RootNotBracketed
from .green import DEFAULT_TOL, asymptotic_green, get_table
from .spectral import SiteSet, power_iteration
from .walk import ValidatedWalk, covariance

log = logging.getLogger(__name__)

POWER_TOL = 1e-12


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(float(x)).limit_denominator(10**9)


@dataclass(frozen=True)
class DomainSpec:
    """A compact set ``K`` in ``R^d`` with a membership test.

    Built-ins are ``ball`` (closed Euclidean ball of ``size`` = radius about the
    origin) and ``cube`` (``[-size/2, size/2]^d``). Their cover tests run in
    exact rational arithmetic. A ``custom`` domain supplies ``predicate`` on
    float points and a bounding ``half_width``; its cover test checks corners and
    centre, which is exact for convex sets.
    """

    kind: str
    dimension: int
    size: Fraction
    predicate: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    half_width: float | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "cube", "custom"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "custom":
            if self.predicate is None or self.half_width is None:
                raise ValueError("custom domains need a predicate and a half_width")
            if not self.predicate(np.zeros((1, self.dimension)))[0]:
                raise ValueError("domain must contain the origin")
        elif self.size <= 0:
            raise ValueError("domain size must be positive")

    @classmethod
    def ball(cls, radius=1, dimension: int = 3) -> "DomainSpec":
        return cls("ball", int(dimension), _as_fraction(radius))

    @classmethod
    def cube(cls, side=1, dimension: int = 3) -> "DomainSpec":
        return cls("cube", int(dimension), _as_fraction(side))

    @classmethod
    def custom(cls, predicate, half_width: float, dimension: int) -> "DomainSpec":
        return cls("custom", int(dimension), Fraction(0), predicate, float(half_width))

    @property
    def bound(self) -> float:
        """Half-width of an origin-centred box holding ``K``."""
        if self.kind == "ball":
            return float(self.size)
        if self.kind == "cube":
            return float(self.size) / 2
        return float(self.half_width)

    @property
    def volume(self) -> float | None:
        d = self.dimension
        if self.kind == "ball":
            return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * float(self.size) ** d
        if self.kind == "cube":
            return float(self.size) ** d
        return None

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "ball":
            return np.einsum("ij,ij->i", x, x) <= float(self.size) ** 2
        if self.kind == "cube":
            return np.all(np.abs(x) <= float(self.size) / 2, axis=1)
        return np.asarray(self.predicate(x), dtype=bool)


@dataclass(frozen=True)
class LatticeCover:
    epsilon: Fraction
    indices: np.ndarray  # integer points i, sites are eps * i

    @property
    def sites(self) -> np.ndarray:
        return self.indices * float(self.epsilon)

    @property
    def scaled_set(self) -> SiteSet:
        return SiteSet.of(self.indices)

    def __len__(self):
        return len(self.indices)

    @property
    def covered_volume(self) -> float:
        return len(self) * float(self.epsilon) ** self.indices.shape[1]


def lattice_cover(domain: DomainSpec, epsilon) -> LatticeCover:
    """``L_eps(K)``: the lower corners ``x in eps Z^d`` with ``x + [0, eps]^d`` inside ``K``."""
    eps = _as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    d = domain.dimension
    m = int(math.ceil(domain.bound / float(eps))) + 1
    axis = np.arange(-m, m + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    corners = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)
    if domain.kind == "ball":
        # |eps (i + c)|^2 <= r^2  <=>  |i + c|^2 <= (r / eps)^2, in integers
        q = (domain.size / eps) ** 2
        ok = np.ones(len(grid), dtype=bool)
        for c in corners:
            n2 = ((grid + c) ** 2).sum(axis=1)
            ok &= n2 * q.denominator <= q.numerator
    elif domain.kind == "cube":
        # eps * (i + c) in [-s/2, s/2]  <=>  |2 (i + c)| * eps <= s
        h = domain.size / (2 * eps)
        ok = np.ones(len(grid), dtype=bool)
        for c in corners:
            lim = np.abs(grid + c) * h.denominator <= h.numerator
            ok &= lim.all(axis=1)
    else:
        e = float(eps)
        ok = domain.contains((grid + 0.5) * e)
        for c in corners:
            ok &= domain.contains((grid + c) * e)
    pts = grid[ok]
    if len(pts) == 0:
        raise EmptyCover(f"no cube of edge {eps} fits inside the domain")
    return LatticeCover(eps, pts)


class GreenConvolution:
    """Matrix-free ``G_A`` for a finite ``A`` in ``Z^d``, applied by FFT convolution.

    The kernel ``G(z - z')`` is translation invariant, so ``G_A v`` is the
    restriction to ``A`` of ``G * v`` on the bounding box of ``A``.
    """

    def __init__(self, walk: ValidatedWalk, points: np.ndarray, tol: float = DEFAULT_TOL):
        pts = np.asarray(points, dtype=np.int64)
        self.lo = pts.min(axis=0)
        self.shape = tuple(int(s) for s in pts.max(axis=0) - self.lo + 1)
        self.idx = tuple((pts - self.lo).T)
        reach = max(self.shape) - 1
        table = get_table(walk, tol)
        table.ensure_radius(reach)
        d = pts.shape[1]
        # kernel on [-(s-1), s-1] along each axis, stored with wrap-around
        self.fshape = tuple(scipy.fft.next_fast_len(2 * s - 1, real=True) for s in self.shape)
        ker = np.zeros(self.fshape)
        sl = tuple(
            np.concatenate([np.arange(0, s), np.arange(-(s - 1), 0)]) for s in self.shape
        )
        coords = np.stack(np.meshgrid(*sl, indexing="ij"), axis=-1)
        ker_idx = tuple(np.where(c < 0, c + f, c) for c, f in zip(np.moveaxis(coords, -1, 0), self.fshape))
        ker[ker_idx] = table.lookup(coords.reshape(-1, d)).reshape(coords.shape[:-1])
        self.kernel_hat = scipy.fft.rfftn(ker, self.fshape)
        self.n = len(pts)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        box = np.zeros(self.shape)
        box[self.idx] = v
        out = scipy.fft.irfftn(scipy.fft.rfftn(box, self.fshape) * self.kernel_hat, self.fshape)
        return out[self.idx]


def discrete_lambda(
    walk: ValidatedWalk,
    domain: DomainSpec,
    epsilon,
    tol: float = POWER_TOL,
    green_tol: float = DEFAULT_TOL,
) -> float:
    """``eps^2 Lambda`` for the Green matrix on the scaled cover ``L_eps(K) / eps``.

    The Perron eigenvalue comes from power iteration on :class:`GreenConvolution`,
    stopping when successive Rayleigh quotients differ by less than ``tol``
    relative.
    """
    cover = lattice_cover(domain, epsilon)
    lam = perron_value(walk, cover.indices, tol, green_tol)
    return float(cover.epsilon) ** 2 * lam


def perron_value(walk: ValidatedWalk, points, tol: float = POWER_TOL, green_tol: float = DEFAULT_TOL) -> float:
    """Largest eigenvalue of ``G_A`` computed matrix-free."""
    op = GreenConvolution(walk, points, green_tol)
    lam, _, iters = power_iteration(op, op.n, tol=tol)
    log.info("power iteration: |A|=%d, %d iterations, lambda=%.12g", op.n, iters, lam)
    return lam


def _bessel_series(nu: float, x: float) -> float:
    """``J_nu(x)`` from its ascending series; adequate for ``x`` up to about 20."""
    half = x / 2.0
    terms = []
    k = 0
    while True:
        a = k + nu + 1
        if a <= 0 and float(a).is_integer():
            # 1/Gamma vanishes at non-positive integers
            term = 0.0
        else:
            term = (-1) ** k * math.exp((2 * k + nu) * math.log(half) - math.lgamma(k + 1) - math.lgamma(a))
            term *= math.copysign(1.0, math.gamma(a)) if a < 0 else 1.0
        terms.append(term)
        if k > x and abs(term) < 1e-18 * max(abs(t) for t in terms):
            break
        k += 1
        if k > 500:
            break
    return math.fsum(terms)


def bessel_first_zero(nu: float, step: float = 0.05, x_max: float | None = None) -> float:
    """Smallest positive root of ``J_nu`` by scanning for a sign change, then bisection."""
    x_max = x_max if x_max is not None else 8.0 + 2.0 * abs(nu)
    a = step
    fa = _bessel_series(nu, a)
    while a < x_max:
        b = a + step
        fb = _bessel_series(nu, b)
        if fa == 0.0:
            return a
        if fa * fb < 0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                if mid in (a, b):
                    break
                fm = _bessel_series(nu, mid)
                if fm == 0.0:
                    return mid
                if fa * fm < 0:
                    b = mid
                else:
                    a, fa = mid, fm
            return 0.5 * (a + b)
        a, fa = b, fb
    raise RootNotBracketed(f"no sign change of J_{nu} on (0, {x_max}]")


def bessel_reference(d: int) -> float:
    """``Lambda0`` of the unit ball, ``2 / r_d^2`` with ``r_d`` the first zero of ``J_{d/2-2}``."""
    if d < 3:
        raise ValueError("d must be >= 3")
    r = bessel_first_zero(d / 2.0 - 2.0)
    return 2.0 / (r * r)


def potential_constant(d: int) -> float:
    """``c_d = Gamma(d/2 - 1) / (2 pi^(d/2))``."""
    return math.gamma(d / 2 - 1) / (2 * math.pi ** (d / 2))


def potential_density(d: int, x) -> float:
    """``u0(x) = c_d |x|^(2-d)``."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise OriginSingularity("u0 is singular at the origin")
    return potential_constant(d) * r ** (2 - d)


def domain_reference(domain: DomainSpec) -> float | None:
    """``Lambda0_K`` when known in closed form (balls: scales as radius squared)."""
    if domain.kind == "ball":
        return bessel_reference(domain.dimension) * float(domain.size) ** 2
    return None


def rescaling_check(walk: ValidatedWalk, radii=range(10, 41, 5)) -> float:
    """Worst relative gap between ``G(r e_1)`` and its ``sigma^-2 u0`` form over ``radii``.

    The rescaled comparison is only meaningful when this is small.
    """
    d = walk.dimension
    table = get_table(walk)
    worst = 0.0
    for r in radii:
        x = (int(r),) + (0,) * (d - 1)
        g = table(x)
        a = float(asymptotic_green(walk, x))
        worst = max(worst, abs(g / a - 1.0))
    return worst


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: Fraction
    set_size: int
    lam: float
    discrete_value: float
    rescaled_value: float
    log_form_value: float
    reference: float | None
    relative_error: float | None


@dataclass(frozen=True)
class ConvergenceReport:
    rows: list[ConvergenceRow]
    sigma2: float
    domain: DomainSpec
    rescaling_gap: float

    def errors(self) -> list[float]:
        return [r.relative_error for r in self.rows]

    def self_differences(self) -> list[float]:
        v = [r.rescaled_value for r in self.rows]
        return [abs(b - a) for a, b in zip(v, v[1:])]


def convergence_study(
    walk: ValidatedWalk,
    domain: DomainSpec,
    epsilons,
    tol: float = POWER_TOL,
    green_tol: float = DEFAULT_TOL,
) -> ConvergenceReport:
    """Tabulate ``eps^2 Lambda sigma^2`` and ``-eps^2 sigma^2 / log(1 - 1/Lambda)`` along a schedule.

    Raises
    ------
    AnisotropicWalk
        When the step covariance is not a multiple of the identity.
    """
    cov = covariance(walk)
    if cov.isotropic_sigma2 is None:
        raise AnisotropicWalk("the continuum limit needs covariance sigma^2 I")
    if domain.dimension != walk.dimension:
        raise ValueError("domain and walk dimensions differ")
    eps = [_as_fraction(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")
    s2 = cov.isotropic_sigma2
    ref = domain_reference(domain)
    rows = []
    for e in eps:
        cover = lattice_cover(domain, e)
        lam = perron_value(walk, cover.indices, tol, green_tol)
        e2 = float(e) ** 2
        disc = e2 * lam
        resc = disc * s2
        logf = -e2 * s2 / math.log1p(-1.0 / lam)
        err = abs(resc - ref) / ref if ref is not None else None
        rows.append(ConvergenceRow(e, len(cover), lam, disc, resc, logf, ref, err))
    return ConvergenceReport(rows, s2, domain, rescaling_check(walk))


def parse_domain_ref(ref: str, d: int) -> DomainSpec:
    """``ball:r``, ``cube:s`` or a JSON domain file."""
    ref = ref.strip()
    kind, _, arg = ref.partition(":")
    if kind in ("ball", "cube") and arg:
        size = _as_fraction(arg)
        return DomainSpec.ball(size, d) if kind == "ball" else DomainSpec.cube(size, d)
    from .io import load_domain

    return load_domain(ref)
