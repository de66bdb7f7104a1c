"""Exact law of the total time a walk started at the origin spends in a finite set.

With ``G_A = sum_j lambda_j phi_j phi_j^T`` and ``h_j = (1, phi_j) phi_j(0)``,

    P(J > u) = sum_j h_j f_j^u,    f_j = (lambda_j - 1) / lambda_j,

and ``P(J = k) = sum_j h_j (1 - f_j) f_j^(k-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OriginNotInSet
from .green import DEFAULT_TOL
from .spectral import (
    SiteSet,
    SpectralDecomposition,
    ball1,
    build_green_matrix,
    eigendecompose,
)
from .walk import ValidatedWalk, srw


def _compensated_sum(terms: np.ndarray) -> float:
    """Neumaier summation in order of decreasing magnitude."""
    total = 0.0
    comp = 0.0
    for x in terms[np.argsort(-np.abs(terms), kind="stable")]:
        x = float(x)
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
    return total + comp


def _powers(f: np.ndarray, u: int) -> np.ndarray:
    # 0**0 == 1 is the right convention for lambda_j == 1
    return np.power(f, u)


@dataclass(frozen=True)
class OccupationLaw:
    decomposition: SpectralDecomposition
    sites: SiteSet

    @property
    def weights(self) -> np.ndarray:
        return self.decomposition.weights

    @property
    def ratios(self) -> np.ndarray:
        return self.decomposition.ratios

    def survival(self, u: int) -> float:
        """``P(J > u)`` for integer ``u >= 0``."""
        u = int(u)
        if u < 0:
            raise ValueError("u must be >= 0")
        return _compensated_sum(self.weights * _powers(self.ratios, u))

    def pmf(self, k: int) -> float:
        """``P(J = k)`` for integer ``k >= 1``."""
        k = int(k)
        if k < 1:
            raise ValueError("k must be >= 1")
        f = self.ratios
        return _compensated_sum(self.weights * (1.0 - f) * _powers(f, k - 1))

    def survival_array(self, us) -> np.ndarray:
        return np.array([self.survival(u) for u in us])

    def pmf_array(self, ks) -> np.ndarray:
        return np.array([self.pmf(k) for k in ks])

    def asymptote(self, u: int) -> float:
        """Leading term ``h_1 f_1^u``."""
        return float(self.weights[0] * self.ratios[0] ** int(u))

    def tail_asymptote(self) -> tuple[float, float]:
        return tail_asymptote(self)


def occupation_law(walk: ValidatedWalk, sites: SiteSet, tol: float = DEFAULT_TOL) -> OccupationLaw:
    """Spectral law of ``J = mu_infinity(A)`` for a set containing the origin.

    To start from another point ``a`` of ``A``, pass ``sites.translate(-a)``.
    """
    idx = sites.origin_index
    if idx is None:
        raise OriginNotInSet("the law needs the start point (origin) inside A")
    dec = eigendecompose(build_green_matrix(walk, sites, tol), idx)
    return OccupationLaw(dec, sites)


def occupation_survival(walk: ValidatedWalk, sites: SiteSet, u: int, tol: float = DEFAULT_TOL) -> float:
    return occupation_law(walk, sites, tol).survival(u)


def occupation_pmf(walk: ValidatedWalk, sites: SiteSet, k: int, tol: float = DEFAULT_TOL) -> float:
    return occupation_law(walk, sites, tol).pmf(k)


def tail_asymptote(law: OccupationLaw) -> tuple[float, float]:
    """``(h_1, theta*)`` with ``P(J > u) ~ h_1 exp(-theta* u)``."""
    h1 = float(law.weights[0])
    theta = -math.log(float(law.ratios[0]))
    return h1, theta


def ball_weights(d: int, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """The two nonzero weights of the SRW ``B(0,1)`` law.

    The weights of all eigenvectors of the form ``(0, u)`` with ``u`` orthogonal
    to the constant vector vanish; what survives is the two-dimensional block
    spanned by ``(1, 0..0)`` and ``(0, 1..1)``. Returns ``(h_1, h_2)`` matched to
    the ratios ``(p + r)/2`` and ``(p - r)/2``.
    """
    sites = ball1(d)
    law = occupation_law(srw(d), sites, tol)
    w = law.weights
    live = np.flatnonzero(np.abs(w) > 1e-10)
    if len(live) != 2:
        raise ArithmeticError(f"expected two nonzero ball weights, found {len(live)}")
    order = live[np.argsort(-law.ratios[live])]
    return float(w[order[0]]), float(w[order[1]])


def ball_law_closed(d: int, u: int, tol: float = DEFAULT_TOL) -> float:
    """``h_1 f_+^u + h_2 f_-^u`` with the two ball ratios in closed form."""
    from .spectral import ball_ratios

    h1, h2 = ball_weights(d, tol)
    fp, fm = ball_ratios(d, tol)
    return h1 * fp**u + h2 * fm**u


def law_table(law: OccupationLaw, u_max: int) -> list[dict]:
    """Rows ``u, survival, pmf, asymptote_h1_f1u`` for ``u = 0..u_max`` (pmf at ``u = 0`` is 0)."""
    rows = []
    for u in range(int(u_max) + 1):
        rows.append(
            {
                "u": u,
                "survival": law.survival(u),
                "pmf": law.pmf(u) if u >= 1 else 0.0,
                "asymptote_h1_f1u": law.asymptote(u),
            }
        )
    return rows
