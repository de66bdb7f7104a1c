import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occulattice.errors import OriginNotInSet
from occulattice.green import escape_probability, hit_probability
from occulattice.law import (
    ball_law_closed,
    ball_weights,
    law_table,
    occupation_law,
    occupation_pmf,
    occupation_survival,
    tail_asymptote,
)
from occulattice.spectral import SiteSet, ball1, ball_ratios, build_green_matrix, origin_set, pair_set, sphere1
from occulattice.walk import srw


def return_chain_survival(walk, sites, u):
    """Oracle: ``Q = I - G_A^{-1}`` is the substochastic kernel of successive visits to ``A``,
    so ``P(J > u) = (Q^u 1)(0)``; no eigendecomposition involved."""
    g = build_green_matrix(walk, sites).entries
    q = np.eye(len(g)) - np.linalg.inv(g)
    v = np.linalg.matrix_power(q, u) @ np.ones(len(g))
    return float(v[sites.origin_index])


def test_single_site_geometric(walk3):
    g = escape_probability(walk3, 1e-8)
    law = occupation_law(walk3, origin_set(3))
    for u in range(20):
        assert law.survival(u) == pytest.approx((1 - g) ** u, rel=1e-12)
    for k in range(1, 20):
        assert law.pmf(k) == pytest.approx(g * (1 - g) ** (k - 1), rel=1e-12)


def test_pair_law(walk3):
    y = (1, 1, 0)
    g = escape_probability(walk3, 1e-8)
    t = hit_probability(walk3, y, 1e-8)
    law = occupation_law(walk3, pair_set(y))
    assert law.weights == pytest.approx([1, 0], abs=1e-13)
    for u in range(15):
        assert law.survival(u) == pytest.approx((1 - g / (1 + t)) ** u, rel=1e-11)


def test_sphere_law_from_e1(walk3):
    g = escape_probability(walk3, 1e-8)
    sites = sphere1(3).translate((-1, 0, 0))
    for u in range(15):
        assert occupation_survival(walk3, sites, u) == pytest.approx((1 - g / (6 * (1 - g))) ** u, rel=1e-10)


@pytest.mark.parametrize("d,size", [(3, 7), (4, 9)])
def test_ball_two_weights(d, size):
    w = srw(d)
    law = occupation_law(w, ball1(d))
    assert len(law.weights) == size
    assert int(np.sum(np.abs(law.weights) > 1e-10)) == 2
    h1, h2 = ball_weights(d)
    assert h1 + h2 == pytest.approx(1.0, abs=1e-10)
    fp, fm = ball_ratios(d)
    assert fm < 0 < fp
    for u in range(25):
        assert law.survival(u) == pytest.approx(ball_law_closed(d, u), abs=1e-12)


def test_ball_weights_value():
    h1, h2 = ball_weights(3)
    assert h1 == pytest.approx(1.27333, abs=1e-5)
    assert h2 == pytest.approx(-0.27333, abs=1e-5)


def test_ball_is_not_geometric(walk3):
    law = occupation_law(walk3, ball1(3))
    r = [law.survival(u + 1) / law.survival(u) for u in range(6)]
    # ratio of consecutive survivals oscillates instead of being constant
    assert max(r) - min(r) > 0.05
    assert (r[1] - r[0]) * (r[2] - r[1]) < 0


def test_origin_required(walk3):
    with pytest.raises(OriginNotInSet):
        occupation_law(walk3, SiteSet(((1, 0, 0), (2, 0, 0))))
    with pytest.raises(OriginNotInSet):
        occupation_pmf(walk3, SiteSet(((1, 0, 0),)), 1)


point = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))


@settings(max_examples=30, deadline=None)
@given(st.lists(point, min_size=0, max_size=7, unique=True))
def test_law_matches_return_chain(pts):
    w = srw(3)
    pts = [(0, 0, 0)] + [p for p in pts if p != (0, 0, 0)]
    sites = SiteSet.of(pts)
    law = occupation_law(w, sites)
    assert law.survival(0) == pytest.approx(1.0, abs=1e-13)
    prev = 1.0
    for u in range(0, 40, 3):
        s = law.survival(u)
        assert s == pytest.approx(return_chain_survival(w, sites, u), abs=1e-12)
        assert -1e-12 <= s <= prev + 1e-12
        prev = s
    pmf = law.pmf_array(range(1, 2001))
    assert pmf.min() >= -1e-12


def test_pmf_nonnegative_long_range(walk3):
    law = occupation_law(walk3, ball1(3))
    ks = np.arange(1, 10001, 7)
    assert min(law.pmf(k) for k in ks) >= -1e-12


def test_tail_asymptote(walk3):
    law = occupation_law(walk3, origin_set(3))
    h1, th = tail_asymptote(law)
    assert h1 == 1.0
    assert th == pytest.approx(-math.log(1 - escape_probability(walk3, 1e-8)), rel=1e-12)
    for sites in (ball1(3), sphere1(3).translate((-1, 0, 0)), SiteSet(((0, 0, 0), (1, 0, 0), (0, 2, 0)))):
        law = occupation_law(walk3, sites)
        h1, th = law.tail_asymptote()
        assert h1 > 0
        assert law.survival(200) * math.exp(th * 200) == pytest.approx(h1, abs=1e-9)
        rates = [-math.log(law.survival(u + 1) / law.survival(u)) for u in range(5, 40)]
        gaps = [abs(r - th) for r in rates]
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert law_table(law, 3)[0] == {"u": 0, "survival": law.survival(0), "pmf": 0.0, "asymptote_h1_f1u": h1}
