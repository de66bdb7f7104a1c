import json
import math

import numpy as np
import pytest

from conftest import srw_green_oracle
from occulattice.errors import ZeroOffset
from occulattice.green import (
    GreenTable,
    adaptive_green_box,
    asymptotic_green,
    decay_constant,
    escape_probability,
    fourier_green_box,
    get_table,
    green,
    green_mc_oracle,
    hit_probability,
)
from occulattice.walk import srw

# return probability of the d=4 simple walk, 1 - 1/G(0), from a 30-digit mpmath integral
GAMMA4 = 0.806798326775016


@pytest.mark.parametrize("x", [(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 1, 0), (3, 2, 1), (5, 5, 5), (12, 0, 0)])
def test_green_matches_bessel_oracle(walk3, x):
    assert green(walk3, x, 1e-8) == pytest.approx(srw_green_oracle(x), abs=2e-9)


def test_watson_value(walk3):
    assert green(walk3, (0, 0, 0), 1e-6) == pytest.approx(1.516386059151978, abs=1e-6)
    assert escape_probability(walk3) == pytest.approx(0.659463, abs=1e-6)


def test_gamma4_against_mpmath(walk4):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 25
    g0 = mp.quad(lambda t: mp.besseli(0, t / 4) ** 4 * mp.exp(-t), [0, 10, 100, 1000, 10**4, mp.inf])
    assert float(1 / g0) == pytest.approx(GAMMA4, abs=1e-13)
    assert escape_probability(walk4, 1e-8) == pytest.approx(GAMMA4, abs=1e-8)


def test_first_step_identity(walk3):
    tol = 1e-8
    assert green(walk3, (0, 0, 0), tol) == pytest.approx(1 + green(walk3, (1, 0, 0), tol), abs=2 * tol)


def test_harmonic_equation_general_walk(mixed_walk):
    """``G(x) - sum_y p(y) G(x + y) = 1{x = 0}`` on a box, for a non-simple walk."""
    table = get_table(mixed_walk)
    table.ensure_radius(5)
    for x in [(0, 0, 0), (1, 0, 0), (2, -1, 1), (3, 1, -2)]:
        lhs = table(x) - sum(p * table(tuple(a + b for a, b in zip(x, y)))
                             for y, p in zip(mixed_walk.offsets, mixed_walk.probs))
        assert lhs == pytest.approx(1.0 if not any(x) else 0.0, abs=1e-7)


def test_symmetry_positivity(mixed_walk):
    table = get_table(mixed_walk)
    table.ensure_radius(4)
    cube = table.cube
    assert np.all(cube > 0)
    assert np.array_equal(cube, cube[::-1, ::-1, ::-1])
    assert table((0, 0, 0)) > 1


def test_hit_probabilities(walk3):
    t1 = hit_probability(walk3, (1, 0, 0))
    assert t1 == pytest.approx(1 - escape_probability(walk3), abs=2e-6)
    assert t1 == pytest.approx(0.340537, abs=1e-6)
    assert hit_probability(walk3, (10, 0, 0)) < t1
    assert hit_probability(walk3, (2, -1, 3)) == hit_probability(walk3, (-2, 1, -3))
    with pytest.raises(ZeroOffset):
        hit_probability(walk3, (0, 0, 0))


def test_decay_bounded_and_asymptote(walk3):
    c = decay_constant(walk3, radius=8)
    assert 0.3 < c < 1.0
    # G(x)|x| -> 3/(2 pi) for the simple walk in d = 3
    for r in (10, 20, 30, 40):
        g = green(walk3, (r, 0, 0), 1e-8)
        assert g * r == pytest.approx(3 / (2 * math.pi), rel=0.01)
        assert float(asymptotic_green(walk3, (r, 0, 0))) * r == pytest.approx(3 / (2 * math.pi), rel=1e-12)


def test_quadrature_convergence_and_resolution(walk3):
    c = [np.array([0, 3])] * 3
    lo = fourier_green_box(walk3, c, 24)
    hi = fourier_green_box(walk3, c, 64)
    assert abs(lo - hi).max() < 1e-4
    vals, err, n = adaptive_green_box(walk3, c, 1e-10)
    assert err <= 1e-10
    assert vals[0, 0, 0] == pytest.approx(1.516386059151978, abs=1e-12)


def test_cache_roundtrip(tmp_path, walk3):
    t = GreenTable(walk3, 1e-8)
    t.ensure_radius(2)
    t((9, 0, 1))
    path = tmp_path / "cache.json"
    t.save(path)
    payload = json.loads(path.read_text())
    assert payload["version"] == 1 and payload["walk_id"] == walk3.walk_id
    assert all(set(e) == {"x", "g"} for e in payload["entries"])
    back = GreenTable.load(walk3, path)
    assert back.radius == 2
    assert back((9, 0, 1)) == t((9, 0, 1))
    assert back((-9, 0, -1)) == t((9, 0, 1))
    assert np.array_equal(back.cube, t.cube)
    with pytest.raises(ValueError):
        GreenTable.load(srw(4), path)


def test_mc_oracle_small(walk3):
    est = green_mc_oracle(walk3, (0, 0, 0), 20000, 200.0, seed=3)
    g = green(walk3, (0, 0, 0))
    assert abs(est.value - g) <= 3 * est.stderr + est.bias_bound
    again = green_mc_oracle(walk3, (0, 0, 0), 20000, 200.0, seed=3)
    assert again == est
    assert est.stderr > 0 and est.bias_bound > 0
    with pytest.raises(ValueError):
        green_mc_oracle(walk3, (5, 0, 0), 10, 4.0, seed=0)
