import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from occulattice.continuum import (
    DomainSpec,
    GreenConvolution,
    bessel_first_zero,
    bessel_reference,
    convergence_study,
    discrete_lambda,
    lattice_cover,
    parse_domain_ref,
    perron_value,
    potential_constant,
    potential_density,
    rescaling_check,
)
from occulattice.errors import AnisotropicWalk, EmptyCover, OriginSingularity, RootNotBracketed
from occulattice.green import green
from occulattice.spectral import SiteSet, build_green_matrix


def brute_ball_cover(r, eps, d):
    m = int(r / eps) + 2
    out = set()
    for i in itertools.product(range(-m, m + 1), repeat=d):
        if all(sum((Fraction(a + c) * eps) ** 2 for a, c in zip(i, cs)) <= r * r
               for cs in itertools.product((0, 1), repeat=d)):
            out.add(i)
    return out


def test_cube_cover_counts():
    cov = lattice_cover(DomainSpec.cube(1, 3), Fraction(1, 2))
    assert len(cov) == 8
    assert sorted(map(tuple, cov.indices.tolist())) == sorted(itertools.product((-1, 0), repeat=3))
    assert len(lattice_cover(DomainSpec.cube(1, 3), Fraction(1, 8))) == 8**3
    assert lattice_cover(DomainSpec.cube(1, 3), Fraction(1, 8)).covered_volume == pytest.approx(1.0)


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)])
def test_ball_cover_exact(eps):
    cov = lattice_cover(DomainSpec.ball(1, 3), eps)
    assert set(map(tuple, cov.indices.tolist())) == brute_ball_cover(Fraction(1), eps, 3)


def test_ball_cover_volume_trend():
    vols = [lattice_cover(DomainSpec.ball(1, 3), Fraction(1, k)).covered_volume for k in (2, 4, 8, 16)]
    assert all(a < b for a, b in zip(vols, vols[1:]))
    assert vols[-1] < 4 * math.pi / 3


def test_empty_cover():
    with pytest.raises(EmptyCover):
        lattice_cover(DomainSpec.ball(Fraction(1, 2), 3), 1)
    with pytest.raises(ValueError):
        lattice_cover(DomainSpec.ball(1, 3), 0)


def test_custom_domain_single_cube(walk3):
    unit = DomainSpec.custom(lambda x: np.all((x >= 0) & (x <= 1), axis=-1), 1.0, 3)
    cov = lattice_cover(unit, 1)
    assert cov.indices.tolist() == [[0, 0, 0]]
    assert discrete_lambda(walk3, unit, 1) == pytest.approx(green(walk3, (0, 0, 0), 1e-8), rel=1e-10)


def test_fft_matvec_matches_dense(walk3):
    cov = lattice_cover(DomainSpec.ball(1, 3), Fraction(1, 4))
    sites = SiteSet.of([tuple(p) for p in cov.indices.tolist()])
    dense = build_green_matrix(walk3, sites).entries
    op = GreenConvolution(walk3, sites.array)
    v = np.random.default_rng(0).normal(size=len(sites))
    assert np.allclose(op(v), dense @ v, rtol=1e-10, atol=1e-12)


def test_power_iteration_vs_eigvalsh(walk3):
    cov = lattice_cover(DomainSpec.ball(1, 3), Fraction(1, 8))
    sites = SiteSet.of([tuple(p) for p in cov.indices.tolist()])
    dense = build_green_matrix(walk3, sites).entries
    ref = np.linalg.eigvalsh(dense)[-1]
    assert perron_value(walk3, cov.indices) == pytest.approx(ref, rel=1e-6)
    assert perron_value(walk3, cov.indices + np.array([7, -3, 2])) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_bessel_reference(d):
    nu = d / 2 - 2
    r = bessel_first_zero(nu)
    assert abs(special.jv(nu, r)) < 1e-12
    if float(nu).is_integer() and nu >= 0:
        assert r == pytest.approx(special.jn_zeros(int(nu), 1)[0], abs=1e-10)
    assert bessel_reference(d) == pytest.approx(2 / r**2)
    grid = np.linspace(1e-6, r * (1 - 1e-9), 400)
    assert np.all(special.jv(nu, grid) * special.jv(nu, grid[0]) > 0) or nu < 0


def test_bessel_d3_closed_form():
    # J_{-1/2}(x) is proportional to cos x, so the first zero is pi / 2
    assert bessel_first_zero(-0.5) == pytest.approx(math.pi / 2, abs=1e-12)
    assert bessel_reference(3) == pytest.approx(8 / math.pi**2, abs=1e-12)


def test_bessel_root_not_bracketed():
    with pytest.raises(RootNotBracketed):
        bessel_first_zero(0.0, x_max=1.0)
    with pytest.raises(ValueError):
        bessel_reference(2)


def test_potential_density():
    assert potential_constant(3) == pytest.approx(1 / (2 * math.pi))
    assert potential_constant(4) == pytest.approx(1 / (2 * math.pi**2))
    x = np.array([0.3, -1.2, 0.7])
    for d in (3,):
        assert potential_density(d, 2 * x) == pytest.approx(2 ** (2 - d) * potential_density(d, x))
    assert potential_density(3, [1, 0, 0]) == pytest.approx(1 / (2 * math.pi))
    with pytest.raises(OriginSingularity):
        potential_density(3, [0, 0, 0])


def test_rescaling_check(walk3, walk4):
    # relative correction to the asymptote is O(r^-2), about 0.3% at r = 10
    assert rescaling_check(walk3) < 5e-3
    g10 = rescaling_check(walk4, radii=[10])
    g15 = rescaling_check(walk4, radii=[15])
    assert g15 / g10 == pytest.approx((10 / 15) ** 2, rel=0.1)


def test_study_validation(walk3, mixed_walk):
    with pytest.raises(AnisotropicWalk):
        convergence_study(mixed_walk, DomainSpec.ball(1, 3), [Fraction(1, 2)])
    with pytest.raises(ValueError):
        convergence_study(walk3, DomainSpec.ball(1, 3), [Fraction(1, 4), Fraction(1, 2)])
    with pytest.raises(ValueError):
        convergence_study(walk3, DomainSpec.ball(1, 4), [Fraction(1, 2)])


def test_ball_study_improves(walk3):
    rep = convergence_study(walk3, DomainSpec.ball(1, 3), [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
    errs = rep.errors()
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert rep.sigma2 == pytest.approx(1 / 3)
    for row in rep.rows:
        assert row.log_form_value < row.rescaled_value < row.reference
    gaps = [r.rescaled_value - r.log_form_value for r in rep.rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_cube_self_convergence(walk3):
    rep = convergence_study(walk3, DomainSpec.cube(1, 3), [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
    diffs = rep.self_differences()
    assert diffs[1] < diffs[0]
    assert all(r.reference is None and r.relative_error is None for r in rep.rows)


def test_parse_domain_ref(tmp_path):
    assert parse_domain_ref("ball:1", 3) == DomainSpec.ball(1, 3)
    assert parse_domain_ref("cube:1/2", 3).size == Fraction(1, 2)
    f = tmp_path / "dom.json"
    f.write_text('{"kind": "ball", "dimension": 4, "radius": "3/2"}')
    dom = parse_domain_ref(str(f), 4)
    assert dom.kind == "ball" and dom.size == Fraction(3, 2) and dom.dimension == 4
