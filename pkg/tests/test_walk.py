import itertools
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occulattice.errors import AsymmetricStep, BadProbabilityMass, DegenerateLattice, DimensionTooLow
from occulattice.walk import (
    WalkSpec,
    _lattice_is_full,
    builtin_srw,
    characteristic_function,
    covariance,
    one_minus_psi,
    parse_walk_ref,
    srw,
    validate_walk,
)


def minors_gcd_full(offsets) -> bool:
    """Oracle: the rows span Z^d iff the gcd of all d x d minors is 1."""
    rows = np.asarray(offsets, dtype=np.int64)
    d = rows.shape[1]
    g = 0
    for idx in itertools.combinations(range(len(rows)), d):
        det = int(round(np.linalg.det(rows[list(idx)].astype(float))))
        g = math.gcd(g, abs(det))
    return g == 1


def test_srw3_valid():
    w = srw(3)
    assert len(w.probs) == 6
    assert np.allclose(w.probs, 1 / 6)
    assert w.is_srw


def test_srw4_steps():
    spec = builtin_srw(4)
    assert len(spec.steps) == 8
    assert all(abs(p - 1 / 8) < 1e-15 for _, p in spec.steps)


@pytest.mark.parametrize("d", [1, 2])
def test_low_dimension_rejected(d):
    with pytest.raises(DimensionTooLow):
        builtin_srw(d)
    steps = tuple(((1,) * d, 0.5) for _ in range(1)) + (((-1,) * d, 0.5),)
    with pytest.raises(DimensionTooLow):
        validate_walk(WalkSpec(d, steps))


def test_parity_lattice_is_degenerate():
    signs = list(itertools.product((1, -1), repeat=3))
    steps = tuple((s, 1 / 8) for s in signs)
    with pytest.raises(DegenerateLattice):
        validate_walk(WalkSpec(3, steps))
    assert not minors_gcd_full(signs)


def test_asymmetric_rejected():
    steps = (((1, 0, 0), 0.2), ((-1, 0, 0), 0.3), ((0, 1, 0), 0.125), ((0, -1, 0), 0.125),
             ((0, 0, 1), 0.125), ((0, 0, -1), 0.125))
    with pytest.raises(AsymmetricStep):
        validate_walk(WalkSpec(3, steps))


def test_mass_tolerance():
    base = list(builtin_srw(3).steps)
    off = [(o, p + 1e-11 / 6) for o, p in base]
    with pytest.raises(BadProbabilityMass):
        validate_walk(WalkSpec(3, tuple(off)))
    near = [(o, p + 1e-14) for o, p in base]
    w = validate_walk(WalkSpec(3, tuple(near)))
    assert abs(w.probs.sum() - 1) < 1e-15
    with pytest.raises(BadProbabilityMass):
        validate_walk(WalkSpec(3, (((1, 0, 0), 0.0), ((-1, 0, 0), 1.0))))


def test_duplicate_offsets_merge():
    steps = list(builtin_srw(3).steps)
    (o, p) = steps[0]
    steps = steps[1:] + [(o, p / 2), (o, p / 2)]
    w = validate_walk(WalkSpec(3, tuple(steps)))
    assert w.walk_id == srw(3).walk_id


def test_walk_id_order_independent():
    steps = list(builtin_srw(3).steps)
    w2 = validate_walk(WalkSpec(3, tuple(reversed(steps))))
    assert w2.walk_id == srw(3).walk_id


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(*[st.integers(-3, 3)] * 3), min_size=1, max_size=6))
def test_lattice_fullness_matches_minor_gcd(vectors):
    rows = np.array(vectors, dtype=np.int64)
    rows = rows[np.any(rows != 0, axis=1)] if len(rows) else rows
    if len(rows) < 3:
        if len(rows):
            assert not _lattice_is_full(rows)
        return
    assert _lattice_is_full(rows) == minors_gcd_full(rows)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_covariance_srw(d):
    c = covariance(srw(d))
    assert c.isotropic_sigma2 == pytest.approx(1 / d, abs=1e-15)
    assert np.allclose(c.matrix, np.eye(d) / d)


def test_covariance_anisotropic():
    steps = (((1, 0, 0), 1 / 3), ((-1, 0, 0), 1 / 3), ((0, 1, 0), 1 / 12), ((0, -1, 0), 1 / 12),
             ((0, 0, 1), 1 / 12), ((0, 0, -1), 1 / 12))
    c = covariance(validate_walk(WalkSpec(3, steps)))
    assert c.isotropic_sigma2 is None
    assert np.all(np.linalg.eigvalsh(c.matrix) >= 0)


def test_characteristic_values(walk3):
    assert characteristic_function(walk3, [0, 0, 0]) == 1.0
    assert characteristic_function(walk3, [math.pi] * 3) == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3))
def test_characteristic_closed_form_and_bounds(p):
    w = srw(3)
    psi = characteristic_function(w, p)
    assert psi == pytest.approx(np.mean(np.cos(p)), abs=1e-14)
    assert psi == characteristic_function(w, [-c for c in p])
    omp = float(one_minus_psi(w, np.array(p)))
    assert -1e-15 <= omp <= 2 + 1e-15
    assert omp == pytest.approx(1 - psi, abs=1e-14)


def test_one_minus_psi_small_p_precision(walk3):
    p = np.array([1e-9, 0, 0])
    # 1 - cos(1e-9) / 3 is below double resolution when formed as a difference
    assert float(one_minus_psi(walk3, p)) == pytest.approx(1e-18 / 6, rel=1e-12)


def test_parse_walk_ref_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text('{"dimension": 3, "steps": [' + ",".join(
        f'{{"offset": {list(o)}, "prob": {p}}}' for o, p in builtin_srw(3).steps) + "]}")
    assert parse_walk_ref(str(path)).walk_id == srw(3).walk_id
    assert parse_walk_ref("srw:4").dimension == 4
