"""Bundled verification suites.

Each ``criterion_*`` function runs one acceptance check end to end and returns
a :class:`CheckResult` carrying the measured quantities. Suites group them:

========== ==========================================================
examples   escape identity, closed forms, neighbour bound (2, 3, 4)
law        law identities, eigen-structure invariants (8, 10)
tails      Green oracle, law vs simulation, tail slope (1, 5, 6)
sup        sup-statistic trend (7)
continuum  lattice-to-continuum eigenvalue convergence (9)
all        everything
========== ==========================================================
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .continuum import DomainSpec, GreenConvolution, convergence_study
from .green import DEFAULT_TOL, escape_probability, get_table, green, green_mc_oracle
from .law import occupation_law
from .montecarlo import SimConfig, estimate_tail_slope, fit_log_slope, limit_trend, simulate_occupation
from .spectral import (
    SiteSet,
    ball1,
    ball_constant,
    ball_lambda_from_reduction,
    build_green_matrix,
    eigendecompose,
    jacobi_eigh,
    lambda_max,
    limit_constant,
    neighbor_bound_check,
    origin_set,
    pair_set,
    power_iteration,
    sphere1,
    sphere_constant,
    two_point_constant,
    unit_vector,
)
from .walk import srw


@dataclass
class CheckResult:
    criterion: str
    passed: bool
    summary: str
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.criterion}: {self.summary} ({self.seconds:.1f}s)"


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _tail_sets(d: int = 3) -> dict[str, SiteSet]:
    e1 = unit_vector(d, 0)
    return {
        "origin": origin_set(d),
        "pair_e1": pair_set(e1),
        "sphere_minus_e1": sphere1(d).translate(tuple(-c for c in e1)),
        "ball1": ball1(d),
    }


# ---------------------------------------------------------------- 1

@_timed
def criterion_1(n_walks: int = 10**5, radius: float = 1e3, seed: int = 2024) -> CheckResult:
    """Quadrature ``G(x)`` against the Monte Carlo oracle, band ``3 stderr + 0.01/R``."""
    walk = srw(3)
    rows = {}
    ok = True
    t0 = time.perf_counter()
    for i, x in enumerate([(0, 0, 0), (1, 0, 0), (2, 1, 0), (5, 5, 5)]):
        g = green(walk, x, DEFAULT_TOL)
        est = green_mc_oracle(walk, x, n_walks, radius, seed + i)
        band = 3 * est.stderr + 0.01 / radius
        good = abs(est.value - g) <= band
        ok &= good
        rows[str(x)] = {"quadrature": g, "mc": est.value, "stderr": est.stderr, "band": band, "ok": good}
    elapsed = time.perf_counter() - t0
    in_time = elapsed < 120
    worst = max(abs(r["mc"] - r["quadrature"]) / r["band"] for r in rows.values())
    return CheckResult(
        "1 green oracle",
        ok and in_time,
        f"worst |diff|/band = {worst:.2f}, runtime {elapsed:.0f}s (limit 120s)",
        {"points": rows, "runtime": elapsed},
    )


# ---------------------------------------------------------------- 2

@_timed
def criterion_2() -> CheckResult:
    """``lambda_max({0}) * gamma_d = 1`` for d = 3, 4."""
    out = {}
    for d in (3, 4):
        w = srw(d)
        out[d] = lambda_max(w, origin_set(d)) * escape_probability(w, DEFAULT_TOL)
    err = max(abs(v - 1) for v in out.values())
    gam = {d: escape_probability(srw(d), DEFAULT_TOL) for d in (3, 4)}
    return CheckResult(
        "2 escape identity",
        err <= 1e-8,
        f"max |Lambda*gamma - 1| = {err:.1e}; gamma_3 = {gam[3]:.6f}, gamma_4 = {gam[4]:.6f}",
        {"products": out, "gamma": gam},
    )


# ---------------------------------------------------------------- 3

@_timed
def criterion_3() -> CheckResult:
    """Closed-form constants against the generic pipeline, plus the ball 2x2 reduction."""
    diffs = {}
    red = {}
    for d in (3, 4):
        w = srw(d)
        e1 = unit_vector(d, 0)
        pairs = [
            ("pair", two_point_constant(w, e1).constant, pair_set(e1)),
            ("sphere", sphere_constant(d).constant, sphere1(d)),
            ("ball", ball_constant(d).constant, ball1(d)),
        ]
        for name, closed, sites in pairs:
            generic = limit_constant(lambda_max(w, sites)).constant
            diffs[f"{name}_d{d}"] = abs(closed - generic)
        red[d] = abs(ball_lambda_from_reduction(d) - lambda_max(w, ball1(d)))
    worst = max(diffs.values())
    worst_red = max(red.values())
    return CheckResult(
        "3 closed forms",
        worst <= 1e-6 and worst_red <= 1e-8,
        f"max closed-form gap {worst:.1e} (limit 1e-6), ball 2x2 gap {worst_red:.1e} (limit 1e-8)",
        {"constant_gaps": diffs, "reduction_gaps": red},
    )


# ---------------------------------------------------------------- 4

@_timed
def criterion_4(radius: int = 5) -> CheckResult:
    """``t_y^2 < 1 - gamma_3`` and the two-point constant below ``-2/log(1-gamma_3)`` for ``0 < |y| <= 5``."""
    rep = neighbor_bound_check(srw(3), radius)
    return CheckResult(
        "4 neighbour bound",
        rep.ok,
        f"{len(rep.offsets)} offsets, min margins {rep.min_hit_margin:.4f} (hit) and "
        f"{rep.min_constant_margin:.4f} (constant), bound {rep.bound:.4f}",
        {"min_hit_margin": rep.min_hit_margin, "min_constant_margin": rep.min_constant_margin},
    )


# ---------------------------------------------------------------- 5, 6

@lru_cache(maxsize=None)
def _tail_run(name: str, n_walks: int, radius: float, seed: int):
    sites = _tail_sets()[name]
    return simulate_occupation(SimConfig.for_set(srw(3), sites, n_walks, radius, seed))


@_timed
def criterion_5(n_walks: int = 2 * 10**5, radius: float = 1e3, seed: int = 7, u_max: int = 15) -> CheckResult:
    """Empirical survival against the spectral law, band ``3 stderr + bias bound``, ``u <= 15``."""
    walk = srw(3)
    t0 = time.perf_counter()
    rows = {}
    ok = True
    us = np.arange(u_max + 1)
    for i, (name, sites) in enumerate(_tail_sets().items()):
        est = _tail_run(name, n_walks, radius, seed + i)
        exact = occupation_law(walk, sites).survival_array(us)
        emp = est.survival_array(us)
        se = est.stderr_array(us)
        excess = np.abs(emp - exact) - (3 * se + est.bias_bound)
        good = bool(np.all(excess <= 0))
        ok &= good
        rows[name] = {
            "worst_excess": float(excess.max()),
            "bias_bound": est.bias_bound,
            "truncated_fraction": est.truncated_fraction,
            "ok": good,
        }
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "5 law vs simulation",
        ok and elapsed < 300,
        ", ".join(f"{k} {'ok' if v['ok'] else 'off'}" for k, v in rows.items())
        + f"; runtime {elapsed:.0f}s (limit 300s)",
        {"sets": rows, "runtime": elapsed},
    )


def tail_window(est, u_min: int, min_count: int = 100) -> tuple[int, int]:
    """Fit window from ``u_min`` up to the last ``u`` with at least ``min_count`` walks beyond it."""
    u = u_min
    while est.survival_hat(u + 1) * est.n_walks >= min_count:
        u += 1
    return u_min, u


@_timed
def criterion_6(n_walks: int = 2 * 10**5, radius: float = 1e3, seed: int = 7) -> CheckResult:
    """Fitted tail slope within 5% of ``theta*`` for ``{0}`` and ``B(0,1)``."""
    walk = srw(3)
    names = list(_tail_sets())
    out = {}
    ok = True
    # the ball's second ratio is negative; start the window once it has died out
    for name, u_min in (("origin", 1), ("ball1", 4)):
        sites = _tail_sets()[name]
        est = _tail_run(name, n_walks, radius, seed + names.index(name))
        lo, hi = tail_window(est, u_min)
        theta, se = estimate_tail_slope(est, lo, hi)
        target = limit_constant(lambda_max(walk, sites)).theta_star
        rel = abs(theta - target) / target
        ok &= rel <= 0.05
        out[name] = {"theta_hat": theta, "stderr": se, "theta_star": target, "rel_err": rel, "window": (lo, hi)}
    return CheckResult(
        "6 tail slope",
        ok,
        ", ".join(f"{k} {v['theta_hat']:.4f} vs {v['theta_star']:.4f} ({v['rel_err']:.1%})" for k, v in out.items()),
        out,
    )


# ---------------------------------------------------------------- 7

@_timed
def criterion_7(schedule=(10**5, 10**6, 10**7), reps: int = 20, seed: int = 42) -> CheckResult:
    """Medians of ``sup_x mu_n(x)/log n`` trend upward within IQR; last median within ``[0.5, 1.5]`` of the limit."""
    t0 = time.perf_counter()
    rows, _ = limit_trend(srw(3), origin_set(3), schedule, reps, seed)
    elapsed = time.perf_counter() - t0
    target = rows[-1].predicted
    lo, hi = 0.5 * target, 1.5 * target
    trend = all(b.median_x >= a.q1_x for a, b in zip(rows, rows[1:]))
    last = rows[-1]
    in_band = lo <= last.median_x <= hi
    path_overlap = last.q1_path <= hi and last.q3_path >= lo
    ok = trend and in_band and path_overlap and elapsed < 900
    meds = ", ".join(f"{r.median_x:.3f}" for r in rows)
    return CheckResult(
        "7 sup trend",
        ok,
        f"medians {meds} -> limit {target:.4f}; path IQR [{last.q1_path:.3f}, {last.q3_path:.3f}]; "
        f"runtime {elapsed:.0f}s (limit 900s)",
        {"rows": [r.__dict__ for r in rows], "runtime": elapsed},
    )


# ---------------------------------------------------------------- 8

def random_sets(n_sets: int, max_size: int, half_width: int, seed: int, d: int = 3) -> list[SiteSet]:
    """Random sets containing the origin with ``1..max_size`` points in ``[-h, h]^d``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sets):
        size = int(rng.integers(1, max_size + 1))
        pts = {(0,) * d}
        while len(pts) < size:
            pts.add(tuple(int(c) for c in rng.integers(-half_width, half_width + 1, d)))
        out.append(SiteSet.of(sorted(pts)))
    return out


@_timed
def criterion_8(n_sets: int = 20, seed: int = 8, k_max: int = 200) -> CheckResult:
    """``survival(u) = sum_{k>u} pmf(k)`` and total mass 1, within 1e-10."""
    walk = srw(3)
    worst_surv = 0.0
    worst_mass = 0.0
    for sites in random_sets(n_sets, 8, 3, seed):
        law = occupation_law(walk, sites)
        f, h = law.ratios, law.weights
        pmf = law.pmf_array(range(1, k_max + 1))
        # closed-form geometric tail beyond k_max
        tail = float(np.sum(h * f**k_max))
        worst_mass = max(worst_mass, abs(math.fsum(pmf) + tail - 1.0))
        for u in range(0, 30):
            s = math.fsum(pmf[u:]) + tail
            worst_surv = max(worst_surv, abs(law.survival(u) - s))
    return CheckResult(
        "8 law identities",
        worst_surv <= 1e-10 and worst_mass <= 1e-10,
        f"max survival gap {worst_surv:.1e}, max mass gap {worst_mass:.1e} (limit 1e-10)",
        {"survival_gap": worst_surv, "mass_gap": worst_mass},
    )


# ---------------------------------------------------------------- 9

@_timed
def criterion_9(epsilons=("1/4", "1/6", "1/8", "1/12")) -> CheckResult:
    """Continuum convergence on the unit ball in d = 3."""
    t0 = time.perf_counter()
    rep = convergence_study(srw(3), DomainSpec.ball(1, 3), epsilons)
    elapsed = time.perf_counter() - t0
    errs = rep.errors()
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    last = rep.rows[-1]
    forms = abs(last.rescaled_value - last.log_form_value) / last.rescaled_value
    ok = decreasing and errs[-1] < 0.15 and forms < 0.02 and elapsed < 600
    return CheckResult(
        "9 continuum limit",
        ok,
        "errors " + ", ".join(f"{e:.3%}" for e in errs)
        + f"; forms differ by {forms:.2%} at the finest eps; runtime {elapsed:.0f}s",
        {"rows": [r.__dict__ for r in rep.rows], "form_gap": forms, "runtime": elapsed},
    )


# ---------------------------------------------------------------- 10

@_timed
def criterion_10(n_sets: int = 50, seed: int = 10) -> CheckResult:
    """Eigenvalue floor, Perron positivity, invariances and Jacobi vs power iteration."""
    walk = srw(3)
    rng = np.random.default_rng(seed + 1)
    min_lam = math.inf
    min_phi = math.inf
    inv_gap = 0.0
    solver_gap = 0.0
    for sites in random_sets(n_sets, 30, 4, seed):
        mat = build_green_matrix(walk, sites)
        dec = eigendecompose(mat)
        min_lam = min(min_lam, float(dec.lambdas[-1]))
        min_phi = min(min_phi, float(dec.vectors[:, 0].min()))
        lam = dec.perron
        z = tuple(int(c) for c in rng.integers(-50, 51, 3))
        perm = rng.permutation(len(sites))
        moved = SiteSet.of([sites.points[i] for i in perm]).translate(z)
        inv_gap = max(inv_gap, abs(lambda_max(walk, moved) - lam) / lam)
        pw, _, _ = power_iteration(GreenConvolution(walk, sites.array), len(sites))
        solver_gap = max(solver_gap, abs(pw - lam) / lam)
    ok = min_lam >= 0.5 - 1e-10 and min_phi > 0 and inv_gap <= 1e-12 and solver_gap <= 1e-6
    return CheckResult(
        "10 eigen-structure",
        ok,
        f"min eigenvalue {min_lam:.4f}, min phi_1 entry {min_phi:.2e}, invariance gap {inv_gap:.1e}, "
        f"Jacobi vs power {solver_gap:.1e}",
        {"min_lambda": min_lam, "min_phi1": min_phi, "invariance_gap": inv_gap, "solver_gap": solver_gap},
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}

SUITES = {
    "examples": (2, 3, 4),
    "law": (8, 10),
    "tails": (1, 5, 6),
    "sup": (7,),
    "continuum": (9,),
    "all": tuple(range(1, 11)),
}


def run_suite(name: str, report=None) -> list[CheckResult]:
    """Run every criterion of suite ``name``; ``report`` is called with each result."""
    if name not in SUITES:
        raise KeyError(name)
    results = []
    for k in SUITES[name]:
        res = CRITERIA[k]()
        results.append(res)
        if report is not None:
            report(res)
    return results


def exact_slope(sites: SiteSet, u_min: int, u_max: int) -> float:
    """Unweighted slope of ``-log survival`` of the exact law on a window (no sampling noise)."""
    law = occupation_law(srw(sites.dimension), sites)
    us = np.arange(u_min, u_max + 1)
    return fit_log_slope(us, law.survival_array(us))[0]


__all__ = ["CheckResult", "CRITERIA", "SUITES", "run_suite", "random_sets", "tail_window", "exact_slope", "get_table"]
