import numpy as np
import pytest

from occulattice.walk import WalkSpec, srw, validate_walk


@pytest.fixture(scope="session")
def walk3():
    return srw(3)


@pytest.fixture(scope="session")
def walk4():
    return srw(4)


@pytest.fixture(scope="session")
def mixed_walk():
    """Non-simple, isotropy-breaking walk: unit steps plus two diagonal directions."""
    offs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 1, 1)]
    probs = [0.1, 0.1, 0.1, 0.1, 0.1]
    steps = [(o, p) for o, p in zip(offs, probs)] + [(tuple(-c for c in o), p) for o, p in zip(offs, probs)]
    return validate_walk(WalkSpec(3, tuple(steps)))


def srw_green_oracle(x, d=3):
    """``G(x) = int_0^inf prod_i e^{-t/d} I_{x_i}(t/d) dt`` for the simple walk (continuous-time embedding)."""
    from scipy import integrate, special

    x = [abs(int(c)) for c in x]

    def f(t):
        return float(np.prod([special.ive(c, t / d) for c in x]))

    # the integrand decays like t^{-d/2}; split so quad resolves the peak and the tail
    a = integrate.quad(f, 0, 50, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
    b = integrate.quad(f, 50, np.inf, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return a + b
