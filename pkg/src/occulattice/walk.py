"""Step distributions of symmetric transient random walks on Z^d."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AsymmetricStep,
    BadProbabilityMass,
    DegenerateLattice,
    DimensionTooLow,
)

MASS_TOL = 1e-12
ISOTROPY_TOL = 1e-12


@dataclass(frozen=True)
class WalkSpec:
    """Raw step law: ``steps`` is a tuple of ``(offset, probability)`` pairs."""

    dimension: int
    steps: tuple[tuple[tuple[int, ...], float], ...]

    @classmethod
    def from_arrays(cls, offsets, probs) -> "WalkSpec":
        offsets = np.asarray(offsets, dtype=np.int64)
        steps = tuple(
            (tuple(int(c) for c in off), float(p)) for off, p in zip(offsets, probs)
        )
        return cls(int(offsets.shape[1]), steps)


@dataclass(frozen=True)
class CovarianceSummary:
    matrix: np.ndarray
    isotropic_sigma2: float | None


class ValidatedWalk:
    """A walk whose step law passed every check in :func:`validate_walk`.

    Offsets and probabilities are stored as read-only arrays, so instances can
    be shared freely.
    """

    def __init__(self, dimension: int, offsets: np.ndarray, probs: np.ndarray):
        self.dimension = int(dimension)
        self.offsets = offsets
        self.probs = probs
        self.offsets.setflags(write=False)
        self.probs.setflags(write=False)

    def __repr__(self):
        return f"ValidatedWalk(d={self.dimension}, support={len(self.probs)}, id={self.walk_id[:12]})"

    @cached_property
    def walk_id(self) -> str:
        """Content hash of the canonical step list."""
        order = np.lexsort(self.offsets.T[::-1])
        payload = {
            "dimension": self.dimension,
            "steps": [
                [self.offsets[i].tolist(), float(self.probs[i]).hex()] for i in order
            ],
        }
        blob = json.dumps(payload, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def max_step(self) -> int:
        """Largest absolute coordinate of any step."""
        return int(np.abs(self.offsets).max())

    @cached_property
    def is_srw(self) -> bool:
        d = self.dimension
        if len(self.probs) != 2 * d:
            return False
        if not np.allclose(self.probs, 1.0 / (2 * d), rtol=0, atol=MASS_TOL):
            return False
        return bool(np.all(np.abs(self.offsets).sum(axis=1) == 1))

    def to_spec(self) -> WalkSpec:
        return WalkSpec.from_arrays(self.offsets, self.probs)


def _lattice_is_full(offsets: np.ndarray) -> bool:
    """Decide whether the integer row span of ``offsets`` is all of Z^d.

    Reduces the rows to Hermite normal form with exact integer arithmetic; the
    span is Z^d iff there are ``d`` pivots and all of them equal 1.
    """
    rows = [[int(c) for c in r] for r in offsets]
    d = len(rows[0])
    pivots = []
    r0 = 0
    for col in range(d):
        while True:
            live = [i for i in range(r0, len(rows)) if rows[i][col] != 0]
            if not live:
                break
            piv = min(live, key=lambda i: abs(rows[i][col]))
            rows[r0], rows[piv] = rows[piv], rows[r0]
            done = True
            for i in range(r0 + 1, len(rows)):
                if rows[i][col]:
                    q = rows[i][col] // rows[r0][col]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[r0])]
                    if rows[i][col]:
                        done = False
            if done:
                break
        if r0 < len(rows) and rows[r0][col] != 0:
            pivots.append(abs(rows[r0][col]))
            r0 += 1
        else:
            return False
    return len(pivots) == d and all(p == 1 for p in pivots)


def validate_walk(raw: WalkSpec) -> ValidatedWalk:
    """Check the standing assumptions and return an immutable walk.

    Raises
    ------
    DimensionTooLow
        ``d < 3``.
    BadProbabilityMass
        Non-positive probability, or total mass off by more than 1e-12.
    AsymmetricStep
        Some ``(x, p)`` has no matching ``(-x, p)``.
    DegenerateLattice
        The support generates a proper subgroup of Z^d.
    """
    d = int(raw.dimension)
    if d < 3:
        raise DimensionTooLow(f"dimension {d} < 3 is recurrent")
    if not raw.steps:
        raise BadProbabilityMass("empty step list")
    merged: dict[tuple[int, ...], float] = {}
    for off, p in raw.steps:
        off = tuple(int(c) for c in off)
        if len(off) != d:
            raise BadProbabilityMass(f"offset {off} has wrong length for d={d}")
        p = float(p)
        if not (0.0 < p <= 1.0):
            raise BadProbabilityMass(f"probability {p} outside (0, 1]")
        merged[off] = merged.get(off, 0.0) + p
    zero = (0,) * d
    total = sum(merged.values())
    if abs(total - 1.0) > MASS_TOL:
        raise BadProbabilityMass(f"probabilities sum to {total!r}")
    for off, p in merged.items():
        neg = tuple(-c for c in off)
        if neg not in merged or abs(merged[neg] - p) > MASS_TOL:
            raise AsymmetricStep(f"step {off} (p={p}) has no mirror {neg}")
    moves = [off for off in merged if off != zero]
    if not moves or not _lattice_is_full(np.array(moves)):
        raise DegenerateLattice("support does not generate Z^d")
    keys = sorted(merged)
    offsets = np.array(keys, dtype=np.int64)
    probs = np.array([merged[k] for k in keys]) / total
    return ValidatedWalk(d, offsets, probs)


def builtin_srw(d: int) -> WalkSpec:
    """Simple random walk: ``±e_i`` with probability ``1/(2d)`` each."""
    if d < 3:
        raise DimensionTooLow(f"dimension {d} < 3 is recurrent")
    eye = np.eye(d, dtype=np.int64)
    return WalkSpec.from_arrays(np.vstack([eye, -eye]), [1.0 / (2 * d)] * (2 * d))


def srw(d: int) -> ValidatedWalk:
    return validate_walk(builtin_srw(d))


def covariance(walk: ValidatedWalk) -> CovarianceSummary:
    x = walk.offsets.astype(float)
    cov = (x * walk.probs[:, None]).T @ x
    sigma2 = float(np.trace(cov)) / walk.dimension
    iso = np.max(np.abs(cov - sigma2 * np.eye(walk.dimension))) <= ISOTROPY_TOL
    return CovarianceSummary(cov, sigma2 if iso else None)


def one_minus_psi(walk: ValidatedWalk, p) -> np.ndarray:
    """``1 - psi(p)`` evaluated as ``sum prob * 2 sin^2(x.p / 2)``.

    The half-angle form keeps full relative precision near ``p = 0``. ``p`` has
    shape ``(..., d)``.
    """
    p = np.asarray(p, dtype=float)
    phase = p @ walk.offsets.T.astype(float)
    return 2.0 * (np.sin(0.5 * phase) ** 2) @ walk.probs


def characteristic_function(walk: ValidatedWalk, p) -> np.ndarray | float:
    """``psi(p) = sum_x prob(x) cos(x.p)``; real because the law is symmetric.

    Formed as ``1 - (1 - psi)`` so that ``psi(0) = 1`` exactly.
    """
    val = 1.0 - one_minus_psi(walk, p)
    return float(val) if val.ndim == 0 else val


def parse_walk_ref(ref: str) -> ValidatedWalk:
    """Resolve ``"srw:d"`` or a path to a walk JSON file."""
    if ref.startswith("srw:"):
        return srw(int(ref.split(":", 1)[1]))
    from .io import load_walk

    return load_walk(ref)
