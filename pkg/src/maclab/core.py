"""Scenario and constellation types plus the geometry they share.

Complex symbols are stored as ``complex128`` numpy arrays (the in-phase
component in the real part, quadrature in the imaginary part).  A user's
constellation holds ``2**k`` points ordered by the integer value of the
k-bit symbol label.  Superimposing every combination of user symbols with
their channel gains yields the sum constellation, ordered by the joint
label in which user 1 owns the most significant bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    AlphaSumMismatch,
    DegenerateConstellation,
    LengthMismatch,
    NonPositiveAlpha,
    TooFewPoints,
    ZeroBits,
)

# Structural checks (constellation flags, alpha bookkeeping) use 1e-9;
# pure-arithmetic identities are held to 1e-12.
STRUCTURAL_TOL = 1e-9
ARITHMETIC_TOL = 1e-12

# Mean-power conventions a constellation can carry.
POWER_RAW = "raw"          # no normalization applied
POWER_UNIT = "unit"        # zero mean, mean |x|^2 == 1
POWER_CAPPED = "capped"    # zero mean, mean |x|^2 <= 1 (learned back-off)


def as_points(points: Iterable[complex] | np.ndarray) -> np.ndarray:
    """Coerce to a 1-D complex128 array and reject non-finite entries."""
    pts = np.asarray(points, dtype=np.complex128)
    if pts.ndim != 1:
        pts = pts.reshape(-1)
    if not np.all(np.isfinite(pts.real)) or not np.all(np.isfinite(pts.imag)):
        raise DegenerateConstellation("constellation points must be finite")
    return pts


@dataclass(frozen=True)
class Scenario:
    """System parameters: per-user bit widths and received-power ratios.

    ``alpha[i]`` is user i's received power divided by the mean received
    power, so a valid vector has all entries positive and sums to K.  The
    two-user convention (2 - a, a) is the special case K = 2.
    """

    bits: tuple[int, ...]
    alpha: tuple[float, ...]

    def __init__(self, bits: Sequence[int], alpha: Sequence[float]):
        object.__setattr__(self, "bits", tuple(int(b) for b in bits))
        object.__setattr__(self, "alpha", tuple(float(a) for a in alpha))

    @property
    def K(self) -> int:
        return len(self.bits)

    @property
    def total_bits(self) -> int:
        return sum(self.bits)

    @property
    def M(self) -> int:
        """Number of joint labels (sum-constellation size)."""
        return 1 << self.total_bits

    def user_sizes(self) -> tuple[int, ...]:
        return tuple(1 << b for b in self.bits)

    def label_shifts(self) -> tuple[int, ...]:
        """Bit shift isolating each user's sub-label in a joint label."""
        shifts = []
        rest = self.total_bits
        for b in self.bits:
            rest -= b
            shifts.append(rest)
        return tuple(shifts)

    def split_labels(self, labels: np.ndarray) -> np.ndarray:
        """(n,) joint labels -> (K, n) per-user sub-labels."""
        labels = np.asarray(labels, dtype=np.int64)
        out = np.empty((self.K, labels.size), dtype=np.int64)
        for i, (b, s) in enumerate(zip(self.bits, self.label_shifts())):
            out[i] = (labels >> s) & ((1 << b) - 1)
        return out


def validate_scenario(s: Scenario) -> Scenario:
    """Check scenario invariants; return the scenario for chaining."""
    if len(s.alpha) != len(s.bits):
        raise LengthMismatch(
            f"bits has {len(s.bits)} entries but alpha has {len(s.alpha)}"
        )
    if len(s.bits) < 1:
        raise LengthMismatch("a scenario needs at least one user")
    if any(b < 1 for b in s.bits):
        raise ZeroBits(f"every user needs at least 1 bit, got {s.bits}")
    if any(a <= 0 for a in s.alpha):
        raise NonPositiveAlpha(f"all power ratios must be positive, got {s.alpha}")
    if abs(sum(s.alpha) - s.K) > STRUCTURAL_TOL:
        raise AlphaSumMismatch(
            f"power ratios must sum to the user count {s.K}, got {sum(s.alpha)!r}"
        )
    return s


@dataclass(frozen=True)
class Constellation:
    """One user's 2**k labeled symbols, point index == integer bit label."""

    k: int
    points: np.ndarray
    power_mode: str = POWER_RAW

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        if self.k < 1:
            raise ZeroBits(f"bits per symbol must be >= 1, got {self.k}")
        if len(self.points) != (1 << self.k):
            raise LengthMismatch(
                f"expected {1 << self.k} points for k={self.k}, got {len(self.points)}"
            )

    @property
    def size(self) -> int:
        return len(self.points)

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def mean_point(self) -> complex:
        return complex(np.mean(self.points))

    def check_power_flag(self) -> None:
        """Verify what the power_mode flag promises about the point set."""
        if self.power_mode == POWER_RAW:
            return
        if abs(self.mean_point()) > STRUCTURAL_TOL:
            raise DegenerateConstellation(
                f"flagged {self.power_mode} but mean is {self.mean_point()!r}"
            )
        p = self.mean_power()
        if self.power_mode == POWER_UNIT and abs(p - 1.0) > STRUCTURAL_TOL:
            raise DegenerateConstellation(f"flagged unit power but E|x|^2 = {p!r}")
        if self.power_mode == POWER_CAPPED and p > 1.0 + STRUCTURAL_TOL:
            raise DegenerateConstellation(f"flagged capped power but E|x|^2 = {p!r}")


@dataclass(frozen=True)
class SumConstellation:
    """All noiseless received points, indexed by the joint label."""

    scenario: Scenario
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        if len(self.points) != self.scenario.M:
            raise LengthMismatch(
                f"expected {self.scenario.M} sum points, got {len(self.points)}"
            )

    @property
    def M(self) -> int:
        return len(self.points)


def normalize(points: Iterable[complex] | np.ndarray) -> Constellation:
    """Center and rescale a point set to zero mean and unit mean power."""
    pts = as_points(points)
    if len(pts) < 2:
        raise TooFewPoints("normalization needs at least two points")
    k = int(len(pts)).bit_length() - 1
    if (1 << k) != len(pts):
        raise LengthMismatch(f"point count {len(pts)} is not a power of two")
    centered = pts - pts.mean()
    power = float(np.mean(np.abs(centered) ** 2))
    if power < 1e-12:
        raise DegenerateConstellation("all points identical after centering")
    return Constellation(k=k, points=centered / np.sqrt(power), power_mode=POWER_UNIT)


def superimpose(s: Scenario, consts: Sequence[Constellation]) -> SumConstellation:
    """Superpose user constellations with gains sqrt(alpha_i).

    Point ``j`` of the result is ``sum_i sqrt(alpha_i) * consts[i][l_i]``
    where ``l_i`` is user i's sub-label inside the joint label ``j``
    (user 1 most significant).  Coinciding points are kept, not merged:
    joint labels stay uniformly weighted.
    """
    validate_scenario(s)
    if len(consts) != s.K:
        raise LengthMismatch(f"scenario has {s.K} users but got {len(consts)} constellations")
    for i, (c, b) in enumerate(zip(consts, s.bits)):
        if c.k != b:
            raise LengthMismatch(f"user {i + 1} constellation has k={c.k}, scenario says {b}")
    pts = np.zeros(1, dtype=np.complex128)
    for a, c in zip(s.alpha, consts):
        pts = (pts[:, None] + np.sqrt(a) * c.points[None, :]).reshape(-1)
    return SumConstellation(scenario=s, points=pts)


def min_distance(points: Iterable[complex] | np.ndarray) -> float:
    """Minimum pairwise Euclidean distance; zero when duplicates exist."""
    pts = as_points(points)
    if len(pts) < 2:
        raise TooFewPoints("minimum distance needs at least two points")
    iu, ju = np.triu_indices(len(pts), k=1)
    return float(np.min(np.abs(pts[iu] - pts[ju])))


def rotate(c: Constellation, theta: float) -> Constellation:
    """Rotate every point by ``theta`` radians about the origin."""
    return replace(c, points=c.points * np.exp(1j * float(theta)))


def bit_patterns(total_bits: int) -> np.ndarray:
    """(2**total_bits, total_bits) array of 0/1 rows; row j spells j MSB-first."""
    n = 1 << total_bits
    j = np.arange(n, dtype=np.int64)
    cols = [((j >> (total_bits - 1 - p)) & 1) for p in range(total_bits)]
    return np.stack(cols, axis=1).astype(np.float64)


def labels_from_bits(rows: np.ndarray) -> np.ndarray:
    """Inverse of :func:`bit_patterns`: 0/1 rows -> integer labels."""
    rows = np.asarray(rows)
    total = rows.shape[1]
    weights = (1 << np.arange(total - 1, -1, -1, dtype=np.int64))
    return (rows.astype(np.int64) * weights).sum(axis=1)
