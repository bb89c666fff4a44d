"""Additive complex Gaussian noise, SNR bookkeeping, seeded sampling.

SNR convention used everywhere in this package: with the mean received
power per user normalized to 1, ``N0 = 10**(-snr_db/10)`` is the total
noise power, split evenly between the I and Q components.

Randomness comes from numpy's counter-based Philox generator, keyed by a
``(seed, stream_id)`` pair, but only through its raw 64-bit output whose
bit stream numpy guarantees stable.  Uniforms take the top 53 bits;
Gaussians use the Box-Muller transform; bounded integers use rejection
sampling.  That keeps every sample reproducible across platforms and
library versions, and distinct stream ids give independent streams for
parallel Monte Carlo.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SumConstellation
from .exceptions import LabelOutOfRange, ValidationError

_U64 = np.uint64
_TWO53 = float(1 << 53)


def n0_from_snr(snr_db: float) -> float:
    """Total noise power for a given SNR in dB (mean user power = 1)."""
    return float(10.0 ** (-float(snr_db) / 10.0))


def snr_from_n0(n0: float) -> float:
    return float(-10.0 * np.log10(n0))


@dataclass(frozen=True)
class NoiseSpec:
    """Total complex noise power N0; each component has variance N0/2."""

    n0: float

    def __post_init__(self):
        if not (self.n0 > 0 and np.isfinite(self.n0)):
            raise ValidationError(f"noise power must be positive and finite, got {self.n0!r}")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "NoiseSpec":
        return cls(n0=n0_from_snr(snr_db))

    @property
    def snr_db(self) -> float:
        return snr_from_n0(self.n0)


@dataclass(frozen=True)
class RngSeed:
    """Philox key: (seed, stream_id).  Distinct pairs give independent streams."""

    seed: int
    stream_id: int = 0

    def with_stream(self, stream_id: int) -> "RngSeed":
        return RngSeed(self.seed, stream_id)


class PhiloxStream:
    """Sequential random stream over the Philox raw output.

    Draw order is part of the reproducibility contract: consumers that
    interleave calls must do so in a documented, fixed order.
    """

    def __init__(self, key: RngSeed):
        self._bg = np.random.Philox(key=[key.seed % (1 << 64), key.stream_id % (1 << 64)])
        self.key = key

    def raw(self, n: int) -> np.ndarray:
        return self._bg.random_raw(n)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1): top 53 bits of one raw word each."""
        return (self.raw(n) >> _U64(11)).astype(np.float64) / _TWO53

    def normal_pairs(self, n_pairs: int) -> tuple[np.ndarray, np.ndarray]:
        """Box-Muller: two raw words -> one independent standard-normal pair."""
        r = self.raw(2 * n_pairs)
        # u1 on (0, 1] so the log is finite; u2 on [0, 1).
        u1 = ((r[0::2] >> _U64(11)).astype(np.float64) + 1.0) / _TWO53
        u2 = (r[1::2] >> _U64(11)).astype(np.float64) / _TWO53
        rad = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        return rad * np.cos(ang), rad * np.sin(ang)

    def normal(self, n: int) -> np.ndarray:
        """n standard normals; pairs interleaved (cos, sin), tail truncated."""
        a, b = self.normal_pairs((n + 1) // 2)
        out = np.empty(2 * len(a))
        out[0::2] = a
        out[1::2] = b
        return out[:n]

    def complex_normal(self, n: int, var_per_component: float) -> np.ndarray:
        """n complex samples, each component N(0, var_per_component)."""
        a, b = self.normal_pairs(n)
        s = np.sqrt(var_per_component)
        return s * a + 1j * (s * b)

    def integers(self, n: int, high: int) -> np.ndarray:
        """n exact-uniform integers in [0, high) via rejection sampling."""
        if high < 1:
            raise ValidationError(f"integer range must be >= 1, got {high}")
        rem = (1 << 64) % high
        out = np.empty(n, dtype=np.int64)
        filled = 0
        while filled < n:
            r = self.raw(n - filled)
            if rem:
                r = r[r < _U64((1 << 64) - rem)]
            take = r % _U64(high)
            out[filled:filled + len(take)] = take.astype(np.int64)
            filled += len(take)
        return out


def sample_noise(spec: NoiseSpec, n: int, seed: RngSeed) -> np.ndarray:
    """n i.i.d. complex noise samples with per-component variance N0/2."""
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    return PhiloxStream(seed).complex_normal(n, spec.n0 / 2.0)


def transmit(
    sum_const: SumConstellation,
    labels: np.ndarray,
    spec: NoiseSpec,
    seed: RngSeed,
) -> np.ndarray:
    """Noisy received samples for a sequence of joint labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= sum_const.M):
        raise LabelOutOfRange(
            f"labels must lie in [0, {sum_const.M}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    return sum_const.points[labels] + sample_noise(spec, labels.size, seed)
