"""Analytical comparison constellations.

Three families, all unit power and zero mean:

* orthogonal PAM pairs: user 1 amplitude-modulates the I axis, user 2
  the Q axis, so the users never interfere;
* rotation-optimized QPSK (or QPSK/BPSK) pairs: user 2's constellation is
  rotated to maximize either the achievable sum rate at a given SNR or the
  minimum distance of the sum constellation;
* the two-generator family {+-a, +-b}: every set of two antipodal point
  pairs, searched by grid over (shape angle, length ratio, rotation) for
  the best sum-constellation minimum distance.  Rotated rectangles, hence
  all rotated QPSK pairs, and collinear PAM-like sets are members.

Constructions keep antipodal points exact floating-point negations, so
symmetric superpositions cancel to exactly zero and duplicate sum points
compare bit-equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import NoiseSpec
from .core import Constellation, POWER_UNIT, Scenario, min_distance, rotate, superimpose, validate_scenario
from .exceptions import (
    LengthMismatch,
    MissingSnrForRateObjective,
    UnsupportedOrder,
    ValidationError,
)
from .metrics import cc_sum_rate_gh

OBJECTIVE_MIN_DISTANCE = "min_distance"
OBJECTIVE_SUM_RATE = "cc_sum_rate"

_DEG = np.pi / 180.0


def pam_constellation(k: int) -> Constellation:
    """2**k-PAM on the real axis, levels ascending with the label."""
    m = 1 << k
    levels = 2.0 * np.arange(m) - (m - 1)
    return Constellation(k, levels / np.sqrt(np.mean(levels**2)) + 0j, POWER_UNIT)


def qpsk() -> Constellation:
    """QPSK with points at 45 + 90m degrees, m = label."""
    a = (1 + 1j) / np.sqrt(2.0)
    return Constellation(2, a * np.array([1, 1j, -1, -1j]), POWER_UNIT)


def bpsk() -> Constellation:
    return Constellation(1, np.array([1.0 + 0j, -1.0 + 0j]), POWER_UNIT)


def pam_orthogonal(k1: int, k2: int) -> list[Constellation]:
    """Interference-free pair: 2**k1-PAM on I, 2**k2-PAM on Q."""
    u1 = pam_constellation(k1)
    u2 = pam_constellation(k2)
    return [u1, Constellation(k2, 1j * u2.points, POWER_UNIT)]


@dataclass(frozen=True)
class RotationResult:
    theta_star: float
    objective_value: float
    objective: str
    grid_step: float
    snr_db: float | None = None
    constellations: tuple[Constellation, Constellation] = field(default=None, repr=False)


def rotation_optimize(
    base1: Constellation,
    base2: Constellation,
    scenario: Scenario,
    objective: str = OBJECTIVE_MIN_DISTANCE,
    grid_step: float = 0.1 * _DEG,
    snr_db: float | None = None,
    sweep_order: int = 12,
    final_order: int = 24,
) -> RotationResult:
    """Sweep user 2's rotation over [0, pi/2) and keep the best angle.

    Ties go to the smallest angle.  The rate objective sweeps with a
    cheap quadrature order and re-scores the winner at ``final_order``
    so the search stays deterministic.
    """
    validate_scenario(scenario)
    if scenario.K != 2:
        raise LengthMismatch("rotation search is defined for two users")
    if not (0 < grid_step <= np.pi / 8):
        raise ValidationError(f"grid_step must be in (0, pi/8], got {grid_step!r}")
    if objective == OBJECTIVE_SUM_RATE and snr_db is None:
        raise MissingSnrForRateObjective("the sum-rate objective needs an SNR")
    if objective not in (OBJECTIVE_MIN_DISTANCE, OBJECTIVE_SUM_RATE):
        raise ValidationError(f"unknown objective {objective!r}")

    thetas = np.arange(0.0, np.pi / 2, grid_step)
    best_val, best_theta = -np.inf, 0.0
    for th in thetas:
        pair = [base1, rotate(base2, th)]
        sc = superimpose(scenario, pair)
        if objective == OBJECTIVE_MIN_DISTANCE:
            val = min_distance(sc.points)
        else:
            val = cc_sum_rate_gh(sc, NoiseSpec.from_snr_db(snr_db), sweep_order).rate_bits
        if val > best_val:
            best_val, best_theta = val, float(th)

    pair = (base1, rotate(base2, best_theta))
    sc = superimpose(scenario, list(pair))
    if objective == OBJECTIVE_MIN_DISTANCE:
        final_val = min_distance(sc.points)
    else:
        final_val = cc_sum_rate_gh(sc, NoiseSpec.from_snr_db(snr_db), final_order).rate_bits
    return RotationResult(
        theta_star=best_theta,
        objective_value=float(final_val),
        objective=objective,
        grid_step=float(grid_step),
        snr_db=snr_db,
        constellations=pair,
    )


def two_pair_constellation(a: complex, b: complex) -> Constellation:
    """Family member {a, b, -a, -b}, normalized to unit mean power.

    Equivalently {+-(u+v)/2, +-(u-v)/2} with generators u = a+b, v = a-b;
    collinear or equal generators degenerate to duplicate points, which
    any distance objective scores as zero.
    """
    pts = np.array([a, b, -a, -b], dtype=complex)
    power = (abs(a) ** 2 + abs(b) ** 2) / 2.0
    if power < 1e-24:
        raise ValidationError("generators must not both vanish")
    return Constellation(2, pts / np.sqrt(power), POWER_UNIT)


@dataclass(frozen=True)
class SearchBudget:
    """Grid resolution for the two-pair family search."""

    shape_step_deg: float
    ratio_step: float
    rotation_step_deg: float
    refine_factor: int = 10
    rectangle_step_deg: float = 0.1


def default_budget(k2: int) -> SearchBudget:
    if k2 == 1:
        return SearchBudget(shape_step_deg=0.5, ratio_step=0.05, rotation_step_deg=0.5)
    return SearchBudget(shape_step_deg=3.0, ratio_step=0.1, rotation_step_deg=3.0)


@dataclass(frozen=True)
class ParallelogramResult:
    constellations: tuple[Constellation, ...]
    min_dist: float
    params: dict


def _family_points(phi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """(n,) shape params -> (n, 4) member point sets, a on the real axis."""
    b = rho * np.exp(1j * phi)
    scale = np.sqrt(2.0 / (1.0 + rho**2))
    one = np.ones_like(b)
    return np.stack([one, b, -one, -b], axis=-1) * scale[..., None]


_PAIR_IDX = {}


def _batch_min_dist(pts: np.ndarray) -> np.ndarray:
    """(c, n) point sets -> (c,) minimum pairwise distances."""
    n = pts.shape[1]
    if n not in _PAIR_IDX:
        _PAIR_IDX[n] = np.triu_indices(n, k=1)
    iu, ju = _PAIR_IDX[n]
    return np.abs(pts[:, iu] - pts[:, ju]).min(axis=1)


def _grid(start: float, stop: float, step: float, endpoint: bool = False) -> np.ndarray:
    n = int(np.floor((stop - start) / step + (1e-9 if endpoint else -1e-9))) + 1
    return start + step * np.arange(max(n, 1))


class _ArgmaxTracker:
    """Keeps the first strictly-best candidate in evaluation order."""

    def __init__(self):
        self.value = -np.inf
        self.payload = None

    def offer(self, values: np.ndarray, payload_fn) -> None:
        if len(values) == 0:
            return
        i = int(np.argmax(values))
        if values[i] > self.value:
            self.value = float(values[i])
            self.payload = payload_fn(i)


def _sweep_two_pair(
    alpha: tuple[float, float],
    k2: int,
    phi1_grid: np.ndarray,
    rho_grid: np.ndarray,
    phi2_grid: np.ndarray | None,
    rho2_grid: np.ndarray | None,
    rot_grid: np.ndarray,
    chunk: int = 50000,
) -> tuple[float, tuple]:
    """Exhaustive MD sweep over family parameters; fixed evaluation order."""
    g1, g2 = np.sqrt(alpha[0]), np.sqrt(alpha[1])
    track = _ArgmaxTracker()
    if k2 == 2:
        p2, r2, t2 = np.meshgrid(phi2_grid, rho2_grid, rot_grid, indexing="ij")
        p2, r2, t2 = p2.ravel(), r2.ravel(), t2.ravel()
        for phi1 in phi1_grid:
            for rho1 in rho_grid:
                u1 = _family_points(np.array([phi1]), np.array([rho1]))[0]
                for s in range(0, len(p2), chunk):
                    pc, rc, tc = p2[s:s + chunk], r2[s:s + chunk], t2[s:s + chunk]
                    u2 = _family_points(pc, rc) * np.exp(1j * tc)[:, None]
                    pts = (g1 * u1)[None, :, None] + (g2 * u2)[:, None, :]
                    md = _batch_min_dist(pts.reshape(len(pc), 16))
                    track.offer(
                        md,
                        lambda i, s=s, pc=pc, rc=rc, tc=tc, phi1=phi1, rho1=rho1: (
                            phi1, rho1, float(pc[i]), float(rc[i]), float(tc[i])
                        ),
                    )
    else:
        w = np.exp(1j * rot_grid)
        u2 = np.stack([w, -w], axis=-1)  # (T, 2) unit-power segments
        for phi1 in phi1_grid:
            for rho1 in rho_grid:
                u1 = _family_points(np.array([phi1]), np.array([rho1]))[0]
                pts = (g1 * u1)[None, :, None] + (g2 * u2)[:, None, :]
                md = _batch_min_dist(pts.reshape(len(rot_grid), 8))
                track.offer(
                    md,
                    lambda i, phi1=phi1, rho1=rho1: (phi1, rho1, float(rot_grid[i])),
                )
    return track.value, track.payload


def _consts_from_params(k2: int, params: tuple) -> list[Constellation]:
    # reuse the sweep's float paths so the reported MD reproduces exactly
    def member(phi: float, rho: float) -> Constellation:
        pts = _family_points(np.array([phi]), np.array([rho]))[0]
        return Constellation(2, pts, POWER_UNIT)

    if k2 == 2:
        phi1, rho1, phi2, rho2, th2 = params
        return [member(phi1, rho1), rotate(member(phi2, rho2), th2)]
    phi1, rho1, thw = params
    return [member(phi1, rho1), rotate(bpsk(), thw)]


def parallelogram_md(s: Scenario, search: SearchBudget | None = None) -> ParallelogramResult:
    """Best two-pair family member pair by sum-constellation minimum distance.

    Grid search: user 1's shape angle spans [0, 90] degrees (joint
    conjugation covers the rest), user 2's shape angle and both rotations
    span [0, 180).  One local refinement pass shrinks the winning cell by
    ``refine_factor``.  Literal QPSK-pair (k2=2) or QPSK/BPSK (k2=1)
    rotations are appended as candidates at ``rectangle_step_deg``, so the
    search provably covers the rotated-rectangle subfamily; a rectangle
    winner is returned with exactly those floats.
    """
    validate_scenario(s)
    if s.K != 2 or s.bits[0] != 2 or s.bits[1] not in (1, 2):
        raise UnsupportedOrder(
            f"two-pair search supports k=(2,1) or (2,2) for two users, got {s.bits}"
        )
    k2 = s.bits[1]
    if search is None:
        search = default_budget(k2)

    step = search.shape_step_deg * _DEG
    rstep = search.rotation_step_deg * _DEG
    rho_grid = _grid(search.ratio_step, 1.0, search.ratio_step, endpoint=True)
    phi1_grid = _grid(0.0, np.pi / 2, step, endpoint=True)
    if k2 == 2:
        phi2_grid = _grid(0.0, np.pi, step)
        rot_grid = _grid(0.0, np.pi, rstep)
        coarse_md, coarse_par = _sweep_two_pair(
            s.alpha, k2, phi1_grid, rho_grid, phi2_grid, rho_grid, rot_grid
        )
        spans = (step, search.ratio_step, step, search.ratio_step, rstep)
    else:
        rot_grid = _grid(0.0, np.pi, rstep)
        coarse_md, coarse_par = _sweep_two_pair(
            s.alpha, k2, phi1_grid, rho_grid, None, None, rot_grid
        )
        spans = (step, search.ratio_step, rstep)

    # refine once: +-1 coarse cell per dimension at refine_factor resolution
    f = search.refine_factor
    n_fine = 2 * f + 1

    def local(center: float, span: float, lo: float | None = None, hi: float | None = None):
        g = center + np.linspace(-span, span, n_fine)
        if lo is not None or hi is not None:
            g = np.clip(g, lo if lo is not None else -np.inf, hi if hi is not None else np.inf)
        return g

    if k2 == 2:
        fine_md, fine_par = _sweep_two_pair(
            s.alpha,
            k2,
            local(coarse_par[0], spans[0]),
            local(coarse_par[1], spans[1], 1e-3, 1.0),
            local(coarse_par[2], spans[2]),
            local(coarse_par[3], spans[3], 1e-3, 1.0),
            local(coarse_par[4], spans[4]),
        )
    else:
        fine_md, fine_par = _sweep_two_pair(
            s.alpha,
            k2,
            local(coarse_par[0], spans[0]),
            local(coarse_par[1], spans[1], 1e-3, 1.0),
            None,
            None,
            local(coarse_par[2], spans[2]),
        )
    best_md, best_par = (fine_md, fine_par) if fine_md > coarse_md else (coarse_md, coarse_par)
    best = _consts_from_params(k2, best_par)
    params = {
        "family": "two_pair",
        "values": [float(v) for v in best_par],
        "shape_step_deg": search.shape_step_deg,
        "ratio_step": search.ratio_step,
        "rotation_step_deg": search.rotation_step_deg,
        "refine_factor": search.refine_factor,
    }

    # rectangle subfamily, evaluated with the exact floats the rotation
    # search would produce, so containment holds bit-for-bit
    base2 = qpsk() if k2 == 2 else bpsk()
    for th in _grid(0.0, np.pi / 2, search.rectangle_step_deg * _DEG):
        pair = [qpsk(), rotate(base2, th)]
        md = min_distance(superimpose(s, pair).points)
        if md > best_md:
            best_md, best = md, pair
            params = {"family": "rectangle", "theta_deg": float(th / _DEG)}

    return ParallelogramResult(
        constellations=tuple(best), min_dist=float(best_md), params=params
    )
