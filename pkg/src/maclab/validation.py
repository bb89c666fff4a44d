"""Input coercion helpers shared by the estimator and the CLI."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Scenario, validate_scenario
from .exceptions import ValidationError


def scenario_from(bits: Sequence[int], alpha: Sequence[float] | None = None) -> Scenario:
    """Build and validate a scenario; alpha defaults to the equal split."""
    bits = list(bits)
    if alpha is None:
        alpha = [1.0] * len(bits)
    return validate_scenario(Scenario(bits, alpha))


def as_received_samples(y) -> np.ndarray:
    """Accept complex (n,) or real (n, 2) I/Q samples; return complex (n,)."""
    arr = np.asarray(y)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    arr = np.atleast_1d(np.asarray(arr, dtype=complex))
    if arr.ndim != 1:
        raise ValidationError(f"expected samples of shape (n,) or (n, 2), got {np.shape(y)}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValidationError("received samples must be finite")
    return arr


def check_bit_matrix(bits, total_bits: int) -> np.ndarray:
    """Validate a (n, total_bits) 0/1 matrix and return it as float64."""
    arr = np.asarray(bits, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != total_bits:
        raise ValidationError(f"expected bit rows of width {total_bits}, got shape {arr.shape}")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValidationError("bit matrix entries must be 0 or 1")
    return arr
