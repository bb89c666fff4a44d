"""Forward/backward passes and the Adam step, all plain numpy in float64.

Architecture, per batch of joint bit rows:

* each user's bit slice feeds one affine layer with two outputs (I, Q)
  and ReLU activation;
* batch centering, then division of both components by the root of the
  batch-mean symbol power, then division of each dimension d by a learned
  scale s_d = 1 + relu(raw_d) >= 1 (power can back off below 1);
* user symbols are weighted by sqrt(alpha_i), summed, and noise is added;
* the decoder is affine+ReLU stacks ending in an affine+sigmoid layer
  emitting one probability per transmitted bit.

The backward pass differentiates the exact forward computation, including
the coupling through the batch mean and batch power statistics and the
clamped cross-entropy, with subgradient 0 at every ReLU kink.  The power
divisor is sqrt(max(p, eps_norm)): the guard only engages for collapsed
batches, so a healthy unit-power batch passes through bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Scenario, bit_patterns
from ..exceptions import ValidationError
from .config import AdamParams, DaeConfig

BCE_CLAMP = 1e-12
COLLAPSE_POWER = 1e-10


def build_batch(s: Scenario, num_const: int) -> np.ndarray:
    """num_const stacked copies of every joint bit pattern, label order."""
    if num_const < 1:
        raise ValidationError(f"num_const must be >= 1, got {num_const}")
    return np.tile(bit_patterns(s.total_bits), (num_const, 1))


def init_params(config: DaeConfig, stream) -> dict[str, np.ndarray]:
    """Uniform fan-based init for affine weights; zero biases; scales at 1.

    Weight draw order (encoders by user, then decoder layers) is fixed so
    a seed fully determines the model.
    """
    params: dict[str, np.ndarray] = {}

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = stream.uniform(fan_in * fan_out).reshape(fan_in, fan_out)
        return (2.0 * u - 1.0) * limit

    for i, k in enumerate(config.scenario.bits):
        params[f"enc{i}_w"] = glorot(k, 2)
        params[f"enc{i}_b"] = np.zeros(2)
        params[f"enc{i}_s"] = -np.ones(2)  # raw scale -1 -> s = 1
    sizes = config.layer_sizes()
    for layer, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        params[f"dec{layer}_w"] = glorot(n_in, n_out)
        params[f"dec{layer}_b"] = np.zeros(n_out)
    return params


def encoder_forward(weights: np.ndarray, bias: np.ndarray, bit_rows: np.ndarray) -> np.ndarray:
    """relu(bits @ W + b): per-row raw (I, Q) symbol, non-negative."""
    return np.maximum(bit_rows @ weights + bias, 0.0)


def power_layers(raw: np.ndarray, raw_scale: np.ndarray, eps_norm: float):
    """Center, normalize to batch power <= 1, apply the learned scale.

    Returns the constrained batch and the cache consumed by the backward
    pass and by constellation extraction.  ``cache['collapsed']`` flags a
    batch whose centered power fell below the dead-encoder threshold.
    """
    if raw.shape[0] < 2:
        raise ValidationError("power layers need a batch of at least 2 rows")
    mu = raw.mean(axis=0)
    centered = raw - mu
    p = float(np.mean(np.sum(centered**2, axis=1)))
    guarded = p < eps_norm
    sigma = float(np.sqrt(eps_norm if guarded else p))
    unit = centered / sigma
    s = 1.0 + np.maximum(raw_scale, 0.0)
    x = unit / s
    cache = {
        "mu": mu,
        "p": p,
        "sigma": sigma,
        "guarded": guarded,
        "unit": unit,
        "s": s,
        "scale_mask": (raw_scale > 0.0).astype(np.float64),
        "collapsed": p < COLLAPSE_POWER,
    }
    return x, cache


def _power_layers_backward(dx: np.ndarray, cache: dict):
    """Gradients through scale, normalization (incl. batch-power coupling)
    and centering; returns (d_raw, d_raw_scale)."""
    s = cache["s"]
    unit = cache["unit"]
    sigma = cache["sigma"]
    du = dx / s
    ds = -np.sum(dx * unit, axis=0) / s**2
    d_raw_scale = ds * cache["scale_mask"]
    if cache["guarded"]:
        dc = du / sigma
    else:
        c = unit * sigma
        coupling = np.sum(du * c) / (sigma**3 * c.shape[0])
        dc = du / sigma - coupling * c
    d_raw = dc - dc.mean(axis=0)
    return d_raw, d_raw_scale


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def forward(config: DaeConfig, params: dict, bit_batch: np.ndarray, noise: np.ndarray):
    """Full autoencoder pass; returns (z, caches).

    ``noise`` is a complex array of one sample per batch row, already
    scaled to the channel's per-component variance.
    """
    s = config.scenario
    rows = bit_batch.shape[0]
    if noise.shape[0] != rows:
        raise ValidationError(f"noise batch has {noise.shape[0]} rows, bits have {rows}")
    users = []
    agg = np.stack([noise.real, noise.imag], axis=1)
    col = 0
    for i, k in enumerate(s.bits):
        bits_i = bit_batch[:, col:col + k]
        col += k
        pre = bits_i @ params[f"enc{i}_w"] + params[f"enc{i}_b"]
        raw = np.maximum(pre, 0.0)
        x, pcache = power_layers(raw, params[f"enc{i}_s"], config.eps_norm)
        agg = agg + np.sqrt(s.alpha[i]) * x
        users.append({"bits": bits_i, "relu_mask": (pre > 0.0).astype(np.float64), **pcache})

    hs = [agg]
    relu_masks = []
    n_hidden = len(config.hidden_sizes)
    h = agg
    for layer in range(n_hidden):
        zpre = h @ params[f"dec{layer}_w"] + params[f"dec{layer}_b"]
        relu_masks.append((zpre > 0.0).astype(np.float64))
        h = np.maximum(zpre, 0.0)
        hs.append(h)
    logits = h @ params[f"dec{n_hidden}_w"] + params[f"dec{n_hidden}_b"]
    z = _sigmoid(logits)
    caches = {"users": users, "hs": hs, "relu_masks": relu_masks, "z": z, "bits": bit_batch}
    return z, caches


def bce_loss(z: np.ndarray, bit_batch: np.ndarray) -> float:
    """Mean binary cross-entropy (natural log), probabilities clamped."""
    zc = np.clip(z, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(bit_batch * np.log(zc) + (1.0 - bit_batch) * np.log(1.0 - zc)))


def backward(config: DaeConfig, params: dict, caches: dict) -> dict[str, np.ndarray]:
    """Exact gradients of the clamped cross-entropy for every parameter."""
    s = config.scenario
    z = caches["z"]
    bits = caches["bits"]
    n = z.size
    zc = np.clip(z, BCE_CLAMP, 1.0 - BCE_CLAMP)
    dzc = ((1.0 - bits) / (1.0 - zc) - bits / zc) / n
    in_range = (z > BCE_CLAMP) & (z < 1.0 - BCE_CLAMP)
    dlogits = dzc * in_range * z * (1.0 - z)

    grads: dict[str, np.ndarray] = {}
    n_hidden = len(config.hidden_sizes)
    dh = dlogits
    for layer in range(n_hidden, -1, -1):
        h_in = caches["hs"][layer]
        grads[f"dec{layer}_w"] = h_in.T @ dh
        grads[f"dec{layer}_b"] = dh.sum(axis=0)
        dh = dh @ params[f"dec{layer}_w"].T
        if layer > 0:
            dh = dh * caches["relu_masks"][layer - 1]

    dy = dh  # gradient at the aggregate received symbol (B, 2)
    for i in range(s.K):
        ucache = caches["users"][i]
        dx = np.sqrt(s.alpha[i]) * dy
        d_raw, d_raw_scale = _power_layers_backward(dx, ucache)
        dpre = d_raw * ucache["relu_mask"]
        grads[f"enc{i}_w"] = ucache["bits"].T @ dpre
        grads[f"enc{i}_b"] = dpre.sum(axis=0)
        grads[f"enc{i}_s"] = d_raw_scale
    return grads


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    hyper: AdamParams,
    t: int,
):
    """One bias-corrected Adam update; pure, returns new params and state."""
    if t < 1:
        raise ValidationError(f"Adam step index starts at 1, got {t}")
    new_params, new_m, new_v = {}, {}, {}
    bc1 = 1.0 - hyper.beta1**t
    bc2 = 1.0 - hyper.beta2**t
    for key, p in params.items():
        g = grads[key]
        m = hyper.beta1 * state.m[key] + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * state.v[key] + (1.0 - hyper.beta2) * g**2
        new_params[key] = p - hyper.step_size * (m / bc1) / (np.sqrt(v / bc2) + hyper.epsilon)
        new_m[key], new_v[key] = m, v
    return new_params, AdamState(m=new_m, v=new_v)
