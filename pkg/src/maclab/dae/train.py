"""Training loop, restart protocol, extraction and decoding."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from statistics import median

import numpy as np

from ..channel import PhiloxStream, RngSeed, n0_from_snr
from ..core import Constellation, POWER_CAPPED, bit_patterns
from ..exceptions import CollapsedEncoder, ValidationError
from .config import DaeConfig
from .net import (
    AdamState,
    adam_step,
    backward,
    bce_loss,
    build_batch,
    encoder_forward,
    forward,
    init_params,
)

# stream id offset reserved for the restart-selection validation noise
VALIDATION_STREAM_OFFSET = 1 << 32


@dataclass
class DaeModel:
    """Trained parameters plus the statistics frozen at finalization."""

    config: DaeConfig
    params: dict[str, np.ndarray]
    ext_mean: np.ndarray  # (K, 2) per-user batch means
    ext_power: np.ndarray  # (K,) per-user centered batch powers, pre-guard
    history: list[float]
    best_epoch: int
    best_loss: float
    restart_log: list[dict] = field(default_factory=list)

    @property
    def finalized(self) -> bool:
        return self.ext_mean is not None and self.ext_power is not None


def _encoder_stats(config: DaeConfig, params: dict):
    """Noiseless pass over each user's own pattern set.

    Every joint pattern appears with equal multiplicity in a training
    batch, so these single-pass statistics equal the batch statistics.
    """
    means, powers = [], []
    for i, k in enumerate(config.scenario.bits):
        raw = encoder_forward(params[f"enc{i}_w"], params[f"enc{i}_b"], bit_patterns(k))
        mu = raw.mean(axis=0)
        centered = raw - mu
        means.append(mu)
        powers.append(float(np.mean(np.sum(centered**2, axis=1))))
    return np.stack(means), np.asarray(powers)


def train(config: DaeConfig) -> DaeModel:
    """Full-batch training with patience-based early stopping.

    Each epoch takes one gradient step on the fixed pattern batch with
    fresh noise drawn from the continuing noise stream; the returned
    model is the snapshot with the lowest recorded loss, finalized with
    a noiseless statistics pass.
    """
    bits = build_batch(config.scenario, config.num_const)
    rows = bits.shape[0]
    params = init_params(config, PhiloxStream(config.init_seed))
    noise_stream = PhiloxStream(config.noise_seed)
    noise_var = n0_from_snr(config.train_snr_db) / 2.0
    state = AdamState.zeros_like(params)

    history: list[float] = []
    best_loss = np.inf
    best_epoch = 0
    best_params = None
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        noise = noise_stream.complex_normal(rows, noise_var)
        z, caches = forward(config, params, bits, noise)
        loss = bce_loss(z, bits)
        history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
        if since_best >= config.patience or epoch == config.max_epochs:
            break
        grads = backward(config, params, caches)
        params, state = adam_step(params, grads, state, config.adam, epoch)

    ext_mean, ext_power = _encoder_stats(config, best_params)
    model = DaeModel(
        config=config,
        params=best_params,
        ext_mean=ext_mean,
        ext_power=ext_power,
        history=history,
        best_epoch=best_epoch,
        best_loss=float(best_loss),
    )
    collapsed = [i for i, p in enumerate(ext_power) if p < 1e-10]
    if collapsed:
        raise CollapsedEncoder(
            f"encoder(s) {collapsed} collapsed (power < 1e-10) with "
            f"init_seed={config.init_seed}, train_snr_db={config.train_snr_db}"
        )
    return model


def validation_loss(model: DaeModel, snr_db: float, seed: RngSeed) -> float:
    """Cross-entropy of the finalized model on fresh noise at ``snr_db``."""
    bits = build_batch(model.config.scenario, model.config.num_const)
    noise = PhiloxStream(seed).complex_normal(bits.shape[0], n0_from_snr(snr_db) / 2.0)
    z, _ = forward(model.config, model.params, bits, noise)
    return bce_loss(z, bits)


def train_restarts(
    config: DaeConfig,
    train_snrs: list[float],
    restarts_per_snr: int = 1,
    val_snr_db: float | None = None,
) -> DaeModel:
    """Train over a (seed, train SNR) sweep and keep the best model.

    Run r uses seed streams offset by r, so runs are independent but
    reproducible.  Candidates are ranked by cross-entropy on a shared
    validation noise batch at a common SNR (default: the median of the
    training SNRs), making losses comparable across training SNRs.
    Collapsed runs are logged and skipped unless every run collapses.
    """
    if not train_snrs:
        raise ValidationError("need at least one training SNR")
    if val_snr_db is None:
        val_snr_db = float(median(train_snrs))
    val_seed = RngSeed(
        config.noise_seed.seed, config.noise_seed.stream_id + VALIDATION_STREAM_OFFSET
    )
    combos = [(snr, r) for snr in train_snrs for r in range(restarts_per_snr)]
    log: list[dict] = []
    best_model = None
    best_val = np.inf
    for run, (snr, _r) in enumerate(combos):
        cfg = replace(
            config,
            train_snr_db=float(snr),
            init_seed=RngSeed(config.init_seed.seed, config.init_seed.stream_id + run),
            noise_seed=RngSeed(config.noise_seed.seed, config.noise_seed.stream_id + run),
        )
        entry = {
            "run": run,
            "train_snr_db": float(snr),
            "init_seed": [cfg.init_seed.seed, cfg.init_seed.stream_id],
            "noise_seed": [cfg.noise_seed.seed, cfg.noise_seed.stream_id],
        }
        try:
            model = train(cfg)
        except CollapsedEncoder as exc:
            entry.update(status="collapsed", detail=str(exc))
            log.append(entry)
            continue
        vloss = validation_loss(model, val_snr_db, val_seed)
        entry.update(
            status="ok",
            best_loss=model.best_loss,
            best_epoch=model.best_epoch,
            epochs=len(model.history),
            val_snr_db=val_snr_db,
            val_loss=vloss,
        )
        log.append(entry)
        if vloss < best_val:
            best_val = vloss
            best_model = model
    if best_model is None:
        raise CollapsedEncoder(f"every restart collapsed; log: {log}")
    best_model.restart_log = log
    return best_model


def extract_constellations(model: DaeModel) -> list[Constellation]:
    """Per-user symbol sets exactly as the trained transmitters emit them.

    Each user's 2^k patterns pass through its encoder once and get the
    frozen centering/normalization statistics and learned scale applied.
    Mean power is at most 1 because the scale divisor is at least 1.
    """
    if not model.finalized:
        raise ValidationError("model is not finalized; train it first")
    config = model.config
    out = []
    for i, k in enumerate(config.scenario.bits):
        if model.ext_power[i] < 1e-10:
            raise CollapsedEncoder(f"encoder {i} carries no usable power")
        raw = encoder_forward(
            model.params[f"enc{i}_w"], model.params[f"enc{i}_b"], bit_patterns(k)
        )
        sigma = np.sqrt(max(model.ext_power[i], config.eps_norm))
        s = 1.0 + np.maximum(model.params[f"enc{i}_s"], 0.0)
        x = (raw - model.ext_mean[i]) / sigma / s
        out.append(Constellation(k, x[:, 0] + 1j * x[:, 1], POWER_CAPPED))
    return out


def decode(model: DaeModel, y: np.ndarray | complex) -> np.ndarray:
    """Bit probabilities for received samples (decoder forward only)."""
    from .net import _sigmoid

    scalar = np.isscalar(y) or getattr(y, "ndim", 0) == 0
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    h = np.stack([ys.real, ys.imag], axis=1)
    n_hidden = len(model.config.hidden_sizes)
    for layer in range(n_hidden):
        h = np.maximum(h @ model.params[f"dec{layer}_w"] + model.params[f"dec{layer}_b"], 0.0)
    logits = h @ model.params[f"dec{n_hidden}_w"] + model.params[f"dec{n_hidden}_b"]
    z = _sigmoid(logits)
    return z[0] if scalar else z
