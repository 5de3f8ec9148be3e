"""Noise-aware training of the unfolded detector.

Every epoch draws a fresh batch of (x, H, y0 = Hx, n, dH): channel noise n at
an SNR sampled uniformly from the training range, and dH from the closed-form
programming-noise law at the training C2C level.  The forward pass runs on
the perturbed pair (H + dH, y0 + n) while the loss targets the true x, so the
network learns representations that tolerate both noise sources.  Training is
plain Adam on the manually backpropagated gradients; the step gains alpha are
clamped to stay strictly positive because they map to physical resistances.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import detnet
from . import device as dev
from . import mimo

CHECKPOINT_VERSION = 1


class TrainingDiverged(Exception):
    """Loss became non-finite; carries the epoch for diagnostics."""


@dataclass
class TrainConfig:
    epochs: int = 3000
    batch_size: int = 128
    lr: float = 8e-4
    snr_train_range_db: tuple = (8.0, 13.0)
    gamma_train: float = 0.02
    loss_weighting: str = "lnk"
    # constant learning rate by default; the decay multiplies by 0.97 every
    # 1000 epochs when enabled
    lr_decay: bool = False
    alpha_floor: float = 1e-6
    log_every: int = 0  # print mean loss every N epochs (0 = silent)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        lo, hi = self.snr_train_range_db
        if lo > hi:
            raise ValueError("snr_train_range_db must be (low, high)")


class Adam:
    """Standard Adam over a dict of parameter arrays."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, p in params.items():
            g = grads[key]
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)
            self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * g * g
            p -= self.lr * (self.m[key] / bc1) / (np.sqrt(self.v[key] / bc2) + self.eps)


def draw_batch(config, train_cfg, spec, rng):
    """One epoch's training samples: (x, H, y_in = y0 + n, H_in = H + dH)."""
    b = train_cfg.batch_size
    bits = mimo.random_bits(config, rng, count=b)
    x = mimo.modulate(bits, config).real
    h_c = rng.standard_normal((b, config.n_r, config.n_t)) + 1j * rng.standard_normal(
        (b, config.n_r, config.n_t)
    )
    h = mimo.to_real(h_c)
    y0 = (h @ x[..., None])[..., 0]

    lo, hi = train_cfg.snr_train_range_db
    snr = np.full(b, lo) if lo == hi else rng.uniform(lo, hi, size=b)
    sigma = mimo.sigma_from_snr(snr)
    n = sigma[:, None] * rng.standard_normal(y0.shape)

    if train_cfg.gamma_train > 0:
        noise_spec = dev.DeviceSpec(
            g_on=spec.g_on, g_off=spec.g_off, n_p=spec.n_p,
            gamma=train_cfg.gamma_train, dt_w=spec.dt_w,
        )
        dh = dev.sample_dh_matrix(h, noise_spec, rng)
    else:
        dh = 0.0
    return x, h + dh, y0 + n


def train(config, train_cfg, spec, rng, params=None):
    """Adam-train the detector; returns (params, per-epoch mean loss)."""
    if params is None:
        params = detnet.init_params(config, rng)
    pdict = params.as_dict()
    opt = Adam(train_cfg.lr)
    history = np.empty(train_cfg.epochs)

    for epoch in range(train_cfg.epochs):
        if train_cfg.lr_decay:
            opt.lr = train_cfg.lr * 0.97 ** (epoch // 1000)
        x, h_in, y_in = draw_batch(config, train_cfg, spec, rng)
        trajectory, cache = detnet.ideal_forward(params, h_in, y_in)
        value = detnet.loss(trajectory, x, train_cfg.loss_weighting)
        if not math.isfinite(value):
            raise TrainingDiverged(f"loss became {value} at epoch {epoch}")
        history[epoch] = value
        grads = detnet.backward(params, cache, x, train_cfg.loss_weighting)
        opt.step(pdict, grads)
        # alphas map to resistor values; project back into the feasible set
        np.clip(params.alpha1, train_cfg.alpha_floor, None, out=params.alpha1)
        np.clip(params.alpha2, train_cfg.alpha_floor, None, out=params.alpha2)
        if train_cfg.log_every and (epoch + 1) % train_cfg.log_every == 0:
            recent = history[max(0, epoch - train_cfg.log_every + 1): epoch + 1]
            print(f"epoch {epoch + 1}: mean loss {recent.mean():.5f}")

    return params, history


def save_params(path, params, config):
    """Versioned checkpoint: config header plus row-major parameter blocks."""
    np.savez(
        path,
        version=CHECKPOINT_VERSION,
        n_t=config.n_t,
        n_r=config.n_r,
        L=config.L,
        S=config.S,
        a_size=config.a_size,
        modulation=config.modulation.value,
        **{k: np.ascontiguousarray(v) for k, v in params.as_dict().items()},
    )


def load_params(path, expected_config=None):
    """Load a checkpoint; returns (params, config).

    If expected_config is given, any header mismatch is rejected.
    """
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        config = mimo.MimoConfig(
            n_t=int(data["n_t"]),
            n_r=int(data["n_r"]),
            modulation=str(data["modulation"]),
            L=int(data["L"]),
            S=int(data["S"]),
            a_size=int(data["a_size"]),
        )
        params = detnet.DetNetParams(**{k: data[k] for k in detnet.PARAM_KEYS})
    if expected_config is not None:
        for attr in ("n_t", "n_r", "modulation", "L", "S", "a_size"):
            got, want = getattr(config, attr), getattr(expected_config, attr)
            if got != want:
                raise ValueError(
                    f"checkpoint {attr}={got} does not match configured {want}"
                )
    params.validate()
    return params, config
