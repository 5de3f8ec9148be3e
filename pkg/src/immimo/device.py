"""Behavioral memristor model: pulse-train programming with C2C noise.

A cell is swept from G_off to G_on by N_p identical pulses; each pulse moves
the conductance by (G_on - G_off)/N_p plus a zero-mean Gaussian cycle-to-cycle
fluctuation with standard deviation sigma_dg = gamma * (G_on - G_off).

Channel entries are mapped onto differential pairs with the three-sigma rule:
mu = (G_on - G_off)/3, so |h| = 3 exhausts the conductance range.  A positive
entry programs the G+ cell to G_off + mu*h, a negative entry programs G- to
G_off + mu*|h|, and the partner cell stays at G_off.  Programming is open loop
(no verify step): the accumulated per-pulse noise lands in the realized
channel as dh with conditional variance 3 * gamma^2 * N_p * |h|.

Rows are programmed sequentially; cells within a row are programmed in
parallel, so a row costs dt_w times the largest pulse count in the row.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

# Entries are saturated at |h| = 3 before mapping: the three-sigma design
# leaves 0.27% of Gaussian entries outside the representable range and a
# physical cell cannot exceed G_on.
H_CLIP = 3.0


@dataclass
class DeviceSpec:
    """Memristor behavioral parameters (SI units: siemens, seconds)."""

    g_on: float
    g_off: float
    n_p: int
    gamma: float
    dt_w: float

    def __post_init__(self):
        if not (self.g_on > self.g_off > 0):
            raise ValueError("need g_on > g_off > 0")
        if self.n_p < 1:
            raise ValueError("n_p must be >= 1")
        if not (0 <= self.gamma <= 0.06):
            raise ValueError("gamma outside supported range [0, 0.06]")
        if self.gamma > 0.05:
            warnings.warn(
                f"gamma={self.gamma} exceeds the typical C2C range (0, 0.05)",
                stacklevel=2,
            )
        if self.dt_w <= 0:
            raise ValueError("dt_w must be positive")

    @property
    def g_range(self):
        return self.g_on - self.g_off

    @property
    def sigma_dg(self):
        """Per-pulse conductance noise std: gamma * (G_on - G_off)."""
        return self.gamma * self.g_range

    @classmethod
    def from_config_keys(cls, g_on_us, g_off_us, n_p, gamma, dt_w_ns):
        """Build from config-file units (microsiemens, nanoseconds)."""
        return cls(
            g_on=g_on_us * 1e-6,
            g_off=g_off_us * 1e-6,
            n_p=int(n_p),
            gamma=gamma,
            dt_w=dt_w_ns * 1e-9,
        )


# Published device characterizations.  The first device reports different C2C
# figures for potentiation and depression; cells here are only ever programmed
# upward from full reset, so the potentiation value is used.
DEVICE_PRESETS = {
    "zeng2023": dict(g_on_us=230.99, g_off_us=79.93, n_p=256, gamma=0.0441, dt_w_ns=10.0),
    "jerry2017": dict(g_on_us=1.79, g_off_us=0.04, n_p=32, gamma=0.005, dt_w_ns=75.0),
    "luo2022": dict(g_on_us=27.5, g_off_us=1.0, n_p=150, gamma=0.0365, dt_w_ns=0.63),
}

DEFAULT_PRESET = "luo2022"


def device_preset(name=DEFAULT_PRESET, **overrides):
    """Named DeviceSpec; keyword overrides use config-file units."""
    if name not in DEVICE_PRESETS:
        raise KeyError(f"unknown device preset {name!r}; have {sorted(DEVICE_PRESETS)}")
    keys = dict(DEVICE_PRESETS[name])
    keys.update(overrides)
    return DeviceSpec.from_config_keys(**keys)


def map_coefficient(spec):
    """Channel-to-conductance scale mu = (G_on - G_off)/3 (three-sigma rule)."""
    return spec.g_range / 3.0


def target_pair(h_entry, spec):
    """Target (g_plus, g_minus) and conductance change for one channel entry.

    Only one cell of the pair moves away from G_off; a zero entry programs
    neither.  Returns ((g_plus, g_minus), target_dg).
    """
    mu = map_coefficient(spec)
    h = float(np.clip(h_entry, -H_CLIP, H_CLIP))
    target_dg = mu * abs(h)
    if h > 0:
        return (spec.g_off + target_dg, spec.g_off), target_dg
    if h < 0:
        return (spec.g_off, spec.g_off + target_dg), target_dg
    return (spec.g_off, spec.g_off), 0.0


def pulse_count(target_dg, spec):
    """Open-loop pulse count: round(target_dg * N_p / (G_on - G_off))."""
    target_dg = np.asarray(target_dg, dtype=float)
    if np.any(target_dg < -1e-18) or np.any(target_dg > spec.g_range * (1 + 1e-12)):
        raise ValueError("target conductance change outside [0, G_on - G_off]")
    n = np.rint(target_dg * spec.n_p / spec.g_range).astype(int)
    return n if n.ndim else int(n)


def program_cell(target_dg, spec, rng, clip=False):
    """Apply a pulse train toward target_dg; returns (achieved_dg, n_pulses).

    Every pulse contributes (G_on - G_off)/N_p plus an independent Gaussian
    C2C draw.  By default the result is NOT clipped to the physical range so
    Monte Carlo statistics match the unclipped Gaussian law; pass clip=True
    for physical saturation studies.
    """
    n = pulse_count(target_dg, spec)
    achieved = n * spec.g_range / spec.n_p
    if n > 0 and spec.gamma > 0:
        achieved += rng.normal(0.0, spec.sigma_dg, size=n).sum()
    if clip:
        achieved = float(np.clip(achieved, 0.0, spec.g_range))
    return achieved, n


def sample_dh(h_entry, spec, rng):
    """Closed-form draw of the channel perturbation dh for one entry.

    Fast path for training-time noise injection: dh | h ~ N(0, 3 gamma^2 N_p
    |h|), with |h| saturated at 3 to mirror the conductance-range clip of the
    pulse-train path.
    """
    h = min(abs(float(h_entry)), H_CLIP)
    if h == 0.0 or spec.gamma == 0.0:
        return 0.0
    return rng.normal(0.0, np.sqrt(3.0 * spec.gamma**2 * spec.n_p * h))


def sample_dh_matrix(h_real, spec, rng):
    """Vectorized :func:`sample_dh` over a matrix (or batch of matrices)."""
    h = np.minimum(np.abs(np.asarray(h_real, dtype=float)), H_CLIP)
    if spec.gamma == 0.0:
        return np.zeros_like(h)
    std = np.sqrt(3.0 * spec.gamma**2 * spec.n_p * h)
    return rng.standard_normal(h.shape) * std


def simulate_dh_pulse_train(h_entry, spec, rng, trials):
    """Monte Carlo oracle for the dh law: literal pulse-train accumulation.

    Programs the same entry `trials` times and returns the array of realized
    dh = (achieved_dg - target_dg)/mu.  Quantization of the pulse count shows
    up as a deterministic offset, C2C noise as the spread.
    """
    mu = map_coefficient(spec)
    (gp, gm), target_dg = target_pair(h_entry, spec)
    del gp, gm
    n = pulse_count(target_dg, spec)
    base = n * spec.g_range / spec.n_p - target_dg
    if n == 0 or spec.gamma == 0.0:
        return np.full(trials, base / mu)
    noise = rng.normal(0.0, spec.sigma_dg, size=(trials, n)).sum(axis=1)
    return (base + noise) / mu


@dataclass
class ProgrammingResult:
    """Outcome of programming one real channel matrix."""

    g_plus: np.ndarray
    g_minus: np.ndarray
    pulse_counts: np.ndarray
    latency_per_row: np.ndarray  # dt_w * max pulse count in each row
    total_latency: float         # sum over rows (rows are sequential)

    def realized(self, spec):
        """Channel actually stored on the arrays: (G+ - G-)/mu = H + dH."""
        return (self.g_plus - self.g_minus) / map_coefficient(spec)


def program_matrix(h_real, spec, rng, clip=False):
    """Program every entry of a real matrix onto differential pairs.

    Rows are written sequentially; all cells of a row receive their pulse
    trains in parallel, so each row costs dt_w * max(n_pulses in row).
    """
    h = np.asarray(h_real, dtype=float)
    if h.ndim != 2:
        raise ValueError("channel matrix must be 2-D")
    hc = np.clip(h, -H_CLIP, H_CLIP)
    mu = map_coefficient(spec)
    target_dg = mu * np.abs(hc)
    counts = pulse_count(target_dg, spec)

    achieved = counts * (spec.g_range / spec.n_p)
    if spec.gamma > 0:
        flat = counts.ravel()
        total = int(flat.sum())
        if total > 0:
            # one draw per pulse, summed per cell: the literal pulse train
            noise = rng.normal(0.0, spec.sigma_dg, size=total)
            offsets = np.concatenate([[0], np.cumsum(flat)[:-1]])
            # reduceat mishandles empty segments; clamp then zero them out
            sums = np.add.reduceat(noise, np.minimum(offsets, total - 1))
            sums[flat == 0] = 0.0
            achieved = achieved + sums.reshape(counts.shape)
    if clip:
        achieved = np.clip(achieved, 0.0, spec.g_range)

    g_plus = np.where(hc > 0, spec.g_off + achieved, spec.g_off)
    g_minus = np.where(hc < 0, spec.g_off + achieved, spec.g_off)
    latency_per_row = spec.dt_w * counts.max(axis=1)
    return ProgrammingResult(
        g_plus=g_plus,
        g_minus=g_minus,
        pulse_counts=counts,
        latency_per_row=latency_per_row,
        total_latency=float(latency_per_row.sum()),
    )


def total_programming_latency(config, spec, rng):
    """Simulated total programming latency T_p for one channel realization.

    The Gram-product path stores two copies of H programmed back to back and
    dominates the matched-filter path (programmed concurrently), so
    T_p = 2 * T_m.
    """
    from . import mimo

    h = mimo.to_real(mimo.generate_channel(config, rng))
    result = program_matrix(h, spec, rng)
    return 2.0 * result.total_latency


def row_latency_bound(n_t, spec):
    """Closed-form bound on the expected latency of programming one row."""
    if n_t < 2:
        raise ValueError("row latency bound requires n_t >= 2 (ln n_t > 0)")
    ln_nt = np.log(n_t)
    lead = np.sqrt(2.0) * spec.g_on * spec.n_p * spec.dt_w / (3.0 * spec.g_range)
    return lead * (np.sqrt(ln_nt) + 1.0 / (np.sqrt(np.pi) * ln_nt))
