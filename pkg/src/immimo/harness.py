"""Experiment orchestration: seeded sweeps, pipelines, CSV emission.

Reproducibility contract: every Monte Carlo trial draws from its own RNG
stream derived from (master_seed, point_index, trial_index), and per-point
results are pure sums over trials, so serial and thread-parallel runs produce
identical numbers.  Trials execute in fixed-size waves and the stopping rule
is evaluated only at wave boundaries, which keeps the set of executed trials
independent of thread count.

A BER point accumulates until it has at least `min_bits` bits AND
`min_errors` bit errors (confidence at low BER), capped at `max_trials`
channel realizations.  Every emitted row carries a Wilson 95% interval and a
flag for points with fewer than 10 errors.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, analysis, baselines, crossbar, detnet
from . import device as dev
from . import mimo, training
from .config import ConfigError, config_echo

# trials per scheduling wave; constant so serial and parallel runs agree
WAVE = 8

KNOWN_DETECTORS = ("zf", "mmse", "ml", "sd", "detnet", "detnet-hw")


class UnknownDetector(Exception):
    pass


def wilson_interval(errors, bits, z=1.959964):
    """Wilson 95% score interval for a binomial proportion."""
    if bits == 0:
        return 0.0, 1.0
    p = errors / bits
    denom = 1.0 + z * z / bits
    center = (p + z * z / (2 * bits)) / denom
    half = z * np.sqrt(p * (1 - p) / bits + z * z / (4 * bits * bits)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass
class SweepRow:
    detector: str
    snr_db: float
    gamma: float
    bits: int
    errors: int
    wall_time_s: float

    @property
    def ber(self):
        return self.errors / self.bits if self.bits else 0.0

    @property
    def ci(self):
        return wilson_interval(self.errors, self.bits)

    @property
    def low_errors(self):
        return self.errors < 10


@dataclass
class SweepResult:
    rows: list

    CSV_HEADER = "detector,snr_db,gamma,bits,errors,ber,ci_lo,ci_hi,low_errors,wall_time_s"

    def to_csv(self):
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lo, hi = r.ci
            lines.append(
                f"{r.detector},{r.snr_db:.12g},{r.gamma:.12g},{r.bits},{r.errors},"
                f"{r.ber:.12g},{lo:.12g},{hi:.12g},{int(r.low_errors)},"
                f"{r.wall_time_s:.6f}"
            )
        return "\n".join(lines) + "\n"


def _trial_rng(seed, point_index, trial_index):
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int(point_index), int(trial_index)])
    )


def _detect_slot(detector, h, ys, sigma, gamma, cfg, spec, hw_det, params, rng):
    """Detect one slot's worth of symbol vectors against one channel."""
    if detector == "zf":
        soft = baselines.linear_soft_batch(h, ys, cfg)  # solve once, all symbols
        x_hat = mimo.decide_rails(soft, cfg)
    elif detector == "mmse":
        soft = baselines.linear_soft_batch(h, ys, cfg, sigma_n=sigma)
        x_hat = mimo.decide_rails(soft, cfg)
    elif detector == "ml":
        x_hat = baselines.ml_detect_batch(h, ys, cfg)
    elif detector == "sd":
        x_hat = np.stack([baselines.sphere_decode(h, y, cfg).x_hat_real for y in ys])
    elif detector == "detnet":
        trajectory, _ = detnet.ideal_forward(params, h, ys)
        x_hat = trajectory[-1]
    elif detector == "detnet-hw":
        # the one reprogramming event for this channel realization
        cb = hw_det.program_channel(h, rng, spec=replace(spec, gamma=gamma))
        x_hat, _ = hw_det.forward(cb, ys)
    else:
        raise UnknownDetector(detector)
    return mimo.demodulate(x_hat, cfg)


def run_ber_sweep(exp, detectors=None, params=None, rng_seed=None):
    """Monte Carlo BER over (detector, snr_db, gamma) grid points.

    Deep detectors require trained params.  Each trial is one channel
    realization carrying `symbols_per_slot` symbol vectors; hardware
    detection reprograms the channel arrays exactly once per realization.
    """
    cfg = exp.mimo
    sweep = exp.sweep
    detectors = list(detectors or sweep.detectors)
    seed = exp.seed if rng_seed is None else rng_seed
    for det in detectors:
        if det not in KNOWN_DETECTORS:
            raise UnknownDetector(f"{det!r}; known: {KNOWN_DETECTORS}")
    if any(d in ("detnet", "detnet-hw") for d in detectors) and params is None:
        raise ConfigError("deep detectors need trained params (eval.params)")

    hw_det = None
    if "detnet-hw" in detectors:
        hw_det = crossbar.HardwareDetector(cfg, params, exp.device)

    points = [
        (det, snr, gamma)
        for det in detectors
        for snr in sweep.snr_db
        for gamma in sweep.gammas
    ]
    bits_per_trial = sweep.symbols_per_slot * cfg.bits_per_vector
    rows = []
    pool = ThreadPoolExecutor(max_workers=exp.threads) if exp.threads > 1 else None
    try:
        for p_idx, (det, snr, gamma) in enumerate(points):
            sigma = mimo.sigma_from_snr(snr)
            t0 = time.perf_counter()

            def one_trial(t_idx, det=det, sigma=sigma, gamma=gamma):
                rng = _trial_rng(seed, p_idx, t_idx)
                h = mimo.to_real(mimo.generate_channel(cfg, rng))
                bits = mimo.random_bits(cfg, rng, count=sweep.symbols_per_slot)
                x = mimo.modulate(bits, cfg).real
                ys = mimo.transmit(h, x, sigma, rng)
                bits_hat = _detect_slot(
                    det, h, ys, sigma, gamma, cfg, exp.device, hw_det, params, rng
                )
                return int(np.sum(bits_hat != bits))

            bits_total = 0
            errors = 0
            trial = 0
            while trial < sweep.max_trials:
                wave = range(trial, min(trial + WAVE, sweep.max_trials))
                if pool is not None:
                    wave_errors = list(pool.map(one_trial, wave))
                else:
                    wave_errors = [one_trial(t) for t in wave]
                errors += sum(wave_errors)
                bits_total += bits_per_trial * len(wave_errors)
                trial += len(wave_errors)
                if bits_total >= sweep.min_bits and errors >= sweep.min_errors:
                    break
            rows.append(
                SweepRow(
                    detector=det, snr_db=snr, gamma=gamma,
                    bits=bits_total, errors=errors,
                    wall_time_s=time.perf_counter() - t0,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(rows=rows)


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")
    return str(path)


def _csv(header, rows):
    return "\n".join([header] + rows) + "\n"


def run_pipeline(exp, out_dir):
    """Dispatch one experiment mode; writes CSV artifacts plus a manifest.

    Returns the list of files written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    rng = np.random.default_rng(exp.seed)
    cfg = exp.mimo
    spec = exp.device
    outputs = []

    if exp.mode == "train":
        params, history = training.train(cfg, exp.train, spec, rng)
        ckpt = out / "params.npz"
        training.save_params(ckpt, params, cfg)
        outputs.append(str(ckpt))
        rows = [f"{i},{v:.12g}" for i, v in enumerate(history, start=1)]
        outputs.append(_write(out / "loss_history.csv", _csv("epoch,mean_loss", rows)))

    elif exp.mode == "eval-ber":
        params = None
        if any(d in ("detnet", "detnet-hw") for d in exp.sweep.detectors):
            if not exp.params_path:
                raise ConfigError("eval.params required for deep detectors")
            params, _ = training.load_params(exp.params_path, expected_config=cfg)
        result = run_ber_sweep(exp, params=params)
        outputs.append(_write(out / "ber.csv", result.to_csv()))

    elif exp.mode == "bounds":
        inputs = analysis.BoundInputs(
            n_t=cfg.n_t, n_r=cfg.n_r, L=cfg.L, S=cfg.S, n_p=spec.n_p,
            gamma=spec.gamma, sigma_n=exp.bounds.sigma_n,
            varpi1=exp.bounds.varpi1, varpi2=exp.bounds.varpi2,
        )
        report = analysis.eval_bound(inputs)
        outputs.append(
            _write(out / "bounds.csv",
                   _csv(analysis.BoundReport.CSV_HEADER, [report.csv_row()]))
        )

    elif exp.mode == "latency":
        lat = exp.latency
        bound = analysis.programming_latency_bound(cfg.n_t, cfg.n_r, spec)
        sims = [
            dev.total_programming_latency(cfg, spec, rng) for _ in range(lat.trials)
        ]
        t_c = analysis.computation_latency(
            cfg.L, lat.t_array_ns * 1e-9, lat.t_adder_ns * 1e-9, lat.t_relu_ns * 1e-9
        )
        row = (
            f"{bound:.12g},{np.mean(sims):.12g},{np.max(sims):.12g},"
            f"{t_c:.12g},{bound + t_c:.12g}"
        )
        outputs.append(
            _write(out / "latency.csv",
                   _csv("t_p_bound_s,t_p_sim_mean_s,t_p_sim_max_s,t_c_s,t_total_bound_s",
                        [row]))
        )

    elif exp.mode == "complexity":
        report = analysis.hardware_complexity(cfg)
        outputs.append(
            _write(out / "complexity.csv",
                   _csv(analysis.ComplexityReport.CSV_HEADER, [report.csv_row()]))
        )

    elif exp.mode == "flops":
        flops = analysis.flops_per_symbol(cfg)
        counted = analysis.count_forward_flops(cfg)
        bound = analysis.programming_latency_bound(cfg.n_t, cfg.n_r, spec)
        lat = exp.latency
        t_c = analysis.computation_latency(
            cfg.L, lat.t_array_ns * 1e-9, lat.t_adder_ns * 1e-9, lat.t_relu_ns * 1e-9
        )
        total_latency = bound + t_c
        tput = analysis.throughput(flops, exp.sweep.symbols_per_slot, total_latency)
        row = (
            f"{flops},{counted.total},{exp.sweep.symbols_per_slot},"
            f"{total_latency:.12g},{tput:.12g}"
        )
        outputs.append(
            _write(out / "flops.csv",
                   _csv("flops_per_symbol,flops_counted,symbols,latency_s,throughput_flops",
                        [row]))
        )

    elif exp.mode == "program-sim":
        rows = []
        for t in range(exp.latency.trials):
            h = mimo.to_real(mimo.generate_channel(cfg, rng))
            result = dev.program_matrix(h, spec, rng)
            dh = result.realized(spec) - np.clip(h, -dev.H_CLIP, dev.H_CLIP)
            rows.append(
                f"{t},{2.0 * result.total_latency:.12g},"
                f"{int(result.pulse_counts.sum())},{np.std(dh):.12g}"
            )
        outputs.append(
            _write(out / "program_sim.csv",
                   _csv("trial,t_p_s,total_pulses,dh_std", rows))
        )

    else:
        raise ConfigError(f"unknown mode {exp.mode!r}")

    manifest = {
        "version": f"immimo-{__version__}",
        "mode": exp.mode,
        "seed": exp.seed,
        "outputs": [Path(o).name for o in outputs],
        "wall_clock_s": round(time.perf_counter() - started, 6),
        "config": config_echo(exp),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return outputs
