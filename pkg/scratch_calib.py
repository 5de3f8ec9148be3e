"""Scratch calibration: staged desk-scale training with BER tracking."""
import numpy as np
from immimo import mimo, detnet, training, device, baselines

cfg = mimo.MimoConfig(n_t=4, n_r=6, modulation="qpsk", L=10, S=64, a_size=16)
spec = device.device_preset()


def eval_ber(params, snr_db, nbits=200_000, seed=99):
    rng = np.random.default_rng(seed)
    sigma = mimo.sigma_from_snr(snr_db)
    nvec = nbits // cfg.bits_per_vector
    errs = tot = errs_ml = 0
    per_chan = 14
    for c in range(nvec // per_chan + 1):
        h = mimo.to_real(mimo.generate_channel(cfg, rng))
        bits = mimo.random_bits(cfg, rng, count=per_chan)
        x = mimo.modulate(bits, cfg).real
        y = mimo.transmit(h, x, sigma, rng)
        traj, _ = detnet.ideal_forward(params, h, y)
        errs += np.sum(mimo.demodulate(traj[-1], cfg) != bits)
        tot += bits.size
        xml = baselines.ml_detect_batch(h, y, cfg)
        errs_ml += np.sum(mimo.demodulate(xml, cfg) != bits)
    return errs / tot, errs_ml / tot


rng = np.random.default_rng(42)
params = None
lrs = [2e-3, 1e-3, 5e-4, 2.5e-4]
for stage, lr in enumerate(lrs):
    tc = training.TrainConfig(epochs=6000, batch_size=1000, lr=lr, gamma_train=0.0)
    params, hist = training.train(cfg, tc, spec, rng, params=params)
    print(f"stage {stage}: lr {lr} final100 loss {hist[-100:].mean():.4f}", flush=True)
    for snr in (7, 8, 9, 10):
        b, bml = eval_ber(params, snr)
        print(f"  snr {snr}: detnet {b:.5f} ml {bml:.5f}", flush=True)
    np.savez(f"/tmp/calib_stage{stage}.npz", **params.as_dict())
print("alpha maxes:", params.alpha1.max(), params.alpha2.max())
