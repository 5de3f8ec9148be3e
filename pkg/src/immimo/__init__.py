"""Deep-unfolded MIMO detection on behavioral memristor crossbar arrays.

Subpackages:
    mimo       complex MIMO system model (channels, modulation, AWGN, BER)
    device     pulse-programmed memristor behavior and programming latency
    crossbar   analog execution of the unfolded detector on crossbar arrays
    detnet     software forward/backward pass of the unfolded detector
    training   noise-aware training loop, Adam, checkpoints
    baselines  ZF / MMSE / exhaustive ML / sphere decoding
    analysis   closed-form error bounds, latency, complexity, FLOPs models
    harness    seeded Monte Carlo sweeps, config parsing, CSV emission
"""

__version__ = "0.1.0"
