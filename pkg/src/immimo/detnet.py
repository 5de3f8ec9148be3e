"""Software forward/backward pass of the unfolded projected-gradient detector.

Each of the L blocks computes

    s_k = x_{k-1} - alpha1_k H^T y + alpha2_k H^T H x_{k-1}
    u_k = [s_k; a_{k-1}]
    z_k = relu(W1_k u_k + b1_k)
    x_k = W2_k z_k + b2_k
    a_k = W3_k z_k + b3_k

starting from x_0 = a_0 = 0.  The auxiliary vector a_k widens the block input
and carries state between blocks; it has no physical meaning.

The training loss sums squared errors over blocks with logarithmic weights
w_k = ln(k), which zeroes block 1 and damps unstable early-block errors.
ln(k+1) is available as an alternative that keeps block 1 in the loss.

All functions here are pure numpy and accept a leading batch dimension on
H (..., 2n_r, 2n_t) and y (..., 2n_r).
"""

from dataclasses import dataclass

import numpy as np

PARAM_KEYS = ("w1", "b1", "w2", "b2", "w3", "b3", "alpha1", "alpha2")


@dataclass
class DetNetParams:
    """Trainable parameter set, stacked along a leading block axis.

    Shapes: w1 (L, S, 2n_t + a_size), b1 (L, S), w2 (L, 2n_t, S), b2 (L, 2n_t),
    w3 (L, a_size, S), b3 (L, a_size), alpha1 (L,), alpha2 (L,).
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray

    @property
    def L(self):
        return self.w1.shape[0]

    @property
    def S(self):
        return self.w1.shape[1]

    @property
    def x_dim(self):
        return self.w2.shape[1]

    @property
    def a_size(self):
        return self.w3.shape[1]

    def as_dict(self):
        return {k: getattr(self, k) for k in PARAM_KEYS}

    def copy(self):
        return DetNetParams(**{k: getattr(self, k).copy() for k in PARAM_KEYS})

    def validate(self):
        for k in PARAM_KEYS:
            if not np.all(np.isfinite(getattr(self, k))):
                raise ValueError(f"non-finite values in parameter {k}")
        if np.any(self.alpha1 <= 0) or np.any(self.alpha2 <= 0):
            raise ValueError("alpha gains must stay strictly positive")


def init_params(config, rng):
    """He-initialized weights, zero biases, small positive step gains."""
    d_in = 2 * config.n_t + config.a_size
    L, S, a = config.L, config.S, config.a_size
    x_dim = 2 * config.n_t

    def he(shape, fan_in):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

    return DetNetParams(
        w1=he((L, S, d_in), d_in),
        b1=np.zeros((L, S)),
        w2=he((L, x_dim, S), S),
        b2=np.zeros((L, x_dim)),
        w3=he((L, a, S), S),
        b3=np.zeros((L, a)),
        alpha1=np.full(L, 1e-2),
        alpha2=np.full(L, 1e-2),
    )


def _bmv(m, v):
    """Matrix-vector product broadcast over leading batch dims."""
    return (m @ v[..., None])[..., 0]


def ideal_forward(params, h_real, y):
    """Run all L blocks in exact arithmetic.

    Returns (trajectory, cache): trajectory is the list [x_1, ..., x_L]; the
    cache retains everything backprop needs (block inputs, ReLU masks, the
    Gram products).
    """
    h_real = np.asarray(h_real, dtype=float)
    y = np.asarray(y, dtype=float)
    hty = _bmv(np.swapaxes(h_real, -1, -2), y)
    hth = np.swapaxes(h_real, -1, -2) @ h_real

    batch = y.shape[:-1]
    x = np.zeros(batch + (params.x_dim,))
    a = np.zeros(batch + (params.a_size,))

    trajectory = []
    blocks = []
    for k in range(params.L):
        hthx = _bmv(hth, x)
        s = x - params.alpha1[k] * hty + params.alpha2[k] * hthx
        u = np.concatenate([s, a], axis=-1)
        pre = u @ params.w1[k].T + params.b1[k]
        mask = pre > 0
        z = np.where(mask, pre, 0.0)
        x_prev = x
        x = z @ params.w2[k].T + params.b2[k]
        a = z @ params.w3[k].T + params.b3[k]
        trajectory.append(x)
        blocks.append({"x_prev": x_prev, "hthx": hthx, "u": u, "mask": mask, "z": z})

    cache = {"hty": hty, "hth": hth, "blocks": blocks, "trajectory": trajectory}
    return trajectory, cache


def loss_weights(L, weighting="lnk"):
    k = np.arange(1, L + 1, dtype=float)
    if weighting == "lnk":
        return np.log(k)
    if weighting == "lnk1":
        return np.log(k + 1)
    raise ValueError(f"unknown loss weighting {weighting!r}")


def loss(trajectory, x_true, weighting="lnk"):
    """Batch-mean block-weighted squared error sum_k w_k ||x - x_k||^2."""
    w = loss_weights(len(trajectory), weighting)
    x_true = np.asarray(x_true, dtype=float)
    total = 0.0
    for k, x_k in enumerate(trajectory):
        err = x_k - x_true
        total += w[k] * np.sum(err * err, axis=-1)
    return float(np.mean(total))


def backward(params, cache, x_true, weighting="lnk"):
    """Exact gradients of :func:`loss` w.r.t. every parameter array.

    Returns a dict keyed like DetNetParams.as_dict().  Gradients flow through
    x_k into the next block's linear combination and through a_k into the next
    block's input, so the recursion runs from block L back to block 1.
    """
    hty = cache["hty"]
    hth = cache["hth"]
    blocks = cache["blocks"]
    trajectory = cache["trajectory"]
    x_true = np.asarray(x_true, dtype=float)
    L = params.L
    w = loss_weights(L, weighting)
    batch = trajectory[0].shape[:-1]
    n_batch = int(np.prod(batch)) if batch else 1

    grads = {k: np.zeros_like(getattr(params, k)) for k in PARAM_KEYS}
    gx = np.zeros_like(trajectory[0])  # dL/dx_k, accumulated from later blocks
    ga = np.zeros(batch + (params.a_size,))

    def flat(arr):
        return arr.reshape(n_batch, arr.shape[-1])

    for k in range(L - 1, -1, -1):
        blk = blocks[k]
        gx = gx + (2.0 * w[k] / n_batch) * (trajectory[k] - x_true)

        gz = gx @ params.w2[k] + ga @ params.w3[k]
        grads["w2"][k] = flat(gx).T @ flat(blk["z"])
        grads["b2"][k] = flat(gx).sum(axis=0)
        grads["w3"][k] = flat(ga).T @ flat(blk["z"])
        grads["b3"][k] = flat(ga).sum(axis=0)

        gpre = np.where(blk["mask"], gz, 0.0)
        grads["w1"][k] = flat(gpre).T @ flat(blk["u"])
        grads["b1"][k] = flat(gpre).sum(axis=0)

        gu = gpre @ params.w1[k]
        gs = gu[..., : params.x_dim]
        ga = gu[..., params.x_dim:]

        grads["alpha1"][k] = -float(np.sum(gs * hty))
        grads["alpha2"][k] = float(np.sum(gs * blk["hthx"]))

        # s_k = x_{k-1} - alpha1 H^T y + alpha2 H^T H x_{k-1}; H^T H symmetric
        gx = gs + params.alpha2[k] * _bmv(hth, gs)

    return grads
