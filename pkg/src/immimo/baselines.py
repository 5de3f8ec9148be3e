"""Classical detectors: ZF, MMSE, exhaustive ML, and a sphere decoder.

All detectors work on the real-valued model y = Hx + n with per-rail
constellation alphabets from :mod:`immimo.mimo`.  The sphere decoder runs a
QR-based depth-first search with Schnorr-Euchner enumeration over the 2n_t
real rails and shrinks its radius at every leaf, so it returns exactly the
exhaustive-ML decision while visiting far fewer nodes at high SNR.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import mimo


class RankDeficientChannel(Exception):
    """H lost full column rank; linear detection is not well posed."""


@dataclass
class DetectorOutput:
    x_hat_real: np.ndarray
    soft: np.ndarray | None = None
    node_count: int | None = None


def _gram_solve(h_real, rhs, diag_load=0.0):
    g = h_real.T @ h_real
    if diag_load:
        g = g + diag_load * np.eye(g.shape[0])
    try:
        return np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientChannel(str(exc)) from exc


def zf_detect(h_real, y, config):
    """soft = (H^T H)^{-1} H^T y, then per-rail nearest-point decision."""
    h_real = np.asarray(h_real, dtype=float)
    if np.linalg.matrix_rank(h_real) < h_real.shape[1]:
        raise RankDeficientChannel("channel matrix is column-rank deficient")
    soft = _gram_solve(h_real, h_real.T @ np.asarray(y, dtype=float))
    return DetectorOutput(x_hat_real=mimo.decide_rails(soft, config), soft=soft)


def rail_symbol_energy(config):
    """Mean per-real-rail symbol energy under unit total transmit power."""
    return 1.0 / (2.0 * config.n_t)


def mmse_detect(h_real, y, sigma_n, config):
    """soft = (H^T H + (sigma_n^2 / E_rail) I)^{-1} H^T y, then decision."""
    if sigma_n < 0:
        raise ValueError("sigma_n must be nonnegative")
    h_real = np.asarray(h_real, dtype=float)
    load = sigma_n**2 / rail_symbol_energy(config)
    soft = _gram_solve(h_real, h_real.T @ np.asarray(y, dtype=float), diag_load=load)
    return DetectorOutput(x_hat_real=mimo.decide_rails(soft, config), soft=soft)


def linear_soft_batch(h_real, ys, config, sigma_n=None):
    """ZF (sigma_n None) or MMSE soft outputs for many y sharing one channel.

    ys has shape (n_vec, 2n_r); returns (n_vec, 2n_t).
    """
    h_real = np.asarray(h_real, dtype=float)
    load = 0.0 if sigma_n is None else sigma_n**2 / rail_symbol_energy(config)
    rhs = h_real.T @ np.asarray(ys, dtype=float).T
    return _gram_solve(h_real, rhs, diag_load=load).T


ML_GUARD = 10**6


def candidate_matrix(config):
    """All M^n_t transmit vectors as real columns, lex order by symbol index.

    Cached per (n_t, modulation) since enumeration is the expensive part.
    """
    key = (config.n_t, config.modulation)
    cached = _CANDIDATE_CACHE.get(key)
    if cached is not None:
        return cached
    points, _ = mimo.constellation_points(config)
    m = len(points)
    if m**config.n_t > ML_GUARD:
        raise ValueError(
            f"exhaustive search space {m}^{config.n_t} exceeds guard {ML_GUARD}"
        )
    combos = np.array(list(itertools.product(points, repeat=config.n_t)))
    x_real = np.concatenate([combos.real, combos.imag], axis=1).T  # (2n_t, M^n_t)
    _CANDIDATE_CACHE[key] = x_real
    return x_real


_CANDIDATE_CACHE = {}


def ml_detect_exhaustive(h_real, y, config):
    """Exact argmin of ||y - Hx||^2 over the full constellation product set.

    Ties go to the lexicographically smaller symbol-index tuple (argmin keeps
    the first minimum and candidates are enumerated in that order).
    """
    x_cands = candidate_matrix(config)
    resid = np.asarray(y, dtype=float)[:, None] - np.asarray(h_real, float) @ x_cands
    metrics = np.sum(resid * resid, axis=0)
    best = int(np.argmin(metrics))
    return DetectorOutput(x_hat_real=x_cands[:, best].copy(), node_count=x_cands.shape[1])


def ml_detect_batch(h_real, ys, config):
    """Exhaustive ML for many received vectors sharing one channel."""
    x_cands = candidate_matrix(config)
    images = np.asarray(h_real, float) @ x_cands  # (2n_r, n_cand)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    # ||y - Hx||^2 expanded; the ||y||^2 term is constant per row
    metrics = np.sum(images * images, axis=0)[None, :] - 2.0 * ys @ images
    best = np.argmin(metrics, axis=1)
    return x_cands[:, best].T.copy()


def sphere_decode(h_real, y, config):
    """Depth-first sphere decoder with Schnorr-Euchner enumeration.

    Returns the same decision as :func:`ml_detect_exhaustive` together with
    the number of tree nodes visited.
    """
    h_real = np.asarray(h_real, dtype=float)
    y = np.asarray(y, dtype=float)
    n_rails = h_real.shape[1]
    q, r = np.linalg.qr(h_real)
    diag = np.abs(np.diag(r))
    if np.any(diag < 1e-12 * diag.max()):
        raise RankDeficientChannel("QR exposed a numerically zero pivot")
    y_red = q.T @ y
    alphabets = mimo.rail_alphabets(config)

    best_x = np.zeros(n_rails)
    best_metric = np.inf
    x_work = np.zeros(n_rails)
    node_count = 0

    def descend(level, partial):
        nonlocal best_metric, node_count
        if level < 0:
            if partial < best_metric:
                best_metric = partial
                best_x[:] = x_work
            return
        # interference-cancelled target for this rail
        upper = y_red[level] - r[level, level + 1:] @ x_work[level + 1:]
        alpha = alphabets[level]
        # Schnorr-Euchner: try candidates closest to the unconstrained
        # solution first so the radius shrinks as early as possible
        order = np.argsort(np.abs(alpha - upper / r[level, level]))
        for j in order:
            inc = (upper - r[level, level] * alpha[j]) ** 2
            metric = partial + inc
            node_count += 1
            if metric >= best_metric:
                # children along SE order only get worse; prune the rest
                break
            x_work[level] = alpha[j]
            descend(level - 1, metric)

    descend(n_rails - 1, 0.0)
    return DetectorOutput(
        x_hat_real=best_x.copy(),
        node_count=node_count,
    )
