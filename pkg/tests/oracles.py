"""Independent reference evaluators used to cross-check the main code paths.

Everything here is deliberately written with explicit scalar loops (or
closed forms) and never imports from the package's computational internals,
so agreement with the library is a genuine two-route check.
"""

import math

import numpy as np


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def bpsk_awgn_ber(snr_linear: float) -> float:
    """Analytic BPSK bit error rate over AWGN at the given linear SNR."""
    return q_function(math.sqrt(2.0 * snr_linear))


def naive_pair_sinr(signatures, filters, pair, sigma2):
    """Term-by-term evaluation of the two-relay pair SINR.

    ``signatures``/``filters`` are ``(L, N, K)``; all inner products are
    accumulated with explicit Python loops.
    """
    n_relays, gain, n_users = signatures.shape
    m, n = pair

    def dot(a, b):
        acc = 0j
        for i in range(gain):
            acc += np.conj(a[i]) * b[i]
        return acc

    num = 0.0
    den = 0.0
    for k in range(n_users):
        for relay in (m, n):
            h = signatures[relay, :, k]
            w = filters[relay, :, k]
            rho = dot(h, h).real
            wn = dot(w, w).real
            num += rho * wn
            den += sigma2 * wn
        for relay in range(n_relays):
            if relay in (m, n):
                continue
            h = signatures[relay, :, k]
            w = filters[relay, :, k]
            den += dot(h, h).real * dot(w, w).real
    return num / den


def mmse_single_user(signature, sigma2):
    """Closed-form single-user MMSE weights h / (|h|^2 + sigma2)."""
    energy = float(np.vdot(signature, signature).real)
    return signature / (energy + sigma2)


def mmse_direct_inverse(signatures, target, sigma2):
    """MMSE weights via an explicitly built covariance and numpy's inverse."""
    gain = signatures.shape[0]
    cov = sigma2 * np.eye(gain, dtype=complex)
    for k in range(signatures.shape[1]):
        h = signatures[:, k]
        cov += np.outer(h, np.conj(h))
    return np.linalg.inv(cov) @ signatures[:, target]


def stacked_block_product(h_m, h_n, b1, b2):
    """Direct multiplication of the tall block channel matrix by a symbol pair."""
    gain = h_m.shape[0]
    out = np.empty(2 * gain, dtype=complex)
    for i in range(gain):
        out[i] = h_m[i] * b1 + h_n[i] * b2
        out[gain + i] = np.conj(h_n[i]) * b1 - np.conj(h_m[i]) * b2
    return out


def binomial_sigma(p: float, n: int) -> float:
    """Standard deviation of an empirical rate estimate."""
    p = min(max(p, 1.0 / max(n, 1)), 1.0 - 1.0 / max(n, 1))
    return math.sqrt(p * (1.0 - p) / n)
