"""Linear receive filters (RAKE and MMSE) and the BPSK slicer."""

import numpy as np

__all__ = [
    "rake_filter",
    "mmse_filter",
    "mmse_filters",
    "build_filters",
    "detect",
    "slice_bpsk",
]


def rake_filter(signature: np.ndarray) -> np.ndarray:
    """Matched-filter weights: a copy of the target effective signature."""
    signature = np.asarray(signature, dtype=np.complex128)
    if not np.all(np.isfinite(signature)):
        raise ValueError("signature must be finite")
    return signature.copy()


def mmse_filters(signatures: np.ndarray, sigma2: float) -> np.ndarray:
    """Linear MMSE weights for every user sharing one receive point.

    ``signatures`` is ``(N, K)`` with one column per user.  Solves
    ``(sum_k h_k h_k^H + sigma2 * I) w_k = h_k`` for all columns at once.
    ``sigma2`` must be strictly positive so the covariance is invertible.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0 for the MMSE filter, got {sigma2}")
    signatures = np.asarray(signatures, dtype=np.complex128)
    n = signatures.shape[0]
    cov = signatures @ signatures.conj().T + sigma2 * np.eye(n)
    return np.linalg.solve(cov, signatures)


def mmse_filter(signatures: np.ndarray, target: int, sigma2: float) -> np.ndarray:
    """MMSE weights for one user out of the ``(N, K)`` signature matrix."""
    return mmse_filters(signatures, sigma2)[:, target].copy()


def build_filters(signatures: np.ndarray, kind: str, sigma2: float) -> np.ndarray:
    """Receive filter bank ``(N, K)`` for one receive point.

    ``kind`` is ``"rake"`` (weights equal the signatures) or ``"mmse"``.
    """
    if kind == "rake":
        return rake_filter(signatures)
    if kind == "mmse":
        return mmse_filters(signatures, sigma2)
    raise ValueError(f"unknown detector kind {kind!r}")


def detect(weights: np.ndarray, received: np.ndarray) -> complex:
    """Filter output ``w^H y``."""
    weights = np.asarray(weights)
    received = np.asarray(received)
    if weights.shape != received.shape:
        raise ValueError(f"shape mismatch: weights {weights.shape} vs received {received.shape}")
    return complex(np.vdot(weights, received))


def slice_bpsk(soft):
    """Hard BPSK decision: +1 when the real part is >= 0, else -1.

    The tie at exactly zero maps to +1, a deterministic choice for an event
    of measure zero under continuous noise.  Works elementwise on arrays.
    """
    soft = np.asarray(soft)
    if not np.all(np.isfinite(soft)):
        raise ValueError("soft value must be finite")
    out = np.where(np.real(soft) >= 0.0, 1, -1).astype(np.int8)
    if out.ndim == 0:
        return int(out)
    return out
