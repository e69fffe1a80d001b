"""Alamouti encoding at a relay pair and block detection at the destination.

A transmitting pair ``(p, q)`` emits, per user, the orthogonal 2x2 design

    B = | v1   -conj(v2) |
        | v2    conj(v1) |

where ``v1`` is relay ``p``'s first-slot symbol and ``v2`` relay ``q``'s
second-slot symbol (rows are antennas, columns are slots).  Stacking the two
received slots with the second slot conjugated turns the epoch into a single
linear system ``y_stacked = H @ [v1, v2] + noise`` with the tall block matrix

    H = |      h_p        h_q  |
        | conj(h_q) -conj(h_p) |

whose columns are orthogonal, so a matched filter decouples the two symbols
exactly.
"""

import numpy as np

__all__ = [
    "alamouti_encode",
    "effective_matrix",
    "stack_received",
    "destination_filters",
    "alamouti_detect",
]


def alamouti_encode(b1, b2) -> np.ndarray:
    """Per-user 2x2 transmit block for a BPSK symbol pair."""
    if b1 not in (-1, 1) or b2 not in (-1, 1):
        raise ValueError(f"symbols must be +-1 BPSK values, got ({b1}, {b2})")
    return np.array(
        [[b1, -np.conj(b2)], [b2, np.conj(b1)]],
        dtype=np.complex128,
    )


def effective_matrix(h_m: np.ndarray, h_n: np.ndarray) -> np.ndarray:
    """Stacked ``(2N, 2)`` block channel matrix for one user and one pair."""
    h_m = np.asarray(h_m, dtype=np.complex128)
    h_n = np.asarray(h_n, dtype=np.complex128)
    if h_m.shape != h_n.shape or h_m.ndim != 1:
        raise ValueError(f"signatures must be equal-length vectors, got {h_m.shape} and {h_n.shape}")
    top = np.column_stack([h_m, h_n])
    bottom = np.column_stack([np.conj(h_n), -np.conj(h_m)])
    return np.vstack([top, bottom])


def stack_received(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Two received slots stacked into the length-``2N`` detection vector.

    The second slot is conjugated so the block channel matrix of
    :func:`effective_matrix` applies to the symbol pair directly.
    """
    return np.concatenate([np.asarray(y1), np.conj(np.asarray(y2))])


def destination_filters(matrices, kind: str, sigma2: float) -> np.ndarray:
    """Filter bank ``(2N, 2K)`` for block detection of all users.

    ``matrices`` is a sequence of ``K`` stacked ``(2N, 2)`` channel matrices.
    RAKE returns their columns unchanged (matched-filter combining); MMSE
    solves ``(sum_k H_k H_k^H + sigma2 * I) W = [H_1 ... H_K]``.  Column
    ``2k + s`` of the result detects slot ``s`` of user ``k``.
    """
    stacked = np.hstack([np.asarray(h, dtype=np.complex128) for h in matrices])
    if kind == "rake":
        return stacked.copy()
    if kind == "mmse":
        if sigma2 <= 0:
            raise ValueError(f"sigma2 must be > 0 for the MMSE filter, got {sigma2}")
        n2 = stacked.shape[0]
        cov = stacked @ stacked.conj().T + sigma2 * np.eye(n2)
        return np.linalg.solve(cov, stacked)
    raise ValueError(f"unknown detector kind {kind!r}")


def alamouti_detect(
    y_stacked: np.ndarray,
    target: np.ndarray,
    kind: str,
    all_matrices,
    sigma2: float,
) -> np.ndarray:
    """Two soft symbol estimates for one user from the stacked epoch vector.

    RAKE combining computes ``target^H y`` and relies on the orthogonality
    of the block matrix columns; MMSE builds the joint covariance from every
    user's stacked columns before filtering.  The outputs feed the slicer.
    """
    y_stacked = np.asarray(y_stacked)
    target = np.asarray(target)
    if target.shape[0] != y_stacked.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix has {target.shape[0]} rows, vector {y_stacked.shape[0]}"
        )
    if kind == "rake":
        return target.conj().T @ y_stacked
    if kind == "mmse":
        bank = destination_filters(all_matrices, "mmse", sigma2)
        index = next(
            i for i, h in enumerate(all_matrices) if h is target or np.array_equal(h, target)
        )
        weights = bank[:, 2 * index : 2 * index + 2]
        return weights.conj().T @ y_stacked
    raise ValueError(f"unknown detector kind {kind!r}")
