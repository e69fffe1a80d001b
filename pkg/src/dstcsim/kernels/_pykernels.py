"""Pure-numpy implementations of the per-epoch hot kernels.

All kernels work from the spreading-code matrix ``code`` (``N x K``, real,
unit-norm columns) and per-user fading rows, exploiting that an effective
signature is ``coeff_k * code[:, k]``.  Detection therefore reduces to the
code-space projection ``u = code.T @ y`` followed by a small per-user
combining step; positive scale factors that cannot change a hard decision
are omitted.  Noise is always passed in so both backends consume identical
random streams and produce identical decisions.
"""

import numpy as np


def rx_rake(code, coeff_m, coeff_n, symbols, noise):
    """Decode one two-slot epoch at both selected relays with matched filters.

    ``symbols`` is ``(K, 2)`` float BPSK, ``noise`` ``(2, N, 2)`` complex
    (one matrix per relay).  Returns ``(2, K, 2)`` int8 hard decisions.
    """
    k = symbols.shape[0]
    out = np.empty((2, k, 2), dtype=np.int8)
    for r, coeff in enumerate((coeff_m, coeff_n)):
        received = code @ (coeff[:, None] * symbols) + noise[r]
        projected = code.T @ received
        soft = np.conj(coeff)[:, None] * projected
        out[r] = np.where(soft.real >= 0.0, 1, -1)
    return out


def rx_mmse(code, coeff_m, coeff_n, combine_m, combine_n, symbols, noise):
    """Decode one two-slot epoch at both selected relays with MMSE filters.

    ``combine_m``/``combine_n`` are the real ``(K, K)`` code-space combining
    matrices whose column ``k`` maps the projection onto user ``k``'s MMSE
    statistic (``w_k = coeff_k / sigma2 * code @ c_k``).
    """
    k = symbols.shape[0]
    out = np.empty((2, k, 2), dtype=np.int8)
    for r, (coeff, combine) in enumerate(((coeff_m, combine_m), (coeff_n, combine_n))):
        received = code @ (coeff[:, None] * symbols) + noise[r]
        projected = code.T @ received
        soft = np.conj(coeff)[:, None] * (combine.T @ projected)
        out[r] = np.where(soft.real >= 0.0, 1, -1)
    return out


def tx_rake(code, coeff_m, coeff_n, symbols, noise):
    """One space-time coded epoch with matched-filter block combining.

    ``symbols`` is ``(K, 2)`` float BPSK: column 0 is relay ``m``'s
    first-slot symbol, column 1 relay ``n``'s second-slot symbol.  ``noise``
    is ``(N, 2)`` complex.  Returns ``(K, 2)`` int8 hard decisions.
    """
    v1 = symbols[:, 0]
    v2 = symbols[:, 1]
    y1 = code @ (coeff_m * v1 + coeff_n * v2) + noise[:, 0]
    y2 = code @ (coeff_n * v1 - coeff_m * v2) + noise[:, 1]
    u1 = code.T @ y1
    u2 = code.T @ np.conj(y2)
    z1 = np.conj(coeff_m) * u1 + coeff_n * u2
    z2 = np.conj(coeff_n) * u1 - coeff_m * u2
    soft = np.column_stack([z1, z2])
    return np.where(soft.real >= 0.0, 1, -1).astype(np.int8)
