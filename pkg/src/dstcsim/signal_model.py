"""Chip-rate signal model for the two-hop cooperative DS-CDMA uplink.

Conventions used throughout the package:

* ``K`` users, ``L`` relays, processing gain ``N`` chips per symbol.
* Spreading codes are stored as a ``(K, N)`` real array with chips in
  ``{+1/sqrt(N), -1/sqrt(N)}``, so every code has unit squared norm.
* A fading coefficient is a single complex scalar per link.  Fading is flat
  and block-constant over one selection event: a fresh
  :class:`ChannelRealization` is drawn per two-slot epoch, which is what
  lets buffered relays wait for favorable second-hop conditions.
* The effective signature of user ``k`` on a link is
  ``amplitude * code_k * fading``, a length-``N`` complex vector.  Per-relay
  signature matrices are ``(N, K)`` with one column per user, and the
  per-hop collections are ``(L, N, K)`` arrays indexed by relay.
* Noise is zero-mean circularly-symmetric complex Gaussian with total
  variance ``sigma2`` (``sigma2 / 2`` per real component), drawn fresh for
  every slot.

All randomness flows through an explicit ``numpy.random.Generator``; every
function here is a pure function of its inputs and that generator's state.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelRealization",
    "generate_spreading_codes",
    "draw_channels",
    "complex_noise",
    "signature_matrix",
    "source_relay_signatures",
    "relay_dest_signatures",
    "receive_source_relay",
    "receive_relay_dest",
]


@dataclass(frozen=True)
class ChannelRealization:
    """Fading coefficients for both hops of one packet.

    ``source_relay[k, l]`` is the coefficient from user ``k`` to relay ``l``;
    ``relay_dest[l, k]`` is the coefficient from relay ``l`` to the
    destination for user ``k``.  Per user and per hop the coefficients are
    normalized so the squared magnitudes over all relays sum to one.
    """

    source_relay: np.ndarray
    relay_dest: np.ndarray

    @property
    def n_users(self) -> int:
        return self.source_relay.shape[0]

    @property
    def n_relays(self) -> int:
        return self.source_relay.shape[1]


def generate_spreading_codes(n_users: int, gain: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_users`` random binary spreading codes of length ``gain``.

    Chips are independent equiprobable ``+-1/sqrt(gain)`` so each code has
    unit squared norm.  Returns a ``(n_users, gain)`` float array.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if gain < 1:
        raise ValueError(f"gain must be >= 1, got {gain}")
    chips = rng.integers(0, 2, size=(n_users, gain)).astype(np.float64)
    return (2.0 * chips - 1.0) / np.sqrt(gain)


def draw_channels(n_users: int, n_relays: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw one flat-fading realization for both hops.

    Each coefficient has amplitude uniform in ``(0, 1]`` and phase uniform
    in ``[0, 2*pi)``; afterwards each user's coefficients on each hop are
    scaled so their total power is exactly one.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if n_relays < 1:
        raise ValueError(f"n_relays must be >= 1, got {n_relays}")

    def _draw(shape, axis):
        amp = 1.0 - rng.random(shape)
        phase = 2.0 * np.pi * rng.random(shape)
        h = amp * np.exp(1j * phase)
        power = np.sum(np.abs(h) ** 2, axis=axis, keepdims=True)
        return h / np.sqrt(power)

    source_relay = _draw((n_users, n_relays), axis=1)
    relay_dest = _draw((n_relays, n_users), axis=0)
    return ChannelRealization(source_relay=source_relay, relay_dest=relay_dest)


def complex_noise(rng: np.random.Generator, sigma2: float, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance ``sigma2``."""
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    if sigma2 == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def signature_matrix(codes: np.ndarray, fading: np.ndarray, amplitudes=None) -> np.ndarray:
    """Effective signature matrix for one link endpoint.

    ``codes`` is ``(K, N)``, ``fading`` a length-``K`` complex vector; the
    result is ``(N, K)`` with column ``k`` equal to
    ``amplitude_k * code_k * fading_k``.  Amplitudes default to one (equal
    power allocation; the unit-power channel normalization already keeps the
    total received power comparable across schemes).
    """
    sig = codes.T.astype(np.complex128) * np.asarray(fading)[np.newaxis, :]
    if amplitudes is not None:
        sig = sig * np.asarray(amplitudes)[np.newaxis, :]
    return np.ascontiguousarray(sig)


def source_relay_signatures(codes: np.ndarray, channels: ChannelRealization) -> np.ndarray:
    """Per-relay effective signature matrices for the first hop, ``(L, N, K)``."""
    n_relays = channels.n_relays
    return np.stack(
        [signature_matrix(codes, channels.source_relay[:, l]) for l in range(n_relays)]
    )


def relay_dest_signatures(codes: np.ndarray, channels: ChannelRealization) -> np.ndarray:
    """Per-relay effective signature matrices for the second hop, ``(L, N, K)``."""
    n_relays = channels.n_relays
    return np.stack(
        [signature_matrix(codes, channels.relay_dest[l, :]) for l in range(n_relays)]
    )


def _check_bpsk(symbols: np.ndarray) -> np.ndarray:
    symbols = np.asarray(symbols)
    if not np.all(np.abs(symbols) == 1):
        raise ValueError("symbols must be +-1 BPSK values")
    return symbols


def receive_source_relay(
    signatures: np.ndarray,
    relay: int,
    symbols: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Chip-rate signal observed at one relay over a two-slot epoch.

    ``signatures`` is the ``(L, N, K)`` first-hop collection, ``symbols`` a
    ``(K, 2)`` array of BPSK values (one column per slot).  Returns the
    ``(N, 2)`` received matrix: each slot is the superposition of all users'
    effective signatures weighted by that slot's symbols, plus fresh noise.
    """
    n_relays = signatures.shape[0]
    if not 0 <= relay < n_relays:
        raise ValueError(f"relay index {relay} out of range [0, {n_relays})")
    symbols = _check_bpsk(symbols)
    sig = signatures[relay]
    noise = complex_noise(rng, sigma2, (sig.shape[0], symbols.shape[1]))
    return sig @ symbols.astype(np.float64) + noise


def receive_relay_dest(
    signatures: np.ndarray,
    pair: tuple[int, int],
    encoded: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Chip-rate signal at the destination for one space-time coded epoch.

    ``pair = (p, q)`` names the two transmitting relays and ``encoded`` is
    ``(K, 2)``: column 0 holds relay ``p``'s first-slot symbol and column 1
    relay ``q``'s second-slot symbol, per user.  Slot 1 carries the symbols
    directly; slot 2 carries the conjugate pair swapped across relays with
    the sign flip of the orthogonal design:

        y1 = sum_k h_p,k * v1_k + h_q,k * v2_k + n1
        y2 = sum_k h_q,k * conj(v1_k) - h_p,k * conj(v2_k) + n2

    Returns the ``(N, 2)`` received matrix ``[y1, y2]``.
    """
    p, q = pair
    if p == q:
        raise ValueError(f"relay pair must be distinct, got ({p}, {q})")
    n_relays = signatures.shape[0]
    if not (0 <= p < n_relays and 0 <= q < n_relays):
        raise ValueError(f"pair ({p}, {q}) out of range [0, {n_relays})")
    encoded = np.asarray(encoded)
    v1 = encoded[:, 0]
    v2 = encoded[:, 1]
    sig_p = signatures[p]
    sig_q = signatures[q]
    noise = complex_noise(rng, sigma2, (sig_p.shape[0], 2))
    y1 = sig_p @ v1 + sig_q @ v2 + noise[:, 0]
    y2 = sig_q @ np.conj(v1) - sig_p @ np.conj(v2) + noise[:, 1]
    return np.column_stack([y1, y2])
