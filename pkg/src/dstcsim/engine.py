"""Vectorized per-trial channel and link-statistics engine.

One trial simulates a packet over independently redrawn epoch channels, so
the per-epoch link statistics (correlations, filter norms, candidate-pair
SINRs, sorted candidate orders) are computed for whole batches of epochs at
once instead of epoch by epoch.  Everything here is an exact reformulation
of the reference operations:

* The spreading codes enter every covariance only through the fixed Gram
  matrix ``G = S^T S``, so the MMSE weights for one receive point reduce to
  the identity ``w_k = h_k / sigma2 * S (e_k - (sigma2 D^-1 + G)^-1 g_k)``
  with ``D`` the diagonal of link powers; that turns the per-epoch filter
  statistics into batched K x K solves.
* The pair-SINR numerator and denominator are linear in the per-link scalar
  products, so a whole epoch batch is a handful of array reductions.

The protocol layer pulls per-epoch rows out of this engine; arrays grow in
chunks because a trial's epoch count is only bounded by its cutoff.
"""

from itertools import combinations

import numpy as np

from .selection import HOP_RELAY_DEST, HOP_SOURCE_RELAY

__all__ = ["draw_coefficient_batch", "woodbury_link_stats", "TrialEngine"]


def draw_coefficient_batch(rng, count, n_relays, n_users):
    """``(count, L, K)`` fading coefficients, unit total power per user.

    Amplitudes are uniform in ``(0, 1]``, phases uniform in ``[0, 2*pi)``,
    then each user's coefficients are normalized across the relay axis.
    """
    shape = (count, n_relays, n_users)
    amp = 1.0 - rng.random(shape)
    phase = 2.0 * np.pi * rng.random(shape)
    coeff = amp * np.exp(1j * phase)
    power = np.sum(amp * amp, axis=1, keepdims=True)
    return coeff / np.sqrt(power)


def woodbury_link_stats(powers, gram, sigma2):
    """Squared MMSE filter norms and combining matrices for batched links.

    ``powers[..., k]`` holds the link power of user ``k`` at one receive
    point and ``gram`` is the code Gram matrix.  Returns ``(nu, C)`` where
    ``nu[..., k] = |w_k|^2`` and ``C[..., :, k]`` is the real combining
    vector ``c_k`` with ``w_k = h_k / sigma2 * S c_k``.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0 for MMSE statistics, got {sigma2}")
    k = gram.shape[0]
    a = np.broadcast_to(gram, powers.shape + (k,)).copy()
    idx = np.arange(k)
    a[..., idx, idx] += sigma2 / powers
    solved = np.linalg.solve(a, np.broadcast_to(gram, a.shape))
    c = np.eye(k) - solved
    quad = np.einsum("...ik,ij,...jk->...k", c, gram, c)
    nu = powers * quad / (sigma2 * sigma2)
    return nu, c


def _stacked_bank(stacked, kind, sigma2):
    if kind == "rake":
        return stacked
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0 for the MMSE filter, got {sigma2}")
    rows = stacked.shape[0]
    cov = stacked @ stacked.conj().T + sigma2 * np.eye(rows)
    return np.linalg.solve(cov, stacked)


class TrialEngine:
    """Batched link statistics for one trial's sequence of realizations.

    ``selection`` picks which candidate orders are materialized:
    ``"exhaustive"`` (all pairs, both hops), ``"greedy"`` (pairs containing
    the per-epoch best relay), ``"fixed-pairs"`` (the static pairing),
    ``"rd-exhaustive"``/``"rd-greedy"`` (second hop only, for the
    non-buffered schemes) or ``None``.
    """

    def __init__(
        self,
        rng,
        codes,
        n_relays,
        sigma2,
        detector_relay,
        detector_dest,
        selection,
        track_min_power=False,
        chunk=512,
    ):
        self.rng = rng
        self.codes = codes
        self.n_users = codes.shape[0]
        self.gain = codes.shape[1]
        self.n_relays = n_relays
        self.sigma2 = sigma2
        self.detector_relay = detector_relay
        self.detector_dest = detector_dest
        self.selection = selection
        self.track_min_power = track_min_power
        self.chunk = chunk
        if sigma2 == 0.0 and "mmse" in (detector_relay, detector_dest):
            raise ValueError("MMSE detection needs sigma2 > 0")
        self._noise_scale = np.sqrt(sigma2 / 2.0) if sigma2 > 0 else 0.0
        self._zero_noise = np.zeros((2, self.gain, 2), dtype=np.complex128)

        self.code_matrix = np.ascontiguousarray(codes.T)  # (N, K)
        self.gram = codes @ codes.T

        self.pairs = list(combinations(range(n_relays), 2))
        n_pairs = len(self.pairs)
        # Entry id layout: 2 * pair_index + hop.
        self.entry_hop = np.empty(2 * n_pairs, dtype=np.int64)
        self.entry_m = np.empty(2 * n_pairs, dtype=np.int64)
        self.entry_n = np.empty(2 * n_pairs, dtype=np.int64)
        for p, (m, n) in enumerate(self.pairs):
            for hop in (HOP_SOURCE_RELAY, HOP_RELAY_DEST):
                e = 2 * p + hop
                self.entry_hop[e] = hop
                self.entry_m[e] = m
                self.entry_n[e] = n
        self.entry_list = list(zip(self.entry_hop.tolist(), self.entry_m.tolist(), self.entry_n.tolist()))
        self.pair_m = np.array([m for m, _ in self.pairs])
        self.pair_n = np.array([n for _, n in self.pairs])
        if selection == "greedy":
            self.entries_by_relay = np.array(
                [
                    [2 * p + hop for p, (m, n) in enumerate(self.pairs) if r in (m, n) for hop in (0, 1)]
                    for r in range(n_relays)
                ],
                dtype=np.int64,
            )
        if selection == "fixed-pairs":
            fixed = [(l, l + 1) for l in range(0, n_relays, 2)]
            self.fixed_entry_ids = np.array(
                [2 * self.pairs.index(pair) + hop for pair in fixed for hop in (0, 1)],
                dtype=np.int64,
            )

        self.limit = 0
        self._blocks = []
        self._noise_limit = 0
        self._noise_blocks = []

    # -- batched construction ------------------------------------------------

    def ensure(self, index):
        while index >= self.limit:
            self._extend()

    def noise(self, epoch):
        """Two fresh ``(N, 2)`` noise matrices for one epoch's slots."""
        if self.sigma2 == 0.0:
            return self._zero_noise
        while epoch >= self._noise_limit:
            shape = (self.chunk, 2, self.gain, 2)
            self._noise_blocks.append(
                self._noise_scale
                * (self.rng.standard_normal(shape) + 1j * self.rng.standard_normal(shape))
            )
            self._noise_limit += self.chunk
        return self._noise_blocks[epoch // self.chunk][epoch % self.chunk]

    def _extend(self):
        count = self.chunk
        block = {}
        coeff_sr = draw_coefficient_batch(self.rng, count, self.n_relays, self.n_users)
        coeff_rd = draw_coefficient_batch(self.rng, count, self.n_relays, self.n_users)
        block["coeff_sr"] = coeff_sr
        block["coeff_rd"] = coeff_rd
        p_sr = np.abs(coeff_sr) ** 2
        p_rd = np.abs(coeff_rd) ** 2
        if self.track_min_power:
            block["min_power"] = np.minimum(p_sr.min(axis=(1, 2)), p_rd.min(axis=(1, 2)))

        if self.detector_relay == "mmse":
            nu_sr, c_sr = woodbury_link_stats(p_sr, self.gram, self.sigma2)
            block["c_sr"] = c_sr
        else:
            nu_sr = p_sr

        need_sr_stats = self.selection in ("exhaustive", "greedy", "fixed-pairs", "random")
        need_rd_stats = self.selection is not None
        if need_sr_stats:
            t_sr = p_sr * nu_sr
            block["q_sr"] = t_sr.sum(axis=2)
            block["sinr_sr"] = self._hop_sinr(t_sr, nu_sr)
        if need_rd_stats:
            if self.detector_dest == "mmse":
                nu_rd, _ = woodbury_link_stats(p_rd, self.gram, self.sigma2)
            else:
                nu_rd = p_rd
            t_rd = p_rd * nu_rd
            block["q_rd"] = t_rd.sum(axis=2)
            block["sinr_rd"] = self._hop_sinr(t_rd, nu_rd)

        if self.selection in ("exhaustive", "greedy", "fixed-pairs"):
            block["order"] = self._candidate_order(block).tolist()
        elif self.selection == "rd-exhaustive":
            block["rd_best"] = self._rd_argbest(block["sinr_rd"])
        elif self.selection == "rd-greedy":
            block["rd_top2"] = self._rd_top2(block["q_rd"])

        self._blocks.append(block)
        self.limit += count

    def _hop_sinr(self, t, nu):
        """Pair SINR array ``(count, n_pairs)`` for one hop."""
        tb = t.sum(axis=2)
        nb = nu.sum(axis=2)
        total = tb.sum(axis=1, keepdims=True)
        num = tb[:, self.pair_m] + tb[:, self.pair_n]
        den = total - num + self.sigma2 * (nb[:, self.pair_m] + nb[:, self.pair_n])
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = num / den
        if not np.all(np.isfinite(sinr)):
            raise ZeroDivisionError(
                "degenerate configuration: no interference and no noise on a hop"
            )
        return sinr

    def _interleave(self, sinr_sr, sinr_rd):
        count, n_pairs = sinr_sr.shape
        flat = np.empty((count, 2 * n_pairs))
        flat[:, 0::2] = sinr_sr
        flat[:, 1::2] = sinr_rd
        return flat

    def _lexorder(self, sinr, ids):
        """Entry ids sorted by descending SINR with (hop, m, n) tie-break."""
        count = sinr.shape[0]
        hop = np.broadcast_to(self.entry_hop[ids], sinr.shape)
        m = np.broadcast_to(self.entry_m[ids], sinr.shape)
        n = np.broadcast_to(self.entry_n[ids], sinr.shape)
        order = np.lexsort((n, m, hop, -sinr), axis=1)
        return np.broadcast_to(ids, sinr.shape)[np.arange(count)[:, None], order]

    def _candidate_order(self, block):
        flat = self._interleave(block["sinr_sr"], block["sinr_rd"])
        if self.selection == "exhaustive":
            ids = np.arange(flat.shape[1])
            return self._lexorder(flat, ids)
        if self.selection == "fixed-pairs":
            ids = self.fixed_entry_ids
            return self._lexorder(flat[:, ids], ids)
        # Greedy: the relay with the best single-link quality on either hop,
        # then only the pairs containing it.
        quality = np.maximum(block["q_sr"], block["q_rd"])
        best_relay = np.argmax(quality, axis=1)
        ids = self.entries_by_relay[best_relay]  # (count, 2 * (L - 1))
        sub = np.take_along_axis(flat, ids, axis=1)
        count = sub.shape[0]
        hop = self.entry_hop[ids]
        m = self.entry_m[ids]
        n = self.entry_n[ids]
        order = np.lexsort((n, m, hop, -sub), axis=1)
        return np.take_along_axis(ids, order, axis=1)

    def _rd_argbest(self, sinr_rd):
        keys = (
            np.broadcast_to(self.pair_n, sinr_rd.shape),
            np.broadcast_to(self.pair_m, sinr_rd.shape),
            -sinr_rd,
        )
        return np.lexsort(keys, axis=1)[:, 0]

    def _rd_top2(self, q_rd):
        order = np.argsort(-q_rd, axis=1, kind="stable")
        top2 = np.sort(order[:, :2], axis=1)
        return top2

    def _block(self, index):
        return self._blocks[index // self.chunk], index % self.chunk

    # -- per-realization accessors -------------------------------------------

    def candidate_order(self, index):
        block, i = self._block(index)
        return block["order"][i]

    def sinr_of(self, index, entry_id):
        block, i = self._block(index)
        pair_id, hop = divmod(int(entry_id), 2)
        key = "sinr_rd" if hop == HOP_RELAY_DEST else "sinr_sr"
        return float(block[key][i, pair_id])

    def rd_pair_sinr(self, index, pair_id):
        block, i = self._block(index)
        return float(block["sinr_rd"][i, pair_id])

    def rd_best_pair(self, index):
        block, i = self._block(index)
        pair_id = int(block["rd_best"][i])
        return pair_id, self.pairs[pair_id]

    def rd_top2_pair(self, index):
        block, i = self._block(index)
        m, n = (int(v) for v in block["rd_top2"][i])
        return (m, n)

    def min_power(self, index):
        block, i = self._block(index)
        return float(block["min_power"][i])

    def sr_coeff(self, index, relay):
        block, i = self._block(index)
        return block["coeff_sr"][i, relay]

    def rd_coeff(self, index, relay):
        block, i = self._block(index)
        return block["coeff_rd"][i, relay]

    def sr_combine(self, index, relay):
        """Code-space MMSE combining matrix for one relay's receive point."""
        block, i = self._block(index)
        return block["c_sr"][i, relay]

    def rd_signature_matrix(self, index, relay):
        """Materialized ``(N, K)`` second-hop signature matrix (slow path)."""
        block, i = self._block(index)
        return self.code_matrix * block["coeff_rd"][i, relay][np.newaxis, :]

    def dest_bank(self, first, second):
        """Stacked destination filter bank from the two role signature sets.

        ``first``/``second`` are the ``(N, K)`` signature matrices of the
        first- and second-slot transmit roles; columns ``2k`` and ``2k + 1``
        of the bank detect user ``k``'s two symbols.
        """
        n, k = first.shape
        stacked = np.empty((2 * n, 2 * k), dtype=np.complex128)
        stacked[:n, 0::2] = first
        stacked[:n, 1::2] = second
        stacked[n:, 0::2] = np.conj(second)
        stacked[n:, 1::2] = -np.conj(first)
        return _stacked_bank(stacked, self.detector_dest, self.sigma2)
