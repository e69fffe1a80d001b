"""SINR evaluation of candidate relay pairs and link-selection policies.

Both hops share one pair-SINR formula.  For a candidate pair ``(m, n)`` the
numerator collects every user's filtered signal power on the two member
links, and the denominator collects the corresponding power on all other
relays' links plus the filtered noise power:

    num = sum_k  rho[m,k] * |w[m,k]|^2 + rho[n,k] * |w[n,k]|^2
    den = sum_k (sum_{l not in {m,n}} rho[l,k] * |w[l,k]|^2
                 + sigma2 * (|w[m,k]|^2 + |w[n,k]|^2))

where ``rho[l,k] = h[l,k]^H h[l,k]`` is the link correlation scalar.  The
formula is evaluated verbatim, summing all users' powers in the numerator.

Exhaustive selection scores every pair on both hops; greedy selection first
fixes the relay with the best single-link quality and only scores the pairs
containing it.  Ties are broken by the lowest (hop, m, n) triple so every
policy is deterministic.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "HOP_SOURCE_RELAY",
    "HOP_RELAY_DEST",
    "SinrEntry",
    "SinrTable",
    "OperationCounter",
    "ComplexityCounts",
    "pair_sinr",
    "pair_eval_cost",
    "link_quality_cost",
    "sinr_source_relay_pair",
    "sinr_relay_dest_pair",
    "build_table",
    "greedy_table",
    "select_best",
    "select_greedy",
    "single_link_qualities",
    "count_complexity",
    "fixed_pairs",
]

HOP_SOURCE_RELAY = 0
HOP_RELAY_DEST = 1


class SinrEntry(NamedTuple):
    """One candidate link: a hop, a relay pair ``m < n`` and its SINR."""

    hop: int
    pair: tuple[int, int]
    sinr: float

    def sort_key(self):
        # Descending SINR, then lowest (hop, m, n) wins ties.
        return (-self.sinr, self.hop, self.pair)


@dataclass
class OperationCounter:
    """Running tally of the selection arithmetic.

    One complex multiplication or addition counts as one operation;
    ``pair_evals`` counts full pair-SINR evaluations.
    """

    mults: int = 0
    adds: int = 0
    pair_evals: int = 0

    def merge(self, other: "OperationCounter") -> None:
        self.mults += other.mults
        self.adds += other.adds
        self.pair_evals += other.pair_evals


@dataclass
class SinrTable:
    """All evaluated candidate links for one channel realization."""

    entries: list[SinrEntry] = field(default_factory=list)

    def sorted_entries(self) -> list[SinrEntry]:
        return sorted(self.entries, key=SinrEntry.sort_key)


class ComplexityCounts(NamedTuple):
    exhaustive_mults: int
    exhaustive_adds: int
    greedy_mults: int
    greedy_adds: int


def pair_eval_cost(n_users: int, gain: int, n_relays: int) -> tuple[int, int]:
    """(multiplications, additions) of one pair-SINR evaluation.

    Per user and relay the formula needs two inner products (``gain``
    multiplications and ``gain - 1`` additions each) plus the product of the
    two scalars; the noise terms add one multiplication per member link and
    the sums contribute the remaining additions.
    """
    k, n, l = n_users, gain, n_relays
    mults = l * k * (2 * n + 1) + 2 * k
    adds = l * k * (2 * n - 2) + 4 * k + (l - 2) * k
    return mults, adds


def link_quality_cost(n_users: int, gain: int) -> tuple[int, int]:
    """(multiplications, additions) of one relay's single-link quality."""
    k, n = n_users, gain
    return k * (2 * n + 1), k * (2 * n - 2) + (k - 1)


def _link_power_terms(signatures, filters, relay):
    """Per-user ``(rho * |w|^2, |w|^2)`` scalars for one relay's links."""
    sig = signatures[relay]
    fil = filters[relay]
    rho = np.einsum("nk,nk->k", sig.conj(), sig).real
    wnorm = np.einsum("nk,nk->k", fil.conj(), fil).real
    return rho * wnorm, wnorm


def pair_sinr(signatures, filters, pair, sigma2, counter: Optional[OperationCounter] = None) -> float:
    """SINR of the combined two-relay path for one hop.

    ``signatures`` and ``filters`` are ``(L, N, K)`` collections for the hop
    being scored; ``pair`` is ``(m, n)`` with distinct relay indices.
    """
    m, n = pair
    n_relays = signatures.shape[0]
    if m == n:
        raise ValueError(f"relay pair must be distinct, got ({m}, {n})")
    if not (0 <= m < n_relays and 0 <= n < n_relays):
        raise ValueError(f"pair ({m}, {n}) out of range [0, {n_relays})")

    num = 0.0
    den = 0.0
    for relay in (m, n):
        power, wnorm = _link_power_terms(signatures, filters, relay)
        num += float(np.sum(power))
        den += sigma2 * float(np.sum(wnorm))
    for relay in range(n_relays):
        if relay == m or relay == n:
            continue
        power, _ = _link_power_terms(signatures, filters, relay)
        den += float(np.sum(power))
    if counter is not None:
        mults, adds = pair_eval_cost(signatures.shape[2], signatures.shape[1], n_relays)
        counter.mults += mults
        counter.adds += adds
        counter.pair_evals += 1

    if den == 0.0:
        raise ZeroDivisionError(
            "degenerate configuration: no interference and no noise on this hop"
        )
    return num / den


def sinr_source_relay_pair(filters, signatures, pair, sigma2, counter=None) -> float:
    """First-hop pair SINR (filters are the relay-side detectors)."""
    return pair_sinr(signatures, filters, pair, sigma2, counter)


def sinr_relay_dest_pair(filters, signatures, pair, sigma2, counter=None) -> float:
    """Second-hop pair SINR (filters are the per-link destination detectors)."""
    return pair_sinr(signatures, filters, pair, sigma2, counter)


def build_table(
    sr_signatures,
    sr_filters,
    rd_signatures,
    rd_filters,
    sigma2,
    counter: Optional[OperationCounter] = None,
) -> SinrTable:
    """Score every relay pair on both hops: ``L * (L - 1)`` evaluations."""
    n_relays = sr_signatures.shape[0]
    if n_relays < 2:
        raise ValueError(f"need at least 2 relays to form a pair, got {n_relays}")
    entries = []
    for m, n in combinations(range(n_relays), 2):
        entries.append(
            SinrEntry(HOP_SOURCE_RELAY, (m, n), pair_sinr(sr_signatures, sr_filters, (m, n), sigma2, counter))
        )
        entries.append(
            SinrEntry(HOP_RELAY_DEST, (m, n), pair_sinr(rd_signatures, rd_filters, (m, n), sigma2, counter))
        )
    return SinrTable(entries=entries)


def single_link_qualities(signatures, filters, counter: Optional[OperationCounter] = None) -> np.ndarray:
    """Per-relay single-link quality: the pair-SINR numerator terms only."""
    n_relays = signatures.shape[0]
    out = np.empty(n_relays)
    for relay in range(n_relays):
        power, _ = _link_power_terms(signatures, filters, relay)
        out[relay] = float(np.sum(power))
        if counter is not None:
            mults, adds = link_quality_cost(signatures.shape[2], signatures.shape[1])
            counter.mults += mults
            counter.adds += adds
    return out


def greedy_table(
    sr_signatures,
    sr_filters,
    rd_signatures,
    rd_filters,
    sigma2,
    counter: Optional[OperationCounter] = None,
) -> SinrTable:
    """Reduced candidate table of the two-stage greedy search.

    Stage 1 ranks each relay by its best single-link quality across the two
    hops and fixes the winner; stage 2 scores only the ``L - 1`` pairs that
    contain it, on both hops, so at most ``2 * (L - 1)`` pair evaluations
    are performed.
    """
    n_relays = sr_signatures.shape[0]
    if n_relays < 2:
        raise ValueError(f"need at least 2 relays to form a pair, got {n_relays}")
    quality = np.maximum(
        single_link_qualities(sr_signatures, sr_filters, counter),
        single_link_qualities(rd_signatures, rd_filters, counter),
    )
    best_relay = int(np.argmax(quality))

    entries = []
    for other in range(n_relays):
        if other == best_relay:
            continue
        pair = (min(best_relay, other), max(best_relay, other))
        entries.append(
            SinrEntry(HOP_SOURCE_RELAY, pair, pair_sinr(sr_signatures, sr_filters, pair, sigma2, counter))
        )
        entries.append(
            SinrEntry(HOP_RELAY_DEST, pair, pair_sinr(rd_signatures, rd_filters, pair, sigma2, counter))
        )
    return SinrTable(entries=entries)


def select_best(table: SinrTable, feasible: Callable[[SinrEntry], bool]) -> Optional[SinrEntry]:
    """Highest-SINR feasible entry, walking the sorted order.

    Infeasible entries are skipped one by one (the iterated second-best
    rule); ``None`` means every candidate is infeasible and the epoch idles.
    """
    for entry in table.sorted_entries():
        if feasible(entry):
            return entry
    return None


def select_greedy(
    sr_signatures,
    sr_filters,
    rd_signatures,
    rd_filters,
    sigma2,
    feasible: Callable[[SinrEntry], bool],
    counter: Optional[OperationCounter] = None,
) -> Optional[SinrEntry]:
    """Feasibility-aware argmax over the greedy candidate table."""
    table = greedy_table(sr_signatures, sr_filters, rd_signatures, rd_filters, sigma2, counter)
    return select_best(table, feasible)


def count_complexity(n_users: int, gain: int, n_relays: int) -> ComplexityCounts:
    """Closed-form operation counts of the two selection searches.

    Exhaustive search over all pairs costs ``7KNL^3 - 7KNL^2``
    multiplications and ``2KNL^3 - 2KNL^2 + KL^3 - KL^2 - 2L^2 + 2L``
    additions; the greedy search stays below ``21KNL^2 - 7KNL``
    multiplications and ``6KNL^2 + 3KL^2 - 3KL - L + 1`` additions.
    """
    if n_users < 1 or gain < 1 or n_relays < 1:
        raise ValueError("n_users, gain and n_relays must all be >= 1")
    k, n, l = n_users, gain, n_relays
    return ComplexityCounts(
        exhaustive_mults=7 * k * n * l**3 - 7 * k * n * l**2,
        exhaustive_adds=2 * k * n * l**3 - 2 * k * n * l**2 + k * l**3 - k * l**2 - 2 * l**2 + 2 * l,
        greedy_mults=21 * k * n * l**2 - 7 * k * n * l,
        greedy_adds=6 * k * n * l**2 + 3 * k * l**2 - 3 * k * l - l + 1,
    )


def fixed_pairs(n_relays: int) -> list[tuple[int, int]]:
    """Static pairing of consecutive relays: (0,1), (2,3), ..."""
    if n_relays % 2 != 0:
        raise ValueError(f"fixed pairing needs an even relay count, got {n_relays}")
    return [(l, l + 1) for l in range(0, n_relays, 2)]
