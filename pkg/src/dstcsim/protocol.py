"""Two-phase epoch protocol and the Monte Carlo measurement harness.

An epoch is two consecutive symbol slots on one fresh channel realization.
In the buffered schemes every epoch starts from the candidate-link table:
the best feasible entry decides whether the system receives (source to the
selected relay pair, decode, store) or transmits (pop a co-stored block,
space-time encode, detect at the destination).  A first-hop entry is
feasible when the source still has blocks and both relay buffers can accept
one; a second-hop entry is feasible when the pair shares a stored block.
The non-buffered schemes alternate strictly inside one realization: a
reception epoch straight into a transmission epoch, with pair selection on
the second hop only, so every delivered block has a delay of exactly one
epoch.

Bit errors are always counted against the original source symbols, so relay
decision errors propagate to the destination tally exactly as a
decode-and-forward protocol experiences them.  One trial simulates one
packet; trials are statistically independent and derive their random
streams from ``(seed, sweep point, packet index)``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .buffers import BufferBlock, DynamicBufferPolicy, RelayBuffer, common_tag, pop_common, resize_snr
from .config import SimConfig
from .engine import TrialEngine
from .selection import (
    HOP_RELAY_DEST,
    HOP_SOURCE_RELAY,
    OperationCounter,
    SinrEntry,
    link_quality_cost,
    pair_eval_cost,
)
from .signal_model import generate_spreading_codes

__all__ = [
    "EpochMetrics",
    "TrialResult",
    "PointResult",
    "SweepResult",
    "ProtocolInvariantError",
    "make_trial_state",
    "run_epoch",
    "run_non_buffered_epoch",
    "run_trial",
    "run_point",
    "run_sweep",
    "measure_delay",
    "snr_db_to_sigma2",
]

MODE_RECEPTION = "reception"
MODE_TRANSMISSION = "transmission"
MODE_IDLE = "idle"


class ProtocolInvariantError(RuntimeError):
    """A feasible entry failed to execute; the trial state is corrupt."""


class EpochMetrics(NamedTuple):
    """Outcome of one epoch."""

    mode: str
    entry: Optional[SinrEntry]
    errors_per_user: tuple
    delay: Optional[int]
    occupancies: tuple
    capacity: int


@dataclass
class TrialResult:
    """Aggregated outcome of one packet."""

    generated: int
    delivered: int
    residual: int
    bit_errors: int
    bits_judged: int
    delay_total: int
    reception_epochs: int
    transmission_epochs: int
    idle_epochs: int
    epochs: int
    capacity: int
    avg_capacity: float
    counter: OperationCounter
    metrics: Optional[list] = None


@dataclass
class PointResult:
    """Aggregated outcome of one SNR point."""

    snr_db: Optional[float]
    sigma2: float
    ber: float
    bit_errors: int
    bits_judged: int
    generated: int
    delivered: int
    residual: int
    avg_delay: Optional[float]
    avg_capacity: float
    mults: int
    adds: int
    pair_evals: int
    trials: list = field(default_factory=list, repr=False)


@dataclass
class SweepResult:
    config: SimConfig
    points: list


def snr_db_to_sigma2(snr_db: float) -> float:
    """Noise variance for a given input SNR with unit per-user transmit power."""
    return 10.0 ** (-snr_db / 10.0)


def _trial_rng(config: SimConfig, point_index: int, packet_index: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, point_index, packet_index])


def _source_blocks(rng, n_blocks, n_users):
    bits = rng.integers(0, 2, size=(n_blocks, n_users, 2))
    return (2 * bits - 1).astype(np.int8)


class _TrialBase:
    """State shared by the buffered and alternating protocol variants."""

    def __init__(self, config, sigma2, rng, capacity, selection, power_policy=None):
        self.config = config
        self.sigma2 = sigma2
        self.rng = rng
        self.capacity = capacity
        self.n_users = 1 if config.scheme == "single-user-bound" else config.users
        self.n_relays = config.relays
        self.gain = config.gain
        codes = generate_spreading_codes(self.n_users, config.gain, rng)
        buffered = config.scheme in ("buffered", "single-user-bound")
        self.engine = TrialEngine(
            rng,
            codes,
            config.relays,
            sigma2,
            config.detector_relay,
            config.detector_dest,
            selection,
            track_min_power=power_policy is not None,
            chunk=(2 if buffered else 1) * config.blocks_per_packet + 64,
        )
        self.power_policy = power_policy
        self.n_blocks = config.blocks_per_packet
        self.source = _source_blocks(rng, self.n_blocks, self.n_users)
        self.source_float = self.source.astype(np.float64)
        self.next_block = 0
        self.epoch = 0
        self.delivered = 0
        self.bit_errors = 0
        self.delay_total = 0
        self.reception_epochs = 0
        self.transmission_epochs = 0
        self.idle_epochs = 0
        self.capacity_total = 0
        self.counter = OperationCounter()

    def _judge(self, decided, tag):
        per_user = tuple((decided != self.source[tag]).sum(axis=1).tolist())
        self.delivered += 1
        self.bit_errors += sum(per_user)
        return per_user

    def _decode_pair(self, index, pair, symbols, noise):
        """Hard decisions ``(2, K, 2)`` of the two selected relays for one epoch."""
        engine = self.engine
        coeff_m = engine.sr_coeff(index, pair[0])
        coeff_n = engine.sr_coeff(index, pair[1])
        if self.config.detector_relay == "rake":
            return kernels.rx_rake(engine.code_matrix, coeff_m, coeff_n, symbols, noise)
        return kernels.rx_mmse(
            engine.code_matrix, coeff_m, coeff_n,
            engine.sr_combine(index, pair[0]), engine.sr_combine(index, pair[1]),
            symbols, noise,
        )

    def _transmit_pair(self, index, pair, transmit, noise):
        """Destination hard decisions ``(K, 2)`` for one space-time epoch."""
        engine = self.engine
        if self.config.detector_dest == "rake":
            return kernels.tx_rake(
                engine.code_matrix,
                engine.rd_coeff(index, pair[0]),
                engine.rd_coeff(index, pair[1]),
                transmit,
                noise,
            )
        first = engine.rd_signature_matrix(index, pair[0])
        second = engine.rd_signature_matrix(index, pair[1])
        bank = engine.dest_bank(first, second)
        y1 = first @ transmit[:, 0] + second @ transmit[:, 1] + noise[:, 0]
        y2 = second @ transmit[:, 0] - first @ transmit[:, 1] + noise[:, 1]
        stacked = np.concatenate([y1, np.conj(y2)])
        soft = bank.conj().T @ stacked
        return np.where(soft.real >= 0.0, 1, -1).astype(np.int8).reshape(-1, 2)


class BufferedTrialState(_TrialBase):
    """Buffer-aided protocol: adaptive reception/transmission per epoch."""

    def __init__(self, config, sigma2, rng, capacity, power_policy=None):
        policy = "exhaustive" if config.scheme == "single-user-bound" else config.policy
        super().__init__(config, sigma2, rng, capacity, policy, power_policy)
        self.policy = policy
        self.buffers = [RelayBuffer(capacity) for _ in range(self.n_relays)]
        self.reception_epoch_of = {}
        self.cutoff = 4 * config.blocks_per_packet + 4 * config.j_max
        if policy == "random":
            self._entry_ids = list(range(self.n_relays * (self.n_relays - 1)))
        k, n, l = self.n_users, self.gain, self.n_relays
        eval_mults, eval_adds = pair_eval_cost(k, n, l)
        q_mults, q_adds = link_quality_cost(k, n)
        if policy == "exhaustive":
            evals = l * (l - 1)
            self._epoch_cost = (evals * eval_mults, evals * eval_adds, evals)
        elif policy == "greedy":
            evals = 2 * (l - 1)
            self._epoch_cost = (
                evals * eval_mults + 2 * l * q_mults,
                evals * eval_adds + 2 * l * q_adds,
                evals,
            )
        elif policy == "fixed-pairs":
            evals = l
            self._epoch_cost = (evals * eval_mults, evals * eval_adds, evals)
        else:
            self._epoch_cost = (0, 0, 0)

    @property
    def done(self) -> bool:
        return self.delivered >= self.n_blocks or self.epoch >= self.cutoff

    def _feasible(self, hop, m, n) -> bool:
        if hop == HOP_SOURCE_RELAY:
            return (
                self.next_block < self.n_blocks
                and self.buffers[m].can_accept()
                and self.buffers[n].can_accept()
            )
        return common_tag(self.buffers[m], self.buffers[n]) is not None

    def _select_id(self, index):
        fields = self.engine.entry_list
        if self.policy == "random":
            feasible = [e for e in self._entry_ids if self._feasible(*fields[e])]
            if not feasible:
                return None
            return feasible[int(self.rng.integers(len(feasible)))]
        for candidate in self.engine.candidate_order(index):
            if self._feasible(*fields[candidate]):
                return candidate
        return None

    def _occupancies(self):
        return tuple([b.occupancy for b in self.buffers])

    def step(self, collect: bool = True) -> Optional[EpochMetrics]:
        index = self.epoch
        self.engine.ensure(index)
        if self.power_policy is not None:
            new_capacity = self.power_policy.step(self.engine.min_power(index))
            if new_capacity != self.capacity:
                self.capacity = new_capacity
                for buf in self.buffers:
                    buf.capacity = new_capacity
        self.capacity_total += self.capacity
        mults, adds, evals = self._epoch_cost
        self.counter.mults += mults
        self.counter.adds += adds
        self.counter.pair_evals += evals

        entry_id = self._select_id(index)
        if entry_id is None:
            self.idle_epochs += 1
            mode, per_user, delay = MODE_IDLE, (), None
        else:
            hop, m, n = self.engine.entry_list[entry_id]
            if hop == HOP_SOURCE_RELAY:
                self._receive(index, (m, n))
                mode, per_user, delay = MODE_RECEPTION, (), None
            else:
                per_user, delay = self._transmit(index, (m, n))
                mode = MODE_TRANSMISSION
        self.epoch += 1
        if not collect:
            return None
        entry = None
        if entry_id is not None:
            hop, m, n = self.engine.entry_list[entry_id]
            entry = SinrEntry(hop, (m, n), self.engine.sinr_of(index, entry_id))
        return EpochMetrics(mode, entry, per_user, delay, self._occupancies(), self.capacity)

    def _receive(self, index, pair):
        tag = self.next_block
        self.next_block += 1
        decided = self._decode_pair(index, pair, self.source_float[tag], self.engine.noise(index))
        for i, relay in enumerate(pair):
            self.buffers[relay].push(BufferBlock(decided[i], tag))
        self.reception_epoch_of[tag] = index
        self.reception_epochs += 1

    def _transmit(self, index, pair):
        m, n = pair
        popped = pop_common(self.buffers[m], self.buffers[n])
        if popped is None:
            raise ProtocolInvariantError(
                f"entry rd{pair} was selected as feasible but holds no common block"
            )
        block_m, block_n = popped
        tag = block_m.epoch_tag
        transmit = np.empty((self.n_users, 2))
        transmit[:, 0] = block_m.symbols[:, 0]
        transmit[:, 1] = block_n.symbols[:, 1]
        decided = self._transmit_pair(index, pair, transmit, self.engine.noise(index)[0])
        per_user = self._judge(decided, tag)
        delay = index - self.reception_epoch_of.pop(tag)
        self.delay_total += delay
        self.transmission_epochs += 1
        return per_user, delay


class AlternatingTrialState(_TrialBase):
    """Non-buffered protocol: reception immediately followed by transmission.

    Both epochs of a block share one channel realization and the pair is
    selected on the second hop only.  The no-selection variant involves
    every relay by cycling deterministically through the fixed consecutive
    pairing, one pair per block, so each transmission spends the same power
    as the selection-based schemes but enjoys no selection gain.
    """

    def __init__(self, config, sigma2, rng, capacity, power_policy=None):
        if config.scheme == "no-selection" or config.policy == "random":
            selection = None
        else:
            selection = "rd-" + config.policy
        super().__init__(config, sigma2, rng, 0, selection)
        self.no_selection = config.scheme == "no-selection"
        if self.no_selection:
            self.fixed = [(l, l + 1) for l in range(0, self.n_relays, 2)]
        self.all_pairs = self.engine.pairs
        self.phase = MODE_RECEPTION
        self.held = None
        k, n, l = self.n_users, self.gain, self.n_relays
        if selection == "rd-exhaustive":
            evals = l * (l - 1) // 2
            mults, adds = pair_eval_cost(k, n, l)
            self._cycle_cost = (evals * mults, evals * adds, evals)
        elif selection == "rd-greedy":
            mults, adds = link_quality_cost(k, n)
            self._cycle_cost = (l * mults, l * adds, 0)
        else:
            self._cycle_cost = (0, 0, 0)

    @property
    def done(self) -> bool:
        return self.delivered >= self.n_blocks

    def _pick_entry(self, cycle):
        if self.no_selection:
            return SinrEntry(HOP_RELAY_DEST, self.fixed[cycle % len(self.fixed)], float("nan"))
        if self.config.policy == "exhaustive":
            pair_id, pair = self.engine.rd_best_pair(cycle)
            return SinrEntry(HOP_RELAY_DEST, pair, self.engine.rd_pair_sinr(cycle, pair_id))
        if self.config.policy == "greedy":
            return SinrEntry(HOP_RELAY_DEST, self.engine.rd_top2_pair(cycle), float("nan"))
        pair = self.all_pairs[int(self.rng.integers(len(self.all_pairs)))]
        return SinrEntry(HOP_RELAY_DEST, pair, float("nan"))

    def step(self, collect: bool = True) -> Optional[EpochMetrics]:
        cycle = self.epoch // 2
        self.engine.ensure(cycle)
        if self.phase == MODE_RECEPTION:
            entry = self._receive(cycle)
            mode, per_user, delay = MODE_RECEPTION, (), None
        else:
            entry, per_user, delay = self._transmit(cycle)
            mode = MODE_TRANSMISSION
        self.epoch += 1
        if not collect:
            return None
        return EpochMetrics(mode, entry, per_user, delay, (), 0)

    def _receive(self, cycle):
        mults, adds, evals = self._cycle_cost
        self.counter.mults += mults
        self.counter.adds += adds
        self.counter.pair_evals += evals
        tag = self.next_block
        self.next_block += 1
        entry = self._pick_entry(cycle)
        decided = self._decode_pair(cycle, entry.pair, self.source_float[tag], self.engine.noise(self.epoch))
        self.held = (tag, entry, decided)
        self.phase = MODE_TRANSMISSION
        self.reception_epochs += 1
        return entry

    def _transmit(self, cycle):
        tag, entry, decided = self.held
        transmit = np.empty((self.n_users, 2))
        transmit[:, 0] = decided[0][:, 0]
        transmit[:, 1] = decided[1][:, 1]
        out = self._transmit_pair(cycle, entry.pair, transmit, self.engine.noise(self.epoch)[0])
        per_user = self._judge(out, tag)
        self.delay_total += 1
        self.held = None
        self.phase = MODE_RECEPTION
        self.transmission_epochs += 1
        return entry, per_user, 1


def make_trial_state(
    config: SimConfig,
    sigma2: float,
    rng: np.random.Generator,
    capacity: Optional[int] = None,
    power_policy: Optional[DynamicBufferPolicy] = None,
):
    """Build the protocol state for one packet."""
    if config.scheme == "direct":
        raise ValueError("the direct calibration scheme has no epoch state machine")
    capacity = config.capacity if capacity is None else capacity
    if config.scheme in ("buffered", "single-user-bound"):
        return BufferedTrialState(config, sigma2, rng, capacity, power_policy)
    return AlternatingTrialState(config, sigma2, rng, capacity)


def run_epoch(state) -> EpochMetrics:
    """Advance any trial state by one epoch."""
    return state.step()


def run_non_buffered_epoch(state: AlternatingTrialState) -> EpochMetrics:
    """Advance a non-buffered trial by one epoch of its strict alternation."""
    if not isinstance(state, AlternatingTrialState):
        raise TypeError("state does not belong to a non-buffered scheme")
    return state.step()


def _direct_trial(config, sigma2, rng) -> TrialResult:
    """One packet of single-user chip-level transmission straight to the destination.

    Unit channel, matched filter, BPSK slicing; the calibration reference
    for the receive chain.
    """
    code = generate_spreading_codes(1, config.gain, rng)[0]
    bits = rng.integers(0, 2, size=config.symbols)
    symbols = 2.0 * bits - 1.0
    received = code[:, None] * symbols[None, :] + 0j
    if sigma2 > 0:
        scale = math.sqrt(sigma2 / 2.0)
        received += scale * (
            rng.standard_normal((config.gain, config.symbols))
            + 1j * rng.standard_normal((config.gain, config.symbols))
        )
    soft = code @ received
    decided = np.where(soft.real >= 0.0, 1.0, -1.0)
    errors = int(np.count_nonzero(decided != symbols))
    return TrialResult(
        generated=0, delivered=0, residual=0,
        bit_errors=errors, bits_judged=config.symbols,
        delay_total=0, reception_epochs=0, transmission_epochs=0, idle_epochs=0,
        epochs=0, capacity=0, avg_capacity=0.0, counter=OperationCounter(),
    )


def run_trial(
    config: SimConfig,
    packet_index: int,
    point_index: int = 0,
    snr_db: Optional[float] = None,
    sigma2: Optional[float] = None,
    capacity: Optional[int] = None,
    power_policy: Optional[DynamicBufferPolicy] = None,
    collect_metrics: bool = True,
) -> TrialResult:
    """Simulate one packet and aggregate its epoch outcomes.

    Deterministic in ``(config.seed, point_index, packet_index)``.  At most
    one of ``snr_db``/``sigma2`` selects the noise level (defaulting to the
    first grid point).  A power-driven buffer policy fires on every epoch's
    channel realization.
    """
    if sigma2 is None:
        sigma2 = snr_db_to_sigma2(config.snr_db[0] if snr_db is None else snr_db)
    rng = _trial_rng(config, point_index, packet_index)
    if config.scheme == "direct":
        return _direct_trial(config, sigma2, rng)

    state = make_trial_state(config, sigma2, rng, capacity=capacity, power_policy=power_policy)
    metrics = None
    if collect_metrics:
        metrics = []
        while not state.done:
            metrics.append(state.step())
    else:
        while not state.done:
            state.step(collect=False)

    generated = state.next_block
    residual = generated - state.delivered
    buffered = config.scheme in ("buffered", "single-user-bound")
    return TrialResult(
        generated=generated,
        delivered=state.delivered,
        residual=residual,
        bit_errors=state.bit_errors,
        bits_judged=2 * state.n_users * state.delivered,
        delay_total=state.delay_total,
        reception_epochs=state.reception_epochs,
        transmission_epochs=state.transmission_epochs,
        idle_epochs=state.idle_epochs,
        epochs=state.epoch,
        capacity=state.capacity if buffered else 0,
        avg_capacity=(state.capacity_total / state.epoch) if buffered and state.epoch else 0.0,
        counter=state.counter,
        metrics=metrics,
    )


def run_point(
    config: SimConfig,
    point_index: int = 0,
    snr_db: Optional[float] = None,
    sigma2: Optional[float] = None,
    capacity: Optional[int] = None,
    power_policy: Optional[DynamicBufferPolicy] = None,
    keep_trials: bool = False,
) -> PointResult:
    """Aggregate ``config.packets`` independent trials at one noise level.

    The power-driven policy object, when given, carries its capacity state
    through the whole point (epoch to epoch and packet to packet).
    """
    if sigma2 is None:
        if snr_db is None:
            raise ValueError("run_point needs snr_db or sigma2")
        sigma2 = snr_db_to_sigma2(snr_db)
    trials = []
    totals = dict(errors=0, bits=0, generated=0, delivered=0, residual=0, delay=0)
    counter = OperationCounter()
    capacity_sum = 0.0
    for packet in range(config.packets):
        result = run_trial(
            config, packet, point_index=point_index, sigma2=sigma2,
            capacity=capacity, power_policy=power_policy, collect_metrics=False,
        )
        totals["errors"] += result.bit_errors
        totals["bits"] += result.bits_judged
        totals["generated"] += result.generated
        totals["delivered"] += result.delivered
        totals["residual"] += result.residual
        totals["delay"] += result.delay_total
        counter.merge(result.counter)
        capacity_sum += result.avg_capacity
        if keep_trials:
            trials.append(result)
    ber = totals["errors"] / totals["bits"] if totals["bits"] else 0.0
    avg_delay = totals["delay"] / totals["delivered"] if totals["delivered"] else None
    return PointResult(
        snr_db=snr_db,
        sigma2=sigma2,
        ber=ber,
        bit_errors=totals["errors"],
        bits_judged=totals["bits"],
        generated=totals["generated"],
        delivered=totals["delivered"],
        residual=totals["residual"],
        avg_delay=avg_delay,
        avg_capacity=capacity_sum / config.packets,
        mults=counter.mults,
        adds=counter.adds,
        pair_evals=counter.pair_evals,
        trials=trials,
    )


def run_sweep(config: SimConfig) -> SweepResult:
    """Run every SNR point of the grid, applying the configured buffer policy.

    The SNR-driven policy fires between grid points (capacity shrinks as the
    sweep climbs); the power-driven policy starts fresh at each point and
    fires on every channel realization.
    """
    snr_policy = None
    if config.buffer_mode == "dynamic-snr":
        snr_policy = DynamicBufferPolicy(
            mode="snr", capacity=config.capacity, d1=config.d1, d2=config.d2,
            j_min=config.j_min, j_max=config.j_max,
        )
    points = []
    for index, snr_db in enumerate(config.snr_db):
        capacity = None
        power_policy = None
        if snr_policy is not None:
            capacity = resize_snr(snr_policy, snr_db)
        if config.buffer_mode == "dynamic-power" and config.scheme in ("buffered", "single-user-bound"):
            power_policy = DynamicBufferPolicy(
                mode="power", capacity=config.capacity, d3=config.d3, gamma=config.gamma,
                j_min=config.j_min, j_max=config.j_max,
            )
        points.append(
            run_point(config, index, snr_db=snr_db, capacity=capacity, power_policy=power_policy)
        )
    return SweepResult(config=config, points=points)


def measure_delay(result) -> Optional[float]:
    """Average delivery delay in epochs, or ``None`` when nothing arrived.

    Accepts a :class:`TrialResult`, a :class:`PointResult` or a list of
    :class:`EpochMetrics`; residual blocks never enter the average.
    """
    if isinstance(result, TrialResult):
        return result.delay_total / result.delivered if result.delivered else None
    if isinstance(result, PointResult):
        return result.avg_delay
    delays = [m.delay for m in result if m.delay is not None]
    if not delays:
        return None
    return sum(delays) / len(delays)
