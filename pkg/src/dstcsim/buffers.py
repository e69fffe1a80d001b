"""Per-relay FIFO buffers for decoded symbol blocks, with dynamic capacity.

One buffer block holds a full two-slot epoch of decoded symbols for all
users, tagged with the index of the source block it came from.  Capacity is
counted in blocks.  Shrinking the capacity below the current occupancy never
discards data: the buffer simply refuses new blocks until it drains, so no
decoded block is ever lost outside :func:`pop_common`.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "BufferBlock",
    "BufferOverflowError",
    "RelayBuffer",
    "DynamicBufferPolicy",
    "common_tag",
    "pop_common",
    "resize_snr",
    "resize_power",
]


class BufferOverflowError(RuntimeError):
    """Push onto a full buffer; the protocol's feasibility check must prevent it."""


@dataclass(frozen=True)
class BufferBlock:
    """Decoded ``(K, 2)`` BPSK symbols for one epoch, tagged by source block."""

    symbols: np.ndarray
    epoch_tag: int


class RelayBuffer:
    """FIFO of buffer blocks with an adjustable capacity in blocks."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._queue: list[BufferBlock] = []
        self._tags: set[int] = set()

    def __len__(self) -> int:
        return len(self._queue)

    @property
    def occupancy(self) -> int:
        return len(self._queue)

    @property
    def is_full(self) -> bool:
        return len(self._queue) >= self.capacity

    def can_accept(self) -> bool:
        return len(self._queue) < self.capacity

    def tags(self) -> set[int]:
        return self._tags

    def push(self, block: BufferBlock) -> None:
        if not self.can_accept():
            raise BufferOverflowError(
                f"buffer full ({self.occupancy}/{self.capacity} blocks)"
            )
        if block.epoch_tag in self._tags:
            raise ValueError(f"duplicate epoch tag {block.epoch_tag}")
        self._queue.append(block)
        self._tags.add(block.epoch_tag)

    def _remove(self, tag: int) -> BufferBlock:
        for i, block in enumerate(self._queue):
            if block.epoch_tag == tag:
                self._tags.discard(tag)
                return self._queue.pop(i)
        raise KeyError(tag)


def common_tag(buffer_p: RelayBuffer, buffer_q: RelayBuffer) -> Optional[int]:
    """Oldest epoch tag present in both buffers, or ``None``.

    Blocks enter in tag order, so the first hit while walking one queue is
    the oldest shared tag.
    """
    other = buffer_q._tags
    for block in buffer_p._queue:
        if block.epoch_tag in other:
            return block.epoch_tag
    return None


def pop_common(buffer_p: RelayBuffer, buffer_q: RelayBuffer):
    """Remove and return the oldest co-stored block pair, or ``None``.

    A space-time epoch needs relay ``p``'s and relay ``q``'s copies of the
    same source block, so transmission feasibility requires a shared tag,
    not mere non-emptiness.
    """
    tag = common_tag(buffer_p, buffer_q)
    if tag is None:
        return None
    return buffer_p._remove(tag), buffer_q._remove(tag)


@dataclass
class DynamicBufferPolicy:
    """Capacity controller: fixed, input-SNR driven, or channel-power driven.

    The SNR rule shrinks the capacity by ``d2`` blocks for every full
    ``d1``-dB rise of the input SNR (big buffers pay off when transmission
    is poor; at high SNR most stored candidates are already good).  The
    power rule grows by ``d3`` when the weakest link power is at or below
    the threshold ``gamma`` and shrinks by ``d3`` otherwise.  Capacities are
    clamped to ``[j_min, j_max]``.
    """

    mode: str = "fixed"
    capacity: int = 6
    d1: float = 2.0
    d2: int = 2
    d3: int = 2
    gamma: float = 1e-3
    j_min: int = 1
    j_max: int = 12
    snr_prev: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.mode not in ("fixed", "snr", "power"):
            raise ValueError(f"unknown buffer policy mode {self.mode!r}")
        if self.j_min < 1 or self.j_min > self.j_max:
            raise ValueError(f"need 1 <= j_min <= j_max, got [{self.j_min}, {self.j_max}]")
        if self.d1 <= 0 or self.d2 <= 0 or self.d3 <= 0 or self.gamma <= 0:
            raise ValueError("step sizes and gamma must be positive")
        self.capacity = self._clamp(self.capacity)

    def _clamp(self, j: int) -> int:
        return max(self.j_min, min(self.j_max, j))

    def step(self, min_power: float) -> int:
        """Power rule on one realization's weakest link power; returns the capacity."""
        if self.mode != "power":
            raise ValueError(f"policy mode is {self.mode!r}, not 'power'")
        if min_power <= self.gamma:
            self.capacity = self._clamp(self.capacity + self.d3)
        else:
            self.capacity = self._clamp(self.capacity - self.d3)
        return self.capacity


def resize_snr(policy: DynamicBufferPolicy, snr_db: float) -> int:
    """Apply the SNR rule for the current sweep point and return the capacity."""
    if policy.mode != "snr":
        raise ValueError(f"policy mode is {policy.mode!r}, not 'snr'")
    if policy.snr_prev is not None:
        rise = snr_db - policy.snr_prev
        if rise > 0:
            steps = int(rise // policy.d1)
            policy.capacity = policy._clamp(policy.capacity - steps * policy.d2)
    policy.snr_prev = snr_db
    return policy.capacity


def resize_power(policy: DynamicBufferPolicy, channels) -> int:
    """Apply the channel-power rule for one realization and return the capacity.

    The decision statistic is the weakest squared link gain over all users
    and relays on either hop; the comparison with ``gamma`` is inclusive.
    """
    min_power = min(
        float(np.min(np.abs(channels.source_relay) ** 2)),
        float(np.min(np.abs(channels.relay_dest) ** 2)),
    )
    return policy.step(min_power)
