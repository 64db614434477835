"""Half-duplex group alternation schedule for two-path relaying.

Relays are split into two groups that swap transmit/receive roles every
slot: relay (path i, stage k) transmits at slot t iff (t + k + i) is
even.  Sources inject a fresh batch of L messages every slot (odd slots
ride path 1, even slots path 2), each batch marches one stage per slot,
and the destination decodes a batch every slot once the pipeline is
full, for a fixed delivery latency of K slots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .errors import ParameterError, WarmUpError


class RelayId(NamedTuple):
    path: int  # 1 or 2
    stage: int  # 1..K
    layer: int  # 1..L, the route/stream index


class Delivery(NamedTuple):
    slot: int
    source: int
    injected_at: int


@dataclass(frozen=True)
class SlotRecord:
    """One slot of the log.

    carried maps each data-bearing transmitting relay to the (source,
    injection slot) batch identity it is forwarding.  Relays in transmit
    mode ahead of the pipeline fill carry nothing but still occupy the
    slot (a known dummy signal), so tx lists them too.
    """

    t: int
    tx: frozenset[RelayId]
    rx: frozenset[RelayId]
    carried: dict[RelayId, tuple[int, int]]


@dataclass(frozen=True)
class ScheduleLog:
    L: int
    K: int
    T: int
    slots: tuple[SlotRecord, ...]
    deliveries: tuple[Delivery, ...]

    def slot(self, t: int) -> SlotRecord:
        if not 1 <= t <= self.T:
            raise ParameterError(f"slot {t} outside 1..{self.T}")
        return self.slots[t - 1]


def _transmits(t: int, path: int, stage: int) -> bool:
    return (t + stage + path) % 2 == 0


def all_relays(L: int, K: int) -> Iterator[RelayId]:
    for path in (1, 2):
        for stage in range(1, K + 1):
            for layer in range(1, L + 1):
                yield RelayId(path, stage, layer)


def build_schedule(L: int, K: int, T: int) -> ScheduleLog:
    """Roll the alternation schedule forward for T slots.

    The batch injected at slot s is carried by the stage-k relays of its
    path at slot s+k and reaches the destination at slot s+K, so slots
    t > K each deliver exactly L messages.
    """
    if L < 1 or K < 0 or T < 1:
        raise ParameterError(f"need L >= 1, K >= 0, T >= 1; got {(L, K, T)}")
    slots = []
    deliveries: list[Delivery] = []
    for t in range(1, T + 1):
        tx = []
        rx = []
        carried: dict[RelayId, tuple[int, int]] = {}
        for rid in all_relays(L, K):
            if _transmits(t, rid.path, rid.stage):
                tx.append(rid)
                injected = t - rid.stage
                if injected >= 1:
                    carried[rid] = (rid.layer, injected)
            else:
                rx.append(rid)
        if t - K >= 1:
            deliveries.extend(Delivery(t, j, t - K) for j in range(1, L + 1))
        slots.append(SlotRecord(t, frozenset(tx), frozenset(rx), carried))
    return ScheduleLog(L, K, T, tuple(slots), tuple(deliveries))


def validate_half_duplex(log: ScheduleLog) -> bool:
    """True iff no relay is in both roles in one slot and every relay's
    role alternates from each slot to the next."""
    relays = list(all_relays(log.L, log.K))
    for rec in log.slots:
        for rid in relays:
            in_tx = rid in rec.tx
            in_rx = rid in rec.rx
            if in_tx and in_rx:
                return False
            if not in_tx and not in_rx:
                return False
    for prev, cur in zip(log.slots, log.slots[1:]):
        if prev.tx != cur.rx:  # roles must swap wholesale
            return False
    return True


def known_interference_set(log: ScheduleLog, t: int, path: int) -> frozenset[RelayId]:
    """Relays whose slot-t subnetwork interference is already known.

    The slot-t subnetwork is the pipeline diagonal of the batch delivered
    at slot t on `path`: its stage-k relays received at slot t-K+k-1.
    Each such receiver hears, besides its desired previous stage, the
    next stage of its own path and the same stage of the other path.
    Those interferers forwarded earlier batches (decoded before slot t)
    or pipeline-fill dummies, so their signals are side information.
    """
    if path not in (1, 2):
        raise ParameterError(f"path must be 1 or 2, got {path}")
    if t > log.T:
        raise ParameterError(f"slot {t} beyond log horizon {log.T}")
    if t <= log.K:
        raise WarmUpError(
            f"slot {t} is inside the pipeline fill (first delivery at {log.K + 1})"
        )
    other = 2 if path == 1 else 1
    out: set[RelayId] = set()
    for k in range(1, log.K + 1):
        s = t - log.K + k - 1
        rec = log.slot(s)
        for layer in range(1, log.L + 1):
            nxt = RelayId(path, k + 1, layer)
            if k + 1 <= log.K and nxt in rec.tx:
                out.add(nxt)
            peer = RelayId(other, k, layer)
            if peer in rec.tx:
                out.add(peer)
    return frozenset(out)


def dump_schedule(log: ScheduleLog) -> str:
    """Text dump, one line per slot:
    t | TX: <nodes> | RX: <nodes> | delivered: <ids>."""

    def relay_name(r: RelayId) -> str:
        return f"R{r.path}.{r.stage}.{r.layer}"

    by_slot: dict[int, list[Delivery]] = {}
    for d in log.deliveries:
        by_slot.setdefault(d.slot, []).append(d)
    lines = []
    sources = [f"S{j}" for j in range(1, log.L + 1)]
    for rec in log.slots:
        tx_names = sources + [relay_name(r) for r in sorted(rec.tx)]
        rx_names = [relay_name(r) for r in sorted(rec.rx)] + ["D"]
        dl = by_slot.get(rec.t, [])
        delivered = " ".join(f"w{d.source}@{d.injected_at}" for d in dl) or "-"
        lines.append(
            f"{rec.t} | TX: {' '.join(tx_names)} | RX: {' '.join(rx_names)}"
            f" | delivered: {delivered}"
        )
    return "\n".join(lines) + "\n"
