"""Alternating half-duplex schedule: parity, throughput, latency."""

import pytest

from backhaul.errors import ParameterError, WarmUpError
from backhaul.schedule import (
    RelayId,
    all_relays,
    build_schedule,
    dump_schedule,
    known_interference_set,
    validate_half_duplex,
)


def test_throughput_after_fill():
    log = build_schedule(2, 3, 10)
    # slots 4..10 deliver L=2 messages each
    assert len(log.deliveries) == 14
    per_slot = {}
    for d in log.deliveries:
        per_slot.setdefault(d.slot, []).append(d)
    for t, ds in per_slot.items():
        assert t > 3
        assert len(ds) == 2


def test_direct_link_delivers_every_slot():
    log = build_schedule(1, 0, 5)
    assert len(log.deliveries) == 5


def test_latency_is_stage_count():
    for L, K in [(1, 1), (2, 3), (3, 2)]:
        log = build_schedule(L, K, 20)
        for d in log.deliveries:
            assert d.slot - d.injected_at == K


def test_groups_alternate():
    log = build_schedule(2, 2, 9)
    for rec in log.slots:
        for rid in rec.tx:
            assert (rec.t + rid.stage + rid.path) % 2 == 0
        assert rec.tx.isdisjoint(rec.rx)
        assert rec.tx | rec.rx == frozenset(all_relays(2, 2))


def test_half_duplex_validator_and_tamper():
    log = build_schedule(3, 4, 12)
    assert validate_half_duplex(log)
    rec = log.slots[5]
    moved = rec.tx | {next(iter(rec.rx))}
    bad = rec.__class__(rec.t, frozenset(moved), rec.rx, rec.carried)
    tampered = log.__class__(
        log.L, log.K, log.T, log.slots[:5] + (bad,) + log.slots[6:], log.deliveries
    )
    assert not validate_half_duplex(tampered)


def test_known_interference_set_trace():
    log = build_schedule(2, 2, 8)
    got = known_interference_set(log, 3, 1)
    want = {
        RelayId(1, 2, 1), RelayId(1, 2, 2),
        RelayId(2, 1, 1), RelayId(2, 1, 2),
        RelayId(2, 2, 1), RelayId(2, 2, 2),
    }
    assert got == want


def test_warm_up_guard():
    log = build_schedule(2, 2, 8)
    with pytest.raises(WarmUpError):
        known_interference_set(log, 1, 1)


def test_bad_arguments():
    with pytest.raises(ParameterError):
        build_schedule(0, 1, 5)
    with pytest.raises(ParameterError):
        build_schedule(1, -1, 5)
    with pytest.raises(ParameterError):
        build_schedule(1, 1, 0)


def test_dump_one_line_per_slot():
    log = build_schedule(2, 1, 6)
    lines = dump_schedule(log).strip().splitlines()
    assert len(lines) == 6
    assert lines[0].startswith("1 | TX: ")
    assert "delivered:" in lines[0]
