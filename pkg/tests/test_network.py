"""Channel draw determinism, gain-model structure, and dump format."""

import math

import numpy as np
import pytest

from backhaul.errors import ParameterError
from backhaul.network import (
    ClusterModel,
    DenseIIDModel,
    LayeredNetwork,
    NetworkParams,
    PowerRule,
    WynerModel,
    build_network,
    stage_row_power,
)


def test_wyner_matrix_is_tridiagonal():
    p = NetworkParams(L=3, K=2, snr=100.0, model=WynerModel(alpha=0.56))
    net = build_network(p, 11)
    H = net.desired(1, 0).entries
    assert H.shape == (3, 3)
    assert H[0][0] == 1.0
    assert H[0][1] == 0.56
    assert H[0][2] == 0.0
    assert H[2][1] == 0.56
    # same banded matrix at every hop and path
    for path in (1, 2):
        for k in range(3):
            assert np.array_equal(net.desired(path, k).entries, H)


def test_wyner_row_powers():
    p = NetworkParams(L=3, K=1, snr=100.0, model=WynerModel(alpha=0.56))
    net = build_network(p, 0)
    edge = 1.0 + 0.56**2
    mid = 1.0 + 2 * 0.56**2
    assert stage_row_power(net, 1, 0, 0) == pytest.approx(edge)
    assert stage_row_power(net, 1, 0, 1) == pytest.approx(mid)
    assert stage_row_power(net, 1, 0, 2) == pytest.approx(edge)


def test_draws_deterministic_and_decoupled():
    p = NetworkParams(L=4, K=3, snr=100.0, model=DenseIIDModel())
    a = build_network(p, 42)
    b = build_network(p, 42)
    c = build_network(p, 43)
    h00 = a.desired(1, 0).entries
    assert np.array_equal(h00, b.desired(1, 0).entries)
    assert not np.array_equal(h00, c.desired(1, 0).entries)
    # distinct (path, stage) pairs get independent draws
    assert not np.array_equal(h00, a.desired(1, 1).entries)
    assert not np.array_equal(h00, a.desired(2, 0).entries)


def test_dense_entries_unit_variance():
    p = NetworkParams(L=6, K=4, snr=100.0, model=DenseIIDModel())
    net = build_network(p, 7)
    vals = np.concatenate(
        [net.desired(pa, k).entries.ravel() for pa in (1, 2) for k in range(5)]
    )
    assert abs(np.mean(np.abs(vals) ** 2) - 1.0) < 0.1
    assert abs(np.mean(vals.real)) < 0.1


def test_cluster_gains_have_snr_magnitude():
    p = NetworkParams(L=2, K=1, snr=100.0, model=ClusterModel(4))
    net = build_network(p, 3)
    mags = np.abs(net.desired(1, 0).entries)
    assert np.allclose(mags, 10.0)
    assert p.p_tx == 1.0  # power lives in the gain for this model


def test_power_rules():
    dense = NetworkParams(L=4, K=1, snr=100.0, model=DenseIIDModel())
    assert dense.power_rule is PowerRule.PER_NODE_SCALED
    assert dense.p_tx == pytest.approx(25.0)
    wyner = NetworkParams(L=2, K=1, snr=100.0, model=WynerModel(0.5))
    assert wyner.p_tx == pytest.approx(100.0)
    with pytest.raises(ParameterError):
        NetworkParams(
            L=4, K=1, snr=100.0, model=DenseIIDModel(), power_rule=PowerRule.PER_NODE
        )
    # explicit override is allowed
    p = NetworkParams(
        L=4, K=1, snr=100.0, model=DenseIIDModel(),
        power_rule=PowerRule.PER_NODE, allow_mismatch=True,
    )
    assert p.p_tx == pytest.approx(100.0)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        NetworkParams(L=0, K=1, snr=100.0, model=DenseIIDModel())
    with pytest.raises(ParameterError):
        NetworkParams(L=2, K=-1, snr=100.0, model=DenseIIDModel())
    with pytest.raises(ParameterError):
        NetworkParams(L=2, K=1, snr=0.0, model=DenseIIDModel())
    with pytest.raises(ParameterError):
        NetworkParams(L=4, K=1, snr=100.0, model=ClusterModel(2))
    with pytest.raises(ParameterError):
        WynerModel(alpha=-0.1)


def test_dump_format_round_trips_entries():
    p = NetworkParams(L=2, K=1, snr=100.0, model=WynerModel(alpha=0.56))
    net = build_network(p, 11)
    lines = net.dump().splitlines()
    assert lines[0] == "2 1 wyner:0.56 11"
    # one line per (path, stage, row): 2 paths * 2 stages * 2 rows
    assert len(lines) == 1 + 8
    first = [complex(*map(float, pair.split(":"))) for pair in lines[1].split(",")]
    assert np.allclose(first, net.desired(1, 0).entries[0])


def test_missing_stage_raises():
    p = NetworkParams(L=2, K=1, snr=100.0, model=DenseIIDModel())
    net = build_network(p, 0)
    with pytest.raises(ParameterError):
        net.desired(1, 5)


def test_from_matrices_checks_shapes():
    p = NetworkParams(L=2, K=1, snr=100.0, model=ClusterModel(4))
    good = [np.eye(2, dtype=complex)] * 2
    net = LayeredNetwork.from_matrices(p, 0, {1: good, 2: good})
    assert np.array_equal(net.desired(2, 1).entries, np.eye(2))
    with pytest.raises(ParameterError):
        LayeredNetwork.from_matrices(p, 0, {1: good[:1], 2: good})
    with pytest.raises(ParameterError):
        LayeredNetwork.from_matrices(p, 0, {1: [np.eye(3)] * 2, 2: good})
