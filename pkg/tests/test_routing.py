"""Grid structure, metric identities, route establishment, evaluation."""

import math
import re

import numpy as np
import pytest

from backhaul.errors import InfeasibleRoutingError, ParameterError
from backhaul.rate_core import OPTIMAL
from backhaul.routing import (
    ClusterGrid,
    RoutingMetric,
    establish_paths,
    evaluate_routed_network,
    metric_from_name,
    mimo_capacity_metric,
    received_power_metric,
    route_dump,
    stage_matrices,
)


def test_capacity_metric_identity_anchor():
    assert mimo_capacity_metric(np.eye(2), 10.0) == pytest.approx(
        2.0 * math.log2(11.0), abs=1e-12
    )


def test_received_power_metric():
    assert received_power_metric([1.0 + 0j, 2j], 10.0) == pytest.approx(50.0)
    assert received_power_metric([], 10.0) == 0.0


def test_power_argmax_equals_hadamard_argmax():
    # picking the strongest candidate row by total power is the same
    # choice as maximizing its Hadamard log factor, for any snr
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        rows = rng.normal(size=(6, 4)) + 1j * rng.normal(size=(6, 4))
        snr = float(10.0 ** rng.uniform(-1.0, 3.0))
        powers = [received_power_metric(r, snr) for r in rows]
        bounds = [math.log2(1.0 + received_power_metric(r, snr)) for r in rows]
        assert int(np.argmax(powers)) == int(np.argmax(bounds))


def test_grid_structure():
    g = ClusterGrid(K=3, L=4, n_c=4, snr=100.0, seed=0)
    assert g.n_relays == 16
    assert [g.source_row(j) for j in range(4)] == [0, 1, 2, 3]
    h1 = g.hop_gain(1)
    assert h1.shape == (16, 4)
    for r in range(16):
        for j in range(4):
            dist = abs(g.relay_row(r) - g.source_row(j))
            if dist <= 1:
                assert abs(h1[r, j]) == pytest.approx(10.0)
            else:
                assert h1[r, j] == 0.0
    h2 = g.hop_gain(2)
    assert h2.shape == (16, 16)
    same = g.same_col_gain(2)
    rows = np.arange(16) // 4
    mask = np.abs(rows[:, None] - rows[None, :]) <= 1
    assert np.array_equal(same != 0.0, mask)
    d = g.dest_gain()
    assert d.shape == (4, 16)
    assert np.all(np.abs(d) == pytest.approx(10.0))


def test_grid_deterministic():
    a = ClusterGrid(K=2, L=2, n_c=3, snr=10.0, seed=5)
    b = ClusterGrid(K=2, L=2, n_c=3, snr=10.0, seed=5)
    c = ClusterGrid(K=2, L=2, n_c=3, snr=10.0, seed=6)
    assert np.array_equal(a.hop_gain(1), b.hop_gain(1))
    assert np.array_equal(a.dest_gain(), b.dest_gain())
    assert not np.array_equal(a.hop_gain(1), c.hop_gain(1))


def test_grid_validation():
    with pytest.raises(ParameterError):
        ClusterGrid(K=0, L=2, n_c=2, snr=10.0, seed=0)
    with pytest.raises(ParameterError):
        ClusterGrid(K=1, L=4, n_c=2, snr=10.0, seed=0)
    with pytest.raises(ParameterError):
        ClusterGrid(K=1, L=2, n_c=2, snr=0.0, seed=0)
    with pytest.raises(ParameterError):
        metric_from_name("shortest_path")


def test_routes_disjoint_and_complete():
    g = ClusterGrid(K=4, L=3, n_c=4, snr=100.0, seed=2)
    st = establish_paths(g, RoutingMetric.MIMO_CAPACITY)
    seen = set()
    for pr in st.routes:
        assert len(pr) == 3
        for route in pr:
            assert len(route) == 4
            for c, r in enumerate(route, start=1):
                assert (c, r) not in seen
                seen.add((c, r))
    assert st.used == frozenset(seen)
    assert st.iterations >= 1
    assert math.isfinite(st.throughput) and st.throughput > 0.0


def test_establishment_deterministic():
    g = ClusterGrid(K=3, L=4, n_c=4, snr=100.0, seed=7)
    for metric in RoutingMetric:
        a = establish_paths(g, metric)
        b = establish_paths(g, metric)
        assert a.routes == b.routes


def test_sweeps_only_improve():
    for seed in range(6):
        g = ClusterGrid(K=3, L=4, n_c=4, snr=100.0, seed=seed)
        one = establish_paths(g, RoutingMetric.MIMO_CAPACITY, max_iters=1)
        many = establish_paths(g, RoutingMetric.MIMO_CAPACITY, max_iters=20)
        assert many.throughput >= one.throughput - 1e-12


def test_harnessing_compact_aware_spread():
    """Opposite placement styles emerge from the two selection goals."""

    def mean_pair_dist(state, grid):
        tot, n = 0.0, 0
        for pr in state.routes:
            for c in range(grid.K):
                rows = [grid.relay_row(route[c]) for route in pr]
                for i in range(len(rows)):
                    for j in range(i + 1, len(rows)):
                        tot += abs(rows[i] - rows[j])
                        n += 1
        return tot / n

    g = ClusterGrid(K=3, L=2, n_c=4, snr=100.0, seed=0)
    compact = mean_pair_dist(establish_paths(g, RoutingMetric.MIMO_CAPACITY), g)
    spread = mean_pair_dist(establish_paths(g, RoutingMetric.INTERFERENCE_AWARE), g)
    assert compact < spread
    # and not just at one seed
    diffs = []
    for seed in range(10):
        gg = ClusterGrid(K=3, L=2, n_c=4, snr=100.0, seed=seed)
        h = mean_pair_dist(establish_paths(gg, RoutingMetric.MIMO_CAPACITY), gg)
        a = mean_pair_dist(establish_paths(gg, RoutingMetric.INTERFERENCE_AWARE), gg)
        diffs.append(a - h)
    assert np.mean(diffs) > 0.5


def test_mr_middle_route_closed_form():
    # when the bottleneck route has every interferer in range the rate
    # equals log2(1 + snr / (1 + (2L - 2) snr)) exactly
    g = ClusterGrid(K=3, L=4, n_c=4, snr=100.0, seed=7)
    st = establish_paths(g, RoutingMetric.MIMO_CAPACITY)
    got = evaluate_routed_network(st, g, "mr")
    assert got == pytest.approx(math.log2(1.0 + 100.0 / 601.0), abs=1e-12)


def test_qmf_beats_mr_per_seed():
    for seed in range(10):
        g = ClusterGrid(K=3, L=4, n_c=4, snr=100.0, seed=seed)
        st = establish_paths(g, RoutingMetric.MIMO_CAPACITY)
        q = evaluate_routed_network(st, g, "optimized_qmf")
        m = evaluate_routed_network(st, g, "mr")
        assert q > m


def test_optimal_policy_not_below_wyner_ziv():
    g = ClusterGrid(K=3, L=2, n_c=2, snr=100.0, seed=3)
    st = establish_paths(g, RoutingMetric.MIMO_CAPACITY)
    wz = evaluate_routed_network(st, g, "optimized_qmf")
    opt = evaluate_routed_network(st, g, "optimized_qmf", OPTIMAL)
    assert opt >= wz - 1e-9


def test_rates_vanish_at_low_snr():
    g = ClusterGrid(K=3, L=2, n_c=2, snr=1e-9, seed=1)
    st = establish_paths(g, RoutingMetric.MIMO_CAPACITY)
    assert evaluate_routed_network(st, g, "optimized_qmf") < 1e-6
    assert evaluate_routed_network(st, g, "mr") < 1e-6


def test_stage_matrix_extraction():
    g = ClusterGrid(K=2, L=3, n_c=3, snr=100.0, seed=4)
    st = establish_paths(g, RoutingMetric.RECEIVED_POWER)
    mats = stage_matrices(st, g, 1)
    assert len(mats) == 3
    assert all(m.shape == (3, 3) for m in mats)
    routes = st.routes[0]
    # spot check: hop-2 entry (j, m) is the gain from route m's column-1
    # relay to route j's column-2 relay
    assert mats[1][2, 0] == g.hop_gain(2)[routes[2][1], routes[0][0]]
    with pytest.raises(ParameterError):
        stage_matrices(st, g, 3)


def test_infeasibility_names_the_stage():
    g = ClusterGrid(K=3, L=2, n_c=2, snr=100.0, seed=0)
    g._hop[2][:] = 0.0  # sever every link into column 2
    with pytest.raises(InfeasibleRoutingError, match="stage 2"):
        establish_paths(g, RoutingMetric.RECEIVED_POWER)


def test_unknown_scheme_rejected():
    g = ClusterGrid(K=1, L=2, n_c=2, snr=10.0, seed=0)
    st = establish_paths(g)
    with pytest.raises(ParameterError):
        evaluate_routed_network(st, g, "amplify")


def test_route_dump_format():
    g = ClusterGrid(K=2, L=2, n_c=3, snr=10.0, seed=9)
    st = establish_paths(g)
    text = route_dump(st, g)
    lines = text.strip().splitlines()
    assert lines[0] == "# path 1"
    assert len(lines) == 2 * (1 + 2)
    pat = re.compile(r"^S\d -> (R\(\d,\d,\d\) -> )+D$")
    for ln in lines:
        if not ln.startswith("#"):
            assert pat.match(ln), ln
