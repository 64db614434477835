"""Stage bound against an independent region oracle, plus ladder rules.

The oracle re-states the cut bound from scratch: for every nonempty
complement subset it forms the log-det term with plain numpy determinants
and adds the binning margins of the quantized side, then divides by L.
No code is shared with the implementation beyond numpy itself.
"""

import itertools
import math

import numpy as np
import pytest

from backhaul.errors import ParameterError
from backhaul.network import DenseIIDModel, NetworkParams, WynerModel, build_network
from backhaul.rate_core import (
    NOISE_LEVEL,
    OPTIMAL,
    STAGE_DEPTH,
    WYNER_ZIV,
    QuantizationPolicy,
    RateLadder,
    marc_symmetric_rate,
    mr_rate_dense,
    mr_rate_sparse,
    policy_from_name,
    run_recursion,
)


def oracle_symmetric_rate(H, r_next, q, p_tx):
    """Brute-force min over subsets, written independently of the library."""
    H = np.asarray(H, dtype=complex)
    L = H.shape[0]
    q = np.broadcast_to(np.asarray(q, dtype=float), (L,))
    best = math.inf
    for size in range(L + 1):
        for subset in itertools.combinations(range(L), size):
            keep = [j for j in range(L) if j not in subset]  # S^c
            total = 0.0
            for j in subset:
                total += r_next - math.log2(1.0 + 1.0 / q[j])
            if keep:
                Hs = H[keep, :]
                scale = p_tx / (1.0 + q[np.array(keep)])
                G = np.eye(len(keep)) + (Hs * scale[:, None]) @ Hs.conj().T
                total += math.log2(abs(np.linalg.det(G)))
            best = min(best, total)
    return best / L


def test_destination_stage_scalar_anchor():
    # unquantized single antenna: plain log2(1 + snr)
    r = marc_symmetric_rate(np.eye(1), math.inf, 0.0, 100.0)
    assert r == pytest.approx(math.log2(101.0), abs=1e-12)


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    for trial in range(60):
        L = int(rng.integers(1, 6))
        H = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
        q = rng.uniform(0.05, 4.0, size=L)
        r_next = float(rng.uniform(0.5, 8.0))
        p = float(rng.uniform(0.5, 50.0))
        got = marc_symmetric_rate(H, r_next, q, p)
        want = oracle_symmetric_rate(H, r_next, q, p)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_sentinel_and_zero_q_rules():
    H = np.eye(2)
    # destination: q must be exactly zero with the infinite-rate sentinel
    with pytest.raises(ParameterError):
        marc_symmetric_rate(H, math.inf, 0.5, 10.0)
    # zero q with a finite forwarding rate is ill-posed
    with pytest.raises(ParameterError):
        marc_symmetric_rate(H, 2.0, 0.0, 10.0)


def test_small_margin_shuts_rate_off():
    # q = 1/15 makes log2(1 + 1/q) = 4; a forwarding rate of 4 leaves
    # zero margin, so the empty-complement cut pins the rate at 0
    r = marc_symmetric_rate(np.eye(2), 4.0, 1.0 / 15.0, 10.0)
    assert r == pytest.approx(0.0, abs=1e-12)


def test_rate_increases_with_forwarding_rate():
    rng = np.random.default_rng(5)
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rates = [marc_symmetric_rate(H, r, 0.7, 20.0) for r in (1.0, 2.0, 4.0, 8.0)]
    assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))


def test_scalar_chain_wyner_ziv_value():
    # L = 1, K = 1, unit gain: destination decodes log2(101); the relay's
    # matched level is (1 + snr) / (2^r - 1) = 1.01 and the hop rate
    # follows in closed form
    p = NetworkParams(L=1, K=1, snr=100.0, model=WynerModel(alpha=0.0))
    net = build_network(p, 0)
    lad = run_recursion(net, WYNER_ZIV)
    q = lad.q_levels[1][0]
    assert q == pytest.approx(1.01, abs=1e-9)
    want = min(
        math.log2(101.0) - math.log2(1.0 + 1.0 / q),
        math.log2(1.0 + 100.0 / (1.0 + q)),
    )
    assert lad.r0 == pytest.approx(want, abs=1e-12)
    assert lad.r0 == pytest.approx(5.665371274324661, abs=1e-9)


def test_ladder_validation():
    with pytest.raises(ParameterError):
        RateLadder((1.0, 2.0), (0.0, 0.0))  # missing sentinel
    with pytest.raises(ParameterError):
        RateLadder((math.inf,), (0.0,))  # too short
    with pytest.raises(ParameterError):
        RateLadder((-1.0, math.inf), (0.0, 0.0))
    lad = RateLadder((1.5, 3.0, math.inf), (0.0, 1.0, 0.0))
    assert lad.K == 1
    assert lad.r0 == 1.5
    assert lad.decrements() == pytest.approx([3.0 - 1.5])


def test_optimal_dominates_fixed_policies():
    p = NetworkParams(L=3, K=3, snr=50.0, model=DenseIIDModel())
    net = build_network(p, 9)
    best = run_recursion(net, OPTIMAL).r0
    for pol in (NOISE_LEVEL, STAGE_DEPTH, WYNER_ZIV):
        assert best >= run_recursion(net, pol).r0 - 1e-9


def test_fixed_policy_levels():
    p = NetworkParams(L=2, K=2, snr=50.0, model=DenseIIDModel())
    net = build_network(p, 1)
    pol = QuantizationPolicy("fixed", (0.5, 2.0))
    lad = run_recursion(net, pol)
    assert lad.q_levels[1] == pytest.approx(0.5)
    assert lad.q_levels[2] == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        run_recursion(net, QuantizationPolicy("fixed", (0.5,)))


def test_policy_names():
    assert policy_from_name("optimal") is OPTIMAL
    assert policy_from_name("wyner_ziv") is WYNER_ZIV
    with pytest.raises(ParameterError):
        policy_from_name("bogus")


def test_mr_anchors():
    assert mr_rate_sparse(100.0, 10.0 ** -0.25) == pytest.approx(
        1.3541858056164462, abs=1e-12
    )
    assert mr_rate_dense(100.0, 4) == pytest.approx(0.22204945329943782, abs=1e-12)
    # interference-limited ceiling for L = 4
    assert mr_rate_dense(1e9, 4) == pytest.approx(math.log2(7.0 / 6.0), abs=1e-6)
