"""Stage-by-stage achievable-rate recursion with quantize-and-bin relays.

Each relay quantizes its received signal at level Q (distortion relative
to unit noise), bins the result at its own forwarding rate, and the next
stage decodes all L streams jointly.  One stage is therefore a multiple
access channel with side constraints, and the end-to-end symmetric rate
follows by iterating the stage bound from the destination back to the
sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import NumericalError, ParameterError
from .network import LayeredNetwork
from .solvers import golden_max

_LOG2E = math.log2(math.e)
# Below this rate a stage is treated as shut off: quantizer levels diverge
# and every deeper stage is pinned to zero.
_RATE_FLOOR = 1e-12


@dataclass(frozen=True)
class QuantizationPolicy:
    """How the per-stage quantization level Q_k is chosen.

    Variants: noise_level (Q = 1), stage_depth (Q = K), wyner_ziv
    (distortion matched to the forwarding rate), optimal (per-stage
    scalar search), fixed (caller-supplied per-stage levels).
    """

    kind: str
    values: tuple[float, ...] | None = None

    @classmethod
    def fixed(cls, values: Sequence[float]) -> "QuantizationPolicy":
        vals = tuple(float(v) for v in values)
        if any(v < 0.0 for v in vals):
            raise ParameterError("fixed quantization levels must be non-negative")
        return cls("fixed", vals)

    def __str__(self) -> str:
        return self.kind


NOISE_LEVEL = QuantizationPolicy("noise_level")
STAGE_DEPTH = QuantizationPolicy("stage_depth")
WYNER_ZIV = QuantizationPolicy("wyner_ziv")
OPTIMAL = QuantizationPolicy("optimal")

_POLICIES = {p.kind: p for p in (NOISE_LEVEL, STAGE_DEPTH, WYNER_ZIV, OPTIMAL)}


def policy_from_name(name: str) -> QuantizationPolicy:
    try:
        return _POLICIES[name]
    except KeyError:
        raise ParameterError(
            f"unknown policy {name!r}; expected one of {sorted(_POLICIES)}"
        ) from None


@dataclass(frozen=True)
class RateLadder:
    """Rates r_0..r_K plus the infinite sentinel r_{K+1}.

    rates[k] is the symmetric forwarding rate of stage k (r_0 = source
    rate, the delivered figure of merit).  q_levels[k] holds the
    quantization chosen at stage k: scalar for symmetric policies, a
    per-relay tuple where levels differ by row; index 0 (sources) and
    index K+1 (destination) are 0.  per_stream optionally records the
    per-relay rates behind each symmetric entry.
    """

    rates: tuple[float, ...]
    q_levels: tuple[object, ...]
    per_stream: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if len(self.rates) < 2 or not math.isinf(self.rates[-1]):
            raise ParameterError("rates must end with the infinite sentinel")
        if len(self.q_levels) != len(self.rates):
            raise ParameterError("q_levels must align with rates")
        if any(r < 0.0 for r in self.rates[:-1]):
            raise ParameterError("stage rates must be non-negative")

    @property
    def K(self) -> int:
        return len(self.rates) - 2

    @property
    def r0(self) -> float:
        return self.rates[0]

    def is_monotone(self, tol: float = 1e-9) -> bool:
        head = self.rates[:-1]
        return all(a <= b + tol for a, b in zip(head, head[1:]))

    def decrements(self) -> tuple[float, ...]:
        """Per-stage drops r_k - r_{k-1}, destination side first."""
        head = self.rates[:-1]
        return tuple(head[k] - head[k - 1] for k in range(len(head) - 1, 0, -1))


def _as_matrix(H) -> np.ndarray:
    return np.asarray(getattr(H, "entries", H), dtype=complex)


def _logdet_capacity(H: np.ndarray, weights: np.ndarray) -> float:
    """log2 det(I + diag(weights) H H^H), computed on the symmetrized
    PSD form for stability."""
    if H.shape[0] == 0:
        return 0.0
    scaled = (np.sqrt(weights)[:, None] * H)
    gram = scaled @ scaled.conj().T
    m = gram.shape[0]
    sign, logdet = np.linalg.slogdet(np.eye(m) + gram)
    if sign <= 0:
        raise NumericalError("stage Gram matrix lost positive definiteness")
    return logdet / math.log(2.0)


def marc_symmetric_rate(H, r_next, q, p_tx: float) -> float:
    """Symmetric per-stream rate supported by one relay stage.

    H is the L x L hop into the quantizing relays (rows = receivers),
    r_next the symmetric forwarding rate of those relays, q their
    quantization levels (scalar or length-L), p_tx the transmit power.
    The bound is a minimum over receiver subsets S: streams resolved
    through binned descriptions pay r_next - log2(1 + 1/Q_j) each, the
    rest are covered by the log-det of the unquantized complement.

    The destination stage is the sentinel r_next = inf with q = 0, for
    which only the empty subset binds: log2 det(I + p_tx H H^H) / L.
    """
    h = _as_matrix(H)
    L = h.shape[0]
    qv = np.broadcast_to(np.asarray(q, dtype=float), (L,)).copy()
    if np.any(qv < 0.0):
        raise ParameterError("quantization levels must be non-negative")
    if not p_tx > 0.0:
        raise ParameterError(f"p_tx must be positive, got {p_tx}")

    if math.isinf(r_next):
        if np.any(qv != 0.0):
            raise ParameterError("sentinel stage requires q = 0")
        return _logdet_capacity(h, np.full(L, p_tx)) / L

    if np.any(qv == 0.0):
        raise ParameterError("q = 0 requires the infinite-rate sentinel stage")

    bin_margin = r_next - np.log2(1.0 + 1.0 / qv)  # per-receiver binning term
    weights = p_tx / (1.0 + qv)
    best = math.inf
    idx = list(range(L))
    for size in range(L + 1):
        for S in combinations(idx, size):
            comp = [j for j in idx if j not in S]
            term = float(sum(bin_margin[list(S)])) if S else 0.0
            term += _logdet_capacity(h[comp], weights[comp])
            if term < best:
                best = term
    return best / L


def _wyner_ziv_levels(H: np.ndarray, p_tx: float, r: float) -> np.ndarray:
    row_power = np.sum(np.abs(H) ** 2, axis=1)
    return (1.0 + row_power * p_tx) / (2.0**r - 1.0)


def _optimal_stage(
    H: np.ndarray, r_next: float, p_tx: float, snr: float, x_tol: float = 1e-9
) -> tuple[float, float]:
    """Best scalar quantization level for one stage.

    Golden-section over the standard bracket [1/(2^r - 1), (1 + s)/(2^r - 1)]
    with s covering both the nominal snr and the largest received power;
    the named policies' levels are also evaluated so the returned stage
    rate dominates them even if the objective is not strictly unimodal.
    """
    denom = 2.0**r_next - 1.0
    row_power = np.sum(np.abs(H) ** 2, axis=1)
    s_hi = max(snr, float(np.max(row_power)) * p_tx)
    q_lo = 1.0 / denom
    q_hi = (1.0 + s_hi) / denom

    def objective(qq: float) -> float:
        return marc_symmetric_rate(H, r_next, qq, p_tx)

    q_star, val = golden_max(objective, q_lo, q_hi, x_tol=x_tol)
    for cand in (1.0, max(1.0, q_hi * 0.999), q_lo * (1.0 + 1e-9)):
        if q_lo <= cand <= q_hi:
            v = objective(cand)
            if v > val:
                q_star, val = cand, v
    return q_star, val


def run_recursion(
    net: LayeredNetwork,
    policy: QuantizationPolicy,
    path: int = 1,
) -> RateLadder:
    """Iterate the stage bound from the destination to the sources.

    Stage k = K+1 is the destination (no quantization); stages K..1 apply
    `policy` to pick Q_k, then bound r_{k-1} through the hop into stage
    k.  A stage whose rate collapses to zero shuts off everything deeper.
    """
    params = net.params
    K, L, p_tx = params.K, params.L, params.p_tx
    if policy.kind == "fixed":
        if policy.values is None or len(policy.values) != K:
            raise ParameterError(
                f"fixed policy needs exactly K={K} levels, got {policy.values}"
            )

    rates = [0.0] * (K + 2)
    qs: list[object] = [0.0] * (K + 2)
    rates[K + 1] = math.inf
    rates[K] = marc_symmetric_rate(net.desired(path, K), math.inf, 0.0, p_tx)

    for k in range(K, 0, -1):
        r_next = rates[k]
        H = net.desired(path, k - 1).entries
        if r_next <= _RATE_FLOOR:
            rates[k - 1] = 0.0
            qs[k] = math.inf
            continue
        if policy.kind == "noise_level":
            q: object = 1.0
            r = marc_symmetric_rate(H, r_next, q, p_tx)
        elif policy.kind == "stage_depth":
            q = float(K)
            r = marc_symmetric_rate(H, r_next, q, p_tx)
        elif policy.kind == "wyner_ziv":
            levels = _wyner_ziv_levels(H, p_tx, r_next)
            q = tuple(levels)
            r = marc_symmetric_rate(H, r_next, levels, p_tx)
        elif policy.kind == "fixed":
            q = float(policy.values[k - 1])  # type: ignore[index]
            if q == 0.0:
                raise ParameterError(f"fixed level at stage {k} must be positive")
            r = marc_symmetric_rate(H, r_next, q, p_tx)
        elif policy.kind == "optimal":
            q, r = _optimal_stage(H, r_next, p_tx, params.snr)
            # The matched-distortion levels are per-row; fold them in so
            # the search result dominates every named policy.
            wz = _wyner_ziv_levels(H, p_tx, r_next)
            r_wz = marc_symmetric_rate(H, r_next, wz, p_tx)
            if r_wz > r:
                q, r = tuple(wz), r_wz
        else:
            raise ParameterError(f"unknown policy kind {policy.kind!r}")
        rates[k - 1] = max(0.0, r)
        qs[k] = q

    return RateLadder(tuple(rates), tuple(qs))


def mr_rate_sparse(snr: float, alpha: float) -> float:
    """Multihop-routing baseline on the banded model: one active stream
    per hop, the two band neighbours act as noise."""
    return math.log2(1.0 + snr / (1.0 + 2.0 * alpha**2 * snr))


def mr_rate_dense(snr: float, L: int) -> float:
    """Multihop-routing baseline on the dense model with L streams:
    2L - 2 equal-power interferers per hop.

    Increasing in snr toward log2(1 + 1/(2L - 2)), decreasing in L.
    """
    if L < 1:
        raise ParameterError(f"L must be >= 1, got {L}")
    denom = 1.0 + (2 * L - 2) * snr
    return math.log2(1.0 + snr / denom)
