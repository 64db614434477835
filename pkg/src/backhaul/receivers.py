"""Practical per-stage receiver front ends for the relay chain.

The stage model: L relays observe y = H x + n, where x carries one unit
stream per transmit relay at power p_tx and n collects thermal noise (unit
variance) plus the quantization distortion q_j each receiving relay applies
to its own observation, so antenna j sees noise variance 1 + q_j.  A
receiver separates the L streams, each separated stream is re-encoded and
forwarded, and the per-stream rates set the matched distortion levels of
the next stage upstream.

Four front ends are modeled: channel inversion (zf), the linear MMSE
estimator (mmse), integer forcing (if) which decodes Gaussian-integer
combinations before solving for the streams, and the joint decoder bound
(ml_quantized) given by the worst column-subset log-det of the
noise-whitened channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, product

import numpy as np

from .errors import ParameterError, SingularStageError
from .network import LayeredNetwork
from .rate_core import RateLadder

_RATE_FLOOR = 1e-12
# Level assigned to a relay whose stream died downstream: effectively an
# open circuit, but finite so covariances stay invertible.
_DEAD_LEVEL = 1e18

_RANK_TOL = 1e-9


class ReceiverKind(Enum):
    ZF = "zf"
    MMSE = "mmse"
    IF = "if"
    ML_QUANTIZED = "ml_quantized"


def receiver_from_name(name: str) -> ReceiverKind:
    try:
        return ReceiverKind(name)
    except ValueError:
        raise ParameterError(
            f"unknown receiver {name!r}; expected one of "
            f"{sorted(k.value for k in ReceiverKind)}"
        ) from None


def wyner_ziv_level(row_power: float, snr: float, r: float) -> float:
    """Distortion level matched to a forwarding rate of r bits.

    row_power is the squared norm of the relay's receive row, snr the
    per-node transmit power.  r = inf means lossless description (level 0);
    r <= 0 leaves nothing to describe with and is a domain error.
    """
    if row_power < 0.0:
        raise ParameterError(f"row power must be non-negative, got {row_power}")
    if not snr > 0.0:
        raise ParameterError(f"snr must be positive, got {snr}")
    if r <= 0.0:
        raise ParameterError(f"forwarding rate must be positive, got {r}")
    if math.isinf(r):
        return 0.0
    return (1.0 + row_power * snr) / (2.0**r - 1.0)


@dataclass(frozen=True, eq=False)
class QuantizedStage:
    """One hop: channel H into a relay group with quantization levels q."""

    H: np.ndarray
    q: np.ndarray
    p_tx: float

    def __post_init__(self) -> None:
        h = np.asarray(self.H, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ParameterError(f"stage channel must be square, got {h.shape}")
        qv = np.broadcast_to(np.asarray(self.q, dtype=float), (h.shape[0],)).copy()
        if np.any(qv < 0.0) or np.any(np.isnan(qv)):
            raise ParameterError("quantization levels must be non-negative")
        if not self.p_tx > 0.0:
            raise ParameterError(f"p_tx must be positive, got {self.p_tx}")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "q", qv)

    @property
    def L(self) -> int:
        return self.H.shape[0]

    @property
    def noise_diag(self) -> np.ndarray:
        """Per-antenna noise variance, thermal plus quantization."""
        return 1.0 + self.q


@dataclass(frozen=True, eq=False)
class Equalizer:
    """Linear front end: rows of B act on the stage observation.  For
    integer forcing A holds the Gaussian-integer combination rows and B
    their MMSE projections; otherwise A is None."""

    B: np.ndarray
    A: np.ndarray | None = None


def _mmse_matrix(stage: QuantizedStage) -> np.ndarray:
    h = stage.H
    p = stage.p_tx
    cov = np.diag(stage.noise_diag) + p * (h @ h.conj().T)
    return p * np.linalg.solve(cov.conj().T, h).conj().T


def _if_gram(stage: QuantizedStage) -> np.ndarray:
    """Error Gram M0 = (I + p H^H N^-1 H)^-1; sigma^2(a) = p a M0 a^H."""
    h = stage.H
    wh = h / stage.noise_diag[:, None]
    core = np.eye(stage.L) + stage.p_tx * (h.conj().T @ wh)
    m0 = np.linalg.inv(core)
    return 0.5 * (m0 + m0.conj().T)


_CANDIDATE_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _candidate_vectors(L: int, max_int: int) -> np.ndarray:
    """All nonzero Gaussian-integer rows with |Re|,|Im| <= max_int, one
    representative per unit-group orbit {a, -a, ia, -ia}."""
    key = (L, max_int)
    cached = _CANDIDATE_CACHE.get(key)
    if cached is not None:
        return cached
    rng = range(-max_int, max_int + 1)
    flat = np.array(list(product(rng, repeat=2 * L)), dtype=float)
    vecs = flat[:, :L] + 1j * flat[:, L:]
    vecs = vecs[np.any(vecs != 0, axis=1)]
    # Rotate so the first nonzero entry lands in the quarter plane
    # {re > 0, im >= 0}; exactly one unit does that per vector.
    first = vecs[np.arange(len(vecs)), np.argmax(vecs != 0, axis=1)]
    re, im = first.real, first.imag
    unit = np.where(
        (re > 0) & (im >= 0),
        1.0 + 0j,
        np.where((im > 0) & (re <= 0), -1j, np.where((re < 0) & (im <= 0), -1.0 + 0j, 1j)),
    )
    vecs = vecs * unit[:, None]
    stacked = np.unique(np.column_stack([vecs.real, vecs.imag]), axis=0)
    out = stacked[:, :L] + 1j * stacked[:, L:]
    _CANDIDATE_CACHE[key] = out
    return out


def _rank_greedy(cands: np.ndarray, weights: np.ndarray, L: int) -> np.ndarray:
    """Scan candidates in increasing weight, keeping rows that grow the
    span, until L independent rows are found (successive minima)."""
    order = np.argsort(weights, kind="stable")
    basis: list[np.ndarray] = []
    chosen: list[np.ndarray] = []
    for idx in order:
        v = cands[idx]
        r = v.astype(complex)
        for u in basis:
            r = r - (u.conj() @ r) * u
        nr = np.linalg.norm(r)
        if nr > _RANK_TOL * max(1.0, np.linalg.norm(v)):
            basis.append(r / nr)
            chosen.append(v)
            if len(chosen) == L:
                return np.array(chosen)
    raise SingularStageError("candidate pool does not span the stage")


def _lll_rows(m0: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Basic complex-lattice LLL under the inner product <u,v> = u M0 v^H.

    Rounds Gram-Schmidt coefficients to Gaussian integers.  Quality only
    matters for large groups where exhaustive search is off the table; the
    caller re-ranks the output together with the unit rows anyway.
    """
    L = m0.shape[0]
    basis = np.eye(L, dtype=complex)

    def ip(u: np.ndarray, v: np.ndarray) -> complex:
        return complex(u @ m0 @ v.conj())

    def gso(rows: np.ndarray):
        star = rows.astype(complex).copy()
        mu = np.zeros((L, L), dtype=complex)
        norms = np.zeros(L)
        for i in range(L):
            for j in range(i):
                mu[i, j] = ip(rows[i], star[j]) / norms[j]
                star[i] = star[i] - mu[i, j] * star[j]
            norms[i] = max(ip(star[i], star[i]).real, 1e-300)
        return star, mu, norms

    k = 1
    guard = 0
    while k < L and guard < 10_000:
        guard += 1
        _, mu, norms = gso(basis)
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j].real) + 1j * round(mu[k, j].imag)
            if r != 0:
                basis[k] = basis[k] - r * basis[j]
                _, mu, norms = gso(basis)
        if norms[k] >= (delta - abs(mu[k, k - 1]) ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[[k - 1, k]] = basis[[k, k - 1]]
            k = max(k - 1, 1)
    return basis


def _if_rows(stage: QuantizedStage, max_int: int) -> np.ndarray:
    m0 = _if_gram(stage)
    L = stage.L
    if L <= 4:
        cands = _candidate_vectors(L, max_int)
    else:
        reduced = _lll_rows(m0)
        pool = [np.eye(L, dtype=complex), reduced]
        for i in range(L):
            for j in range(i + 1, L):
                pool.append(reduced[i][None, :] + reduced[j][None, :])
                pool.append(reduced[i][None, :] - reduced[j][None, :])
        cands = np.vstack(pool)
        cands = cands[np.any(cands != 0, axis=1)]
    sig = stage.p_tx * np.einsum("ni,ij,nj->n", cands, m0, cands.conj()).real
    return _rank_greedy(cands, sig, L)


def equalizer_matrix(
    kind: ReceiverKind, stage: QuantizedStage, *, max_int: int = 2
) -> Equalizer:
    """Front-end matrix for one stage.  Raises SingularStageError when
    channel inversion is requested on a singular stage, ParameterError for
    the joint decoder (it has no linear front end)."""
    if kind is ReceiverKind.ZF:
        try:
            b = np.linalg.inv(stage.H)
        except np.linalg.LinAlgError:
            raise SingularStageError("stage channel is not invertible") from None
        if not np.all(np.isfinite(b)):
            raise SingularStageError("stage channel is numerically singular")
        return Equalizer(B=b)
    if kind is ReceiverKind.MMSE:
        return Equalizer(B=_mmse_matrix(stage))
    if kind is ReceiverKind.IF:
        if max_int < 1:
            raise ParameterError(f"max_int must be >= 1, got {max_int}")
        a = _if_rows(stage, max_int)
        return Equalizer(B=a @ _mmse_matrix(stage), A=a)
    if kind is ReceiverKind.ML_QUANTIZED:
        raise ParameterError("ml_quantized has no linear equalizer")
    raise ParameterError(f"unknown receiver kind {kind!r}")


def stream_rate(b_row, stage: QuantizedStage, j: int) -> float:
    """Rate of stream j under a linear row b: signal p |(bH)_j|^2 against
    enhanced noise sum |b_l|^2 (1 + q_l) plus residual interference."""
    b = np.asarray(b_row, dtype=complex).reshape(-1)
    if b.shape[0] != stage.L:
        raise ParameterError("row length must match the stage size")
    if not 0 <= j < stage.L:
        raise ParameterError(f"stream index {j} out of range")
    g = b @ stage.H
    signal = stage.p_tx * abs(g[j]) ** 2
    noise = float(np.sum(np.abs(b) ** 2 * stage.noise_diag))
    interference = stage.p_tx * (float(np.sum(np.abs(g) ** 2)) - abs(g[j]) ** 2)
    den = noise + interference
    if den <= 0.0:
        return 0.0
    return math.log2(1.0 + signal / den)


def combination_rates(stage: QuantizedStage, A: np.ndarray) -> np.ndarray:
    """Computation rate of each integer row: log2+ of p over the row's
    estimation noise p a M0 a^H."""
    a = np.asarray(A, dtype=complex)
    if a.ndim != 2 or a.shape[1] != stage.L:
        raise ParameterError(f"combination rows must be (*, {stage.L})")
    m0 = _if_gram(stage)
    sig = stage.p_tx * np.einsum("ni,ij,nj->n", a, m0, a.conj()).real
    with np.errstate(divide="ignore"):
        rates = np.log2(stage.p_tx / sig)
    return np.maximum(rates, 0.0)


def _joint_symmetric_rate(stage: QuantizedStage) -> float:
    """Worst-subset symmetric rate of the noise-whitened stage."""
    hw = stage.H / np.sqrt(stage.noise_diag)[:, None]
    p = stage.p_tx
    best = math.inf
    for size in range(1, stage.L + 1):
        for T in combinations(range(stage.L), size):
            sub = hw[:, list(T)]
            gram = np.eye(size) + p * (sub.conj().T @ sub)
            sign, logdet = np.linalg.slogdet(gram)
            if sign <= 0:
                return 0.0
            best = min(best, logdet / math.log(2.0) / size)
    return max(best, 0.0)


def _stage_stream_rates(
    stage: QuantizedStage, kind: ReceiverKind, max_int: int
) -> np.ndarray:
    if kind is ReceiverKind.ZF:
        try:
            eq = equalizer_matrix(kind, stage)
        except SingularStageError:
            return np.zeros(stage.L)
        return np.array([stream_rate(eq.B[j], stage, j) for j in range(stage.L)])
    if kind is ReceiverKind.MMSE:
        eq = equalizer_matrix(kind, stage)
        return np.array([stream_rate(eq.B[j], stage, j) for j in range(stage.L)])
    if kind is ReceiverKind.IF:
        eq = equalizer_matrix(kind, stage, max_int=max_int)
        common = float(np.min(combination_rates(stage, eq.A)))
        return np.full(stage.L, common)
    if kind is ReceiverKind.ML_QUANTIZED:
        return np.full(stage.L, _joint_symmetric_rate(stage))
    raise ParameterError(f"unknown receiver kind {kind!r}")


def receiver_ladder(
    net: LayeredNetwork,
    kind: ReceiverKind,
    path: int = 1,
    *,
    max_int: int = 2,
) -> RateLadder:
    """End-to-end rate chain under a practical front end.

    Walks hops from the destination back to the sources.  The destination
    does not quantize; each relay group's levels are matched to the
    per-stream rates its hop toward the destination supports, a dead
    stream pinning its relay to an effectively infinite level.  The
    delivered rate is the bottleneck stream of the source hop.
    """
    params = net.params
    K, L, p = params.K, params.L, params.p_tx
    rates = [0.0] * (K + 2)
    rates[K + 1] = math.inf
    qs: list[object] = [0.0] * (K + 2)
    streams: list[tuple[float, ...]] = [()] * (K + 2)
    streams[K + 1] = (math.inf,) * L

    q_here = np.zeros(L)
    for s in range(K + 1, 0, -1):
        hop = net.desired(path, s - 1)
        stage = QuantizedStage(hop.entries, q_here, p)
        r_vec = _stage_stream_rates(stage, kind, max_int)
        rates[s - 1] = float(max(np.min(r_vec), 0.0))
        streams[s - 1] = tuple(float(r) for r in r_vec)
        if s - 1 >= 1:
            prev = net.desired(path, s - 2)
            q_next = np.empty(L)
            for j in range(L):
                if r_vec[j] <= _RATE_FLOOR:
                    q_next[j] = _DEAD_LEVEL
                else:
                    q_next[j] = wyner_ziv_level(prev.row_power(j), p, float(r_vec[j]))
            qs[s - 1] = tuple(q_next)
            q_here = q_next

    return RateLadder(tuple(rates), tuple(qs), tuple(streams))
