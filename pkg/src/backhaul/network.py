"""Layered multihop topologies and per-stage channel matrices.

A layered network carries L simultaneous message streams over two
node-disjoint relay paths of K stages each.  Hop k (k = 0..K) maps the L
transmitters of stage k to the L receivers of stage k+1; stage 0 is the
source bank and stage K+1 is the L-antenna destination.  Every hop is an
L x L complex matrix drawn by one of three gain models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError


class PowerRule(Enum):
    """Per-node transmit power convention."""

    PER_NODE = "per-node"  # p_tx = snr
    PER_NODE_SCALED = "per-node-scaled"  # p_tx = snr / L, keeps L*p_tx finite


@dataclass(frozen=True)
class WynerModel:
    """Banded stage coupling: each receiver hears its own transmitter at
    gain 1 and the two adjacent transmitters at gain alpha."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha:
            raise ParameterError(f"alpha must be non-negative, got {self.alpha}")


@dataclass(frozen=True)
class DenseIIDModel:
    """Fully coupled stages: i.i.d. unit-variance complex Gaussian gains."""


@dataclass(frozen=True)
class ClusterModel:
    """Grid-selected relays: gains of magnitude sqrt(snr) with i.i.d.
    uniform phases.  snr is absorbed into the gain, so p_tx is 1.

    n_c is the relay count per grid cluster (must be >= L); phase_seed,
    when given, decouples the phase draw from the build seed.
    """

    n_c: int
    phase_seed: int | None = None

    def __post_init__(self) -> None:
        if self.n_c < 1:
            raise ParameterError(f"n_c must be positive, got {self.n_c}")


Model = WynerModel | DenseIIDModel | ClusterModel

_DEFAULT_RULE = {
    WynerModel: PowerRule.PER_NODE,
    DenseIIDModel: PowerRule.PER_NODE_SCALED,
    ClusterModel: PowerRule.PER_NODE,
}


@dataclass(frozen=True)
class NetworkParams:
    """Immutable description of a layered network instance.

    L       streams / relays per stage (>= 1)
    K       relay stages per path (>= 0; 0 means source -> destination)
    snr     transmit SNR (linear, > 0)
    model   gain model for every hop
    power_rule  transmit power convention; defaults to the rule that the
                model's analysis assumes.  Pass allow_mismatch=True to
                study off-convention combinations deliberately.
    """

    L: int
    K: int
    snr: float
    model: Model
    power_rule: PowerRule | None = None
    allow_mismatch: bool = False

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ParameterError(f"L must be >= 1, got {self.L}")
        if self.K < 0:
            raise ParameterError(f"K must be >= 0, got {self.K}")
        if not self.snr > 0.0 or not math.isfinite(self.snr):
            raise ParameterError(f"snr must be positive and finite, got {self.snr}")
        if not isinstance(self.model, (WynerModel, DenseIIDModel, ClusterModel)):
            raise ParameterError(f"unknown model {self.model!r}")
        if isinstance(self.model, ClusterModel) and self.model.n_c < self.L:
            raise ParameterError(
                f"cluster size n_c={self.model.n_c} must be >= L={self.L}"
            )
        default = _DEFAULT_RULE[type(self.model)]
        if self.power_rule is None:
            object.__setattr__(self, "power_rule", default)
        elif self.power_rule is not default and not self.allow_mismatch:
            raise ParameterError(
                f"{type(self.model).__name__} pairs with {default.value}; "
                "pass allow_mismatch=True to override"
            )

    @property
    def p_tx(self) -> float:
        """Per-node transmit power implied by the power rule.

        Cluster gains already carry snr, so the cluster model transmits at
        unit power regardless of rule.
        """
        if isinstance(self.model, ClusterModel):
            return 1.0
        if self.power_rule is PowerRule.PER_NODE:
            return self.snr
        return self.snr / self.L

    @property
    def inr(self) -> float | None:
        """Interference-to-noise ratio alpha^2 * snr (banded model only)."""
        if isinstance(self.model, WynerModel):
            return self.model.alpha**2 * self.snr
        return None


class MatrixKind(Enum):
    DESIRED = "desired"  # stage k -> stage k+1, same path
    INTRA_PATH = "intra-path"  # stage k+1 -> stage k feedback, same path
    INTER_PATH = "inter-path"  # same stage, other path


class ChannelMatrix:
    """An L x L hop matrix tagged with its role in the layered network.

    Rows index receivers, columns index transmitters.  Entries are
    read-only.
    """

    __slots__ = ("entries", "kind", "stage_index", "path_index")

    def __init__(
        self,
        entries: np.ndarray,
        kind: MatrixKind,
        stage_index: int,
        path_index: int,
    ) -> None:
        arr = np.array(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ParameterError(f"hop matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        self.entries = arr
        self.kind = kind
        self.stage_index = stage_index
        self.path_index = path_index

    @property
    def L(self) -> int:
        return self.entries.shape[0]

    def row_power(self, row: int) -> float:
        """Total gain power seen by one receiver: sum_l |h[row, l]|^2."""
        return float(np.sum(np.abs(self.entries[row]) ** 2))


def _stage_rng(seed: int, path: int, stage: int) -> np.random.Generator:
    # Independent stream per (seed, path, stage): stable across runs and
    # across however the caller parallelizes stages.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path, stage)))


def _draw_entries(params: NetworkParams, seed: int, path: int, stage: int) -> np.ndarray:
    L = params.L
    model = params.model
    if isinstance(model, WynerModel):
        h = np.zeros((L, L), dtype=complex)
        idx = np.arange(L)
        h[idx, idx] = 1.0
        if L > 1:
            h[idx[:-1], idx[:-1] + 1] = model.alpha
            h[idx[1:], idx[1:] - 1] = model.alpha
        return h
    if isinstance(model, DenseIIDModel):
        rng = _stage_rng(seed, path, stage)
        re = rng.standard_normal((L, L))
        im = rng.standard_normal((L, L))
        return (re + 1j * im) / math.sqrt(2.0)
    # Cluster model: constant magnitude sqrt(snr), uniform phase.  The
    # layered abstraction holds the post-routing hop, where every selected
    # transmitter is in range of every selected receiver; out-of-range
    # zeros only appear in matrices extracted by the routing module.
    entropy = model.phase_seed if model.phase_seed is not None else seed
    rng = _stage_rng(entropy, path, stage)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(L, L))
    return math.sqrt(params.snr) * np.exp(1j * theta)


class LayeredNetwork:
    """All hop matrices of one network draw, both paths."""

    def __init__(
        self,
        params: NetworkParams,
        seed: int,
        stages: dict[tuple[int, int], ChannelMatrix],
    ) -> None:
        self.params = params
        self.seed = seed
        self._stages = stages

    @classmethod
    def from_matrices(
        cls,
        params: NetworkParams,
        seed: int,
        per_path: dict[int, list[np.ndarray]],
    ) -> "LayeredNetwork":
        """Wrap externally produced hop matrices (e.g. routed extractions).

        per_path maps path index (1 or 2) to a list of K+1 hop matrices in
        stage order.
        """
        stages: dict[tuple[int, int], ChannelMatrix] = {}
        for path, mats in per_path.items():
            if len(mats) != params.K + 1:
                raise ParameterError(
                    f"path {path} needs {params.K + 1} hop matrices, got {len(mats)}"
                )
            for k, m in enumerate(mats):
                cm = ChannelMatrix(m, MatrixKind.DESIRED, k, path)
                if cm.L != params.L:
                    raise ParameterError(
                        f"hop matrix at (path={path}, stage={k}) has size {cm.L}, expected {params.L}"
                    )
                stages[(path, k)] = cm
        return cls(params, seed, stages)

    @property
    def paths(self) -> tuple[int, ...]:
        return tuple(sorted({p for p, _ in self._stages}))

    def desired(self, path: int, stage: int) -> ChannelMatrix:
        """Hop matrix from stage `stage` to stage `stage`+1 on `path`."""
        try:
            return self._stages[(path, stage)]
        except KeyError:
            raise ParameterError(
                f"no hop (path={path}, stage={stage}); stages run 0..{self.params.K}"
            ) from None

    def intra_path(self, path: int, stage: int) -> ChannelMatrix:
        """Next-stage feedback interference; zero in the baseline model."""
        L = self.params.L
        return ChannelMatrix(np.zeros((L, L)), MatrixKind.INTRA_PATH, stage, path)

    def inter_path(self, path: int, stage: int) -> ChannelMatrix:
        """Cross-path same-stage interference; zero in the baseline model."""
        L = self.params.L
        return ChannelMatrix(np.zeros((L, L)), MatrixKind.INTER_PATH, stage, path)

    def dump(self) -> str:
        """Line-oriented text dump: `L K model seed` header, then one line
        per (path, stage, row) of comma-separated re:im pairs."""
        m = self.params.model
        if isinstance(m, WynerModel):
            token = f"wyner:{m.alpha:g}"
        elif isinstance(m, DenseIIDModel):
            token = "dense"
        else:
            token = f"cluster:{m.n_c}" + (
                f":{m.phase_seed}" if m.phase_seed is not None else ""
            )
        lines = [f"{self.params.L} {self.params.K} {token} {self.seed}"]
        for path in self.paths:
            for stage in range(self.params.K + 1):
                h = self.desired(path, stage).entries
                for row in range(self.params.L):
                    pairs = ",".join(
                        f"{v.real:.17g}:{v.imag:.17g}" for v in h[row]
                    )
                    lines.append(pairs)
        return "\n".join(lines) + "\n"


def build_network(params: NetworkParams, seed: int) -> LayeredNetwork:
    """Draw every hop matrix for both paths.

    Identical (params, seed) reproduce bit-identical matrices: each
    (path, stage) pair gets its own counter-derived generator stream.
    """
    stages: dict[tuple[int, int], ChannelMatrix] = {}
    for path in (1, 2):
        for stage in range(params.K + 1):
            entries = _draw_entries(params, seed, path, stage)
            stages[(path, stage)] = ChannelMatrix(
                entries, MatrixKind.DESIRED, stage, path
            )
    return LayeredNetwork(params, seed, stages)


def stage_row_power(net: LayeredNetwork, path: int, stage: int, row: int) -> float:
    """Receiver-side gain power sum_l |h[row, l]|^2 for one hop.

    This is the channel part of a relay's received power; multiply by
    p_tx and add unit noise to get the full quantizer input power.
    """
    return net.desired(path, stage).row_power(row)
