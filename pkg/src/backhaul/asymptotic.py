"""Closed-form large-system (L -> infinity) symmetric rates.

Two regimes admit limits that collapse the stage bound to scalar
recursions: the banded model, whose per-stream log-det converges to a
spectral integral over the band symbol, and the dense i.i.d. model,
whose log-det converges to the classic square-matrix limit.  In both,
quantization at level Q enters only by scaling the effective receive
power by 1/(1 + Q), parameterized below through x = log2(1 + 1/Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError, ParameterError
from .rate_core import OPTIMAL, QuantizationPolicy, RateLadder
from .solvers import bisect_root

_LOG2E = math.log2(math.e)
_RATE_FLOOR = 1e-12


@dataclass(frozen=True)
class SparseParams:
    """Banded-model limit: snr, band coupling gamma, stage count K.

    policy selects the quantization rule per stage (default: optimal,
    i.e. the fixed-point solve); the named fixed rules reuse the same
    spectral integral at their own levels.
    """

    snr: float
    gamma: float
    K: int
    policy: QuantizationPolicy = OPTIMAL

    def __post_init__(self) -> None:
        if not self.snr > 0.0:
            raise ParameterError(f"snr must be positive, got {self.snr}")
        if self.gamma < 0.0:
            raise ParameterError(f"gamma must be non-negative, got {self.gamma}")
        if self.K < 0:
            raise ParameterError(f"K must be >= 0, got {self.K}")


@dataclass(frozen=True)
class DenseParams:
    """Dense-model limit: snr is the total L * p_tx, kept finite."""

    snr: float
    K: int
    policy: QuantizationPolicy = OPTIMAL

    def __post_init__(self) -> None:
        if not self.snr > 0.0:
            raise ParameterError(f"snr must be positive, got {self.snr}")
        if self.K < 0:
            raise ParameterError(f"K must be >= 0, got {self.K}")


def _band_integrand(theta: np.ndarray, power: float, gamma: float) -> np.ndarray:
    sym = 1.0 + 2.0 * gamma * np.cos(2.0 * math.pi * theta)
    return np.log2(1.0 + power * sym * sym)


@lru_cache(maxsize=4096)
def _band_integral(power: float, gamma: float) -> float:
    """Spectral mean of log2(1 + power * (band symbol)^2) over one period.

    Adaptive quadrature with the near-zeros of the symbol passed as
    split points; a dense uniform rule backs it up if the adaptive
    estimate reports poor convergence (the integrand is smooth and
    periodic, so the uniform rule converges fast).
    """
    if power == 0.0:
        return 0.0
    points = []
    if 2.0 * gamma > 1.0:
        t0 = math.acos(-1.0 / (2.0 * gamma)) / (2.0 * math.pi)
        points = [t0, 1.0 - t0]
    val, err = quad(
        _band_integrand,
        0.0,
        1.0,
        args=(power, gamma),
        epsabs=1e-12,
        epsrel=1e-12,
        limit=400,
        points=points or None,
    )
    if err > 1e-10:
        theta = (np.arange(2**16) + 0.5) / 2**16
        val = float(np.mean(_band_integrand(theta, power, gamma)))
    return float(val)


def wyner_band_rate(x: float, snr: float, gamma: float) -> float:
    """Large-system per-stream rate of the banded hop when quantization
    leaves a fraction (1 - 2^-x) of the receive power usable.

    x = log2(1 + 1/Q); x = inf is the unquantized hop.
    """
    if x < 0.0:
        raise ParameterError(f"x must be non-negative, got {x}")
    frac = 1.0 if math.isinf(x) else 1.0 - 2.0 ** (-x)
    return _band_integral(snr * frac, gamma)


def iid_mimo_rate(x: float) -> float:
    """Large-system per-stream rate of a square i.i.d. hop at total snr x.

    Continuous at 0 with value 0; increasing and concave in x.
    """
    if x < 0.0:
        raise ParameterError(f"snr must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    root = math.sqrt(1.0 + 4.0 * x)
    return 2.0 * math.log2((1.0 + root) / 2.0) - _LOG2E / (4.0 * x) * (root - 1.0) ** 2


def _x_of_q(q: float) -> float:
    return math.log2(1.0 + 1.0 / q) if q > 0.0 else math.inf


def _q_of_x(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / (2.0**x - 1.0)


def sparse_ladder(p: SparseParams) -> RateLadder:
    """Banded-limit recursion from the destination to the sources.

    The destination stage decodes the raw hop: r_K = band rate at full
    power.  Each relay stage then balances the binning margin r_k - x
    against the band rate at fraction x.  The optimal policy solves the
    fixed point F(x) = r_k - x by bisection on [0, r_k] (residual below
    1e-9); fixed rules evaluate min(r_k - x, F(x)) at their own x.
    """
    snr, gamma, K = p.snr, p.gamma, p.K
    policy = p.policy
    if policy.kind == "fixed" and (policy.values is None or len(policy.values) != K):
        raise ParameterError(f"fixed policy needs exactly K={K} levels")

    rates = [0.0] * (K + 2)
    qs: list[object] = [0.0] * (K + 2)
    rates[K + 1] = math.inf
    rates[K] = wyner_band_rate(math.inf, snr, gamma)
    row_power = 1.0 + 2.0 * gamma**2  # interior-row gain power of the band

    for k in range(K, 0, -1):
        r_next = rates[k]
        if r_next <= _RATE_FLOOR:
            rates[k - 1] = 0.0
            qs[k] = math.inf
            continue
        if policy.kind == "optimal":
            x = bisect_root(
                lambda xx: wyner_band_rate(xx, snr, gamma) - (r_next - xx),
                0.0,
                r_next,
                f_tol=1e-10,
            )
            r = wyner_band_rate(x, snr, gamma)
            q: object = _q_of_x(x)
        else:
            if policy.kind == "noise_level":
                q = 1.0
            elif policy.kind == "stage_depth":
                q = float(K)
            elif policy.kind == "wyner_ziv":
                q = (1.0 + row_power * snr) / (2.0**r_next - 1.0)
            elif policy.kind == "fixed":
                q = float(policy.values[k - 1])  # type: ignore[index]
            else:
                raise ParameterError(f"unknown policy kind {policy.kind!r}")
            x = _x_of_q(float(q))
            r = min(r_next - x, wyner_band_rate(x, snr, gamma))
        rates[k - 1] = max(0.0, r)
        qs[k] = q

    return RateLadder(tuple(rates), tuple(qs))


def dense_ladder(p: DenseParams) -> RateLadder:
    """Dense-limit recursion r_{k-1} = min(r_k - log2(1 + 1/Q), C(snr/(1+Q))).

    The optimal policy equalizes the two terms by bisection on
    [Q_min, Q_max] with Q_min = 1/(2^r - 1) (binning margin zero) and
    Q_max = (1 + snr)/(2^r - 1) (matched distortion, second term
    binding); the bracket property f(Q_min) <= 0 <= f(Q_max) is asserted
    at runtime.
    """
    snr, K = p.snr, p.K
    policy = p.policy
    if policy.kind == "fixed" and (policy.values is None or len(policy.values) != K):
        raise ParameterError(f"fixed policy needs exactly K={K} levels")

    rates = [0.0] * (K + 2)
    qs: list[object] = [0.0] * (K + 2)
    rates[K + 1] = math.inf
    rates[K] = iid_mimo_rate(snr)

    for k in range(K, 0, -1):
        r_next = rates[k]
        if r_next <= _RATE_FLOOR:
            rates[k - 1] = 0.0
            qs[k] = math.inf
            continue

        def gap(q: float, r_next: float = r_next) -> float:
            # binning margin minus covered rate; increasing in q
            return (r_next - math.log2(1.0 + 1.0 / q)) - iid_mimo_rate(
                snr / (1.0 + q)
            )

        if policy.kind == "optimal":
            denom = 2.0**r_next - 1.0
            q_min = 1.0 / denom
            q_max = (1.0 + snr) / denom
            if not (gap(q_min) <= 1e-12 and gap(q_max) >= -1e-12):
                raise NumericalError(
                    f"stage {k}: bracket violated, f(Q_min)={gap(q_min):.3g}, "
                    f"f(Q_max)={gap(q_max):.3g}"
                )
            q: object = bisect_root(gap, q_min, q_max, f_tol=1e-10)
            r = min(
                r_next - math.log2(1.0 + 1.0 / q), iid_mimo_rate(snr / (1.0 + q))
            )
        else:
            if policy.kind == "noise_level":
                q = 1.0
            elif policy.kind == "stage_depth":
                q = float(K)
            elif policy.kind == "wyner_ziv":
                q = (1.0 + snr) / (2.0**r_next - 1.0)
            elif policy.kind == "fixed":
                q = float(policy.values[k - 1])  # type: ignore[index]
            else:
                raise ParameterError(f"unknown policy kind {policy.kind!r}")
            r = min(
                r_next - math.log2(1.0 + 1.0 / q), iid_mimo_rate(snr / (1.0 + q))
            )
        rates[k - 1] = max(0.0, r)
        qs[k] = q

    return RateLadder(tuple(rates), tuple(qs))
