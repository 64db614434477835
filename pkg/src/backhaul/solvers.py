"""Scalar bracketing solvers used by the rate recursions.

Both solvers are deliberately plain: the objective evaluations are cheap
(log-dets of small matrices or one quadrature), so robustness and exact
reproducibility matter more than iteration counts.
"""

from __future__ import annotations

from typing import Callable

from .errors import NumericalError

_INVPHI = 0.6180339887498949  # 1/phi, golden-section step ratio


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    f_tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Root of f on [lo, hi] by bisection, stopping on |f| <= f_tol.

    Requires f(lo) <= 0 <= f(hi).  Raises NumericalError if the bracket
    does not hold or the residual tolerance is not reached.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo > 0.0 or fhi < 0.0:
        raise NumericalError(
            f"bisection bracket violated: f({lo})={flo:.3g}, f({hi})={fhi:.3g}"
        )
    if abs(flo) <= f_tol:
        return lo
    if abs(fhi) <= f_tol:
        return hi
    a, b = lo, hi
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) <= f_tol:
            return mid
        if fm < 0.0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-15 * max(1.0, abs(b)):
            # Interval exhausted at float resolution; accept the midpoint if
            # the residual is merely loose, not wrong.
            mid = 0.5 * (a + b)
            if abs(f(mid)) <= 1e3 * f_tol:
                return mid
            break
    raise NumericalError("bisection failed to meet residual tolerance")


def golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    x_tol: float = 1e-9,
) -> tuple[float, float]:
    """Maximize f on [lo, hi] by golden-section search.

    Returns (argmax, value).  Assumes f is unimodal on the bracket; on a
    non-unimodal objective this still returns a valid interior candidate,
    which callers guard by also evaluating known-good points.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    while (b - a) > x_tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)
