"""Safeguarded Newton iteration on a sign-change bracket."""

from __future__ import annotations

import math
from collections.abc import Callable

from .errors import ConvergenceFailure


def newton_bisect(
    func: Callable[[float], float],
    dfunc: Callable[[float], float],
    lo: float,
    hi: float,
    x0: float | None = None,
    maxiter: int = 200,
) -> tuple[float, int]:
    """Find a root of ``func`` in ``[lo, hi]``.

    ``func(lo)`` and ``func(hi)`` must differ in sign. Newton steps are taken
    from the current iterate; any step that leaves the bracket (or a zero
    derivative) is replaced by bisection. The bracket shrinks every iteration,
    and iteration stops once the step is below a few ulps of the iterate or
    ``func`` vanishes exactly.

    Returns the root and the number of iterations used.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if (flo > 0) == (fhi > 0):
        raise ConvergenceFailure("no sign change on bracket", lo=lo, hi=hi, flo=flo, fhi=fhi)
    increasing = fhi > 0

    x = 0.5 * (lo + hi) if x0 is None or not lo < x0 < hi else x0
    for it in range(1, maxiter + 1):
        fx = func(x)
        if fx == 0.0:
            return x, it
        if (fx > 0) == increasing:
            hi = x
        else:
            lo = x
        d = dfunc(x)
        step = fx / d if d != 0.0 and math.isfinite(d) else math.nan
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        step_tiny = abs(x_new - x) <= 4.0 * math.ulp(max(abs(x), abs(x_new)))
        if step_tiny or hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi))):
            return x_new, it
        x = x_new
    raise ConvergenceFailure("iteration budget exhausted", lo=lo, hi=hi, x=x, maxiter=maxiter)
