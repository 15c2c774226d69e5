"""Adaptive Simpson quadrature with an interval cap and error reporting."""
import sys
from dataclasses import dataclass

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float       # estimated absolute error
    intervals: int     # number of accepted subintervals


_ROUNDING = 256 * sys.float_info.epsilon


def adaptive_simpson(f, a, b, tol=1e-10, max_intervals=2 ** 20):
    """Integrate a scalar function over ``[a, b]``.

    Intervals are bisected until the Richardson estimate
    ``|S_left + S_right - S_whole| / 15`` drops below the interval's share
    of ``tol``, or below the rounding noise ``~ ulp(max |f|) * width`` of
    the interval, which no bisection can improve. The accepted
    values carry the Richardson correction.

    Raises
    ------
    QuadratureError
        When more than ``max_intervals`` subintervals would be needed. The
        exception carries the best value and the achieved error estimate.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    width = b - a
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = width / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole)]
    fmax = max(abs(fa), abs(fm), abs(fb))
    total = 0.0
    err = 0.0
    accepted = 0
    while stack:
        lo, hi, flo, fmid, fhi, s = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * flm + fmid)
        right = h / 12.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        fmax = max(fmax, abs(flm), abs(frm))
        local_tol = max(tol * h / width, _ROUNDING * fmax * h)
        # the second condition stops bisection once the interval is at the
        # resolution of floating point
        if abs(delta) <= 15.0 * local_tol or mid <= lo or mid >= hi:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            accepted += 1
            continue
        if accepted + len(stack) + 2 > max_intervals:
            partial = total + left + right + sum(item[5] for item in stack)
            raise QuadratureError(
                f"interval cap {max_intervals} reached; achieved error ~{err + abs(delta):.3e}",
                sign * partial,
                err + abs(delta) / 15.0,
            )
        stack.append((mid, hi, fmid, frm, fhi, right))
        stack.append((lo, mid, flo, flm, fmid, left))
    return QuadratureResult(sign * total, err, accepted)
