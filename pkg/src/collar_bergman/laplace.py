"""Laplace-method machinery for integrals of exp(g) with concave g."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .quadrature import (
    DEFAULT_SPEC,
    QuadSpec,
    integrate_log,
    integrate_log_halfline,
)
from .xreal import XReal

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class LaplaceResult:
    """Second-order Laplace data for one integral of ``exp(g)``.

    ``estimate`` uses the standard constant sqrt(2*pi/|g''|). The tails are the
    concave-tail bounds at ``t_star -/+ halfwidth`` (None when no derivative
    was supplied).
    """

    t_star: float
    g_star: float
    g2_star: float
    estimate: XReal
    left_tail: Optional[XReal] = None
    right_tail: Optional[XReal] = None
    halfwidth: Optional[float] = None

    @property
    def printed_estimate(self) -> XReal:
        # the variant printed with sqrt(pi/(2|g''|)) * ..., i.e. a factor 1/sqrt(2)
        return XReal(1, self.estimate.logmag - 0.5 * math.log(2.0))


def maximize_concave(dg: Callable[[float], float], lo: float, hi: float,
                     d2g: Optional[Callable[[float], float]] = None, max_iter: int = 200) -> float:
    """Root of the decreasing function ``dg`` in ``[lo, hi]``.

    Newton steps (with ``d2g`` if given, otherwise secant slopes) are accepted
    only while they stay inside the current bracket and at least halve the
    previous step; anything else falls back to bisection.
    """
    flo, fhi = dg(lo), dg(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo > 0 > fhi):
        raise ValueError(f"maximizer not bracketed: dg({lo})={flo}, dg({hi})={fhi}")
    target = 1e-12 * max(1.0, abs(flo))

    x_prev, f_prev = lo, flo
    x = 0.5 * (lo + hi)
    last_step = hi - lo
    for _ in range(max_iter):
        fx = dg(x)
        if abs(fx) <= target:
            return x
        if fx > 0:
            lo = x
        else:
            hi = x
        if d2g is not None:
            slope = d2g(x)
        elif x != x_prev:
            slope = (fx - f_prev) / (x - x_prev)
        else:
            slope = 0.0
        x_prev, f_prev = x, fx
        x_new = x - fx / slope if slope < 0 and math.isfinite(slope) else math.nan
        if not (lo < x_new < hi) or abs(x_new - x) > 0.5 * last_step:
            x_new = 0.5 * (lo + hi)
        last_step = abs(x_new - x)
        if x_new == x or x_new in (lo, hi) and hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            break
        x = x_new
    # bracket collapsed to float resolution: best available point
    return min((lo, hi, x), key=lambda p: abs(dg(p)))


def concave_tail_bound(f_x0: float, df_x0: float) -> XReal:
    """Bound exp(f(x0)) / -f'(x0) on the integral of exp(f) over [x0, inf)."""
    if not df_x0 < 0:
        raise ValueError(f"tail bound needs a negative derivative, got {df_x0}")
    return XReal(1, f_x0 - math.log(-df_x0))


def laplace_estimate(g: Callable[[float], float], g2: Callable[[float], float], t_star: float,
                     dg: Optional[Callable[[float], float]] = None,
                     halfwidth: Optional[float] = None) -> LaplaceResult:
    g2_star = float(g2(t_star))
    if not g2_star < 0:
        raise ValueError(f"not locally concave: g''(t*)={g2_star}")
    g_star = float(g(t_star))
    est = XReal(1, g_star + HALF_LOG_2PI - 0.5 * math.log(-g2_star))
    if halfwidth is None:
        halfwidth = 3.0 / math.sqrt(-g2_star)
    left = right = None
    if dg is not None:
        tr = t_star + halfwidth
        tl = t_star - halfwidth
        right = concave_tail_bound(float(g(tr)), float(dg(tr)))
        left = concave_tail_bound(float(g(tl)), -float(dg(tl)))
    return LaplaceResult(t_star, g_star, g2_star, est, left, right, halfwidth)


def window_masses(logf, center: float, halfwidth: float, spec: QuadSpec = DEFAULT_SPEC, *,
                  dlogf=None, lo: float = -math.inf, hi: float = math.inf):
    """Return (inside, outside) integrals for the window ``|t - center| < halfwidth``.

    The outside mass is integrated directly rather than obtained by
    subtraction, so tiny outside fractions keep full relative accuracy.
    """
    if not halfwidth > 0:
        raise ValueError("halfwidth must be positive")
    wl = max(lo, center - halfwidth)
    wr = min(hi, center + halfwidth)
    inside = integrate_log(logf, wl, wr, spec, points=(center,))
    outside = XReal.zero()
    step = max(halfwidth, 1e-300)
    if wr < hi:
        if math.isinf(hi):
            if dlogf is None:
                raise ValueError("infinite domain needs dlogf for tail truncation")
            outside += integrate_log_halfline(logf, dlogf, wr, spec, step=step)
        else:
            outside += integrate_log(logf, wr, hi, spec)
    if wl > lo:
        if math.isinf(lo):
            if dlogf is None:
                raise ValueError("infinite domain needs dlogf for tail truncation")
            outside += integrate_log_halfline(
                lambda s: logf(-s), lambda s: -dlogf(-s), -wl, spec, step=step,
            )
        else:
            outside += integrate_log(logf, lo, wl, spec)
    return inside, outside


def window_mass_fraction(logf, center: float, halfwidth: float, spec: QuadSpec = DEFAULT_SPEC, *,
                         dlogf=None, lo: float = -math.inf, hi: float = math.inf) -> float:
    inside, outside = window_masses(logf, center, halfwidth, spec, dlogf=dlogf, lo=lo, hi=hi)
    frac = float(inside / (inside + outside))
    return min(1.0, max(0.0, frac))


def outside_mass_fraction(logf, center: float, halfwidth: float, spec: QuadSpec = DEFAULT_SPEC, *,
                          dlogf=None, lo: float = -math.inf, hi: float = math.inf) -> XReal:
    """Fraction of the integral outside the window, as an XReal."""
    inside, outside = window_masses(logf, center, halfwidth, spec, dlogf=dlogf, lo=lo, hi=hi)
    return outside / (inside + outside)


def concentration_bound(k: int) -> float:
    """Relative error k**(-ln k + 3/2) claimed for the window sqrt(k) ln k / a."""
    return k ** (-math.log(k) + 1.5)


def concentration_halfwidth(k: int, a: int) -> float:
    return math.sqrt(k) * math.log(k) / abs(a)

