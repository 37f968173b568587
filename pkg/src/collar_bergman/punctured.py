"""Punctured disk with the Poincare metric.

Everything is radial, so functions are keyed on ``tau = -log|z|`` rather than
on ``z``. With the frame ``dz/z`` the pointwise norm of ``z**a (dz/z)**(k+1)``
is ``(2 tau**2)**(k+1) * exp(-2 a tau)`` and the area form is
``2 pi dtau / tau**2`` after the angular integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laplace import LaplaceResult, laplace_estimate, outside_mass_fraction, concentration_halfwidth
from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_log, integrate_log_halfline
from .xreal import XReal, log_factorial, logsumexp

# relative size of the certified tail that we accept as negligible
TAIL_RTOL = 1e-12


@dataclass(frozen=True)
class PuncturedParams:
    k: int
    cutoff_a: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.cutoff_a is not None and self.cutoff_a < 4 * self.k:
            raise ValueError("cutoff_a must be at least 4k")


class TailNotCertified(ValueError):
    pass


def _check_index(a: int):
    if a < 1:
        raise ValueError(f"non-integrable index a={a}: sections need a >= 1 on the punctured disk")


def log_prefactor(k: int) -> float:
    return (k + 2) * math.log(2.0) + math.log(math.pi)


def y_norm_exact(k: int, a: int) -> XReal:
    """Closed form 2^(k+2) pi (2k)! / (2a)^(2k+1)."""
    _check_index(a)
    return XReal(1, log_prefactor(k) + log_factorial(2 * k) - (2 * k + 1) * math.log(2 * a))


def norm_exponent(k: int, a: int):
    """g(tau) = -2 a tau + 2k log tau and its first two derivatives."""
    def g(tau):
        return -2 * a * tau + 2 * k * np.log(tau)

    def dg(tau):
        return -2 * a + 2 * k / tau

    def d2g(tau):
        return -2 * k / tau ** 2

    return g, dg, d2g


def y_norm_quad(k: int, a: int, spec: QuadSpec = DEFAULT_SPEC) -> XReal:
    """Y_a by quadrature of 2^(k+2) pi * int_0^inf exp(-2 a tau + 2k log tau)."""
    _check_index(a)
    g, dg, _ = norm_exponent(k, a)
    peak = k / a
    left = integrate_log(g, 0.0, peak, spec)
    right = integrate_log_halfline(g, dg, peak, spec, step=math.sqrt(k) / a)
    return XReal(1, log_prefactor(k)) * (left + right)


def y_norm_laplace(k: int, a: int) -> LaplaceResult:
    """Laplace data for Y_a, with the constant 2^(k+2) pi folded into g."""
    _check_index(a)
    g, dg, d2g = norm_exponent(k, a)
    c = log_prefactor(k)
    return laplace_estimate(
        lambda t: c + float(g(t)), d2g, k / a,
        dg=dg, halfwidth=concentration_halfwidth(k, a) if k > 1 else None,
    )


def y_outside_mass(k: int, a: int, halfwidth: float | None = None,
                   spec: QuadSpec = DEFAULT_SPEC) -> XReal:
    """Fraction of Y_a carried outside ``|tau - k/a| < halfwidth``."""
    _check_index(a)
    g, dg, _ = norm_exponent(k, a)
    if halfwidth is None:
        halfwidth = concentration_halfwidth(k, a)
    return outside_mass_fraction(g, k / a, halfwidth, spec, dlogf=dg, lo=0.0)


def log_term(k: int, a: int, tau: float) -> float:
    """log of (2 tau^2)^(k+1) exp(-2 a tau) / Y_a, the squared norm of the unit section."""
    return (k + 1) * math.log(2 * tau * tau) - 2 * a * tau - y_norm_exact(k, a).logmag


def _log_term_series(k: int, tau: float, a: int) -> float:
    # same quantity via the series coefficient a^(2k+1); used for the tail ratio
    return ((2 * k) * math.log(2.0) + (2 * k + 2) * math.log(tau) - math.log(math.pi)
            - log_factorial(2 * k) + (2 * k + 1) * math.log(a) - 2 * a * tau)


def _certified_tail(k: int, tau: float, cutoff: int, log_partial: float) -> float | None:
    """Log of a geometric bound on sum_{a > cutoff} term_a, or None if not certified.

    log term_a is concave in a, so the ratio term_{a+1}/term_a is
    nonincreasing and term_cutoff * r / (1 - r) bounds the tail once r < 1.
    """
    log_r = _log_term_series(k, tau, cutoff + 1) - _log_term_series(k, tau, cutoff)
    if log_r >= math.log(0.5):
        return None
    r = math.exp(log_r)
    return _log_term_series(k, tau, cutoff) + log_r - math.log1p(-r)


def default_cutoff(k: int, tau: float, max_cutoff: int = 100_000) -> int:
    """Smallest cutoff >= 4k whose geometric tail is certified below 1e-12 relative."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if -2 * tau >= math.log(0.5):
        # the limiting term ratio exp(-2 tau) never drops below 1/2
        raise TailNotCertified(f"tail not certified: tau={tau} <= ln(2)/2")
    a = 4 * k
    while a <= max_cutoff:
        logs = [log_term(k, b, tau) for b in range(1, a + 1)]
        tail = _certified_tail(k, tau, a, logsumexp(logs))
        if tail is not None and tail <= math.log(TAIL_RTOL) + logsumexp(logs):
            return a
        # jump close to where the terms start decaying geometrically
        a = max(a + 1, int(a * 1.25))
    raise TailNotCertified(f"no certified cutoff below {max_cutoff} at tau={tau}")


def _terms(k: int, tau: float, cutoff_a: int | None):
    if tau <= 0:
        raise ValueError("tau must be positive")
    if cutoff_a is None:
        cutoff_a = default_cutoff(k, tau)
    logs = [log_term(k, a, tau) for a in range(1, cutoff_a + 1)]
    partial = logsumexp(logs)
    tail = _certified_tail(k, tau, cutoff_a, partial)
    if tail is None or tail > math.log(TAIL_RTOL) + partial:
        raise TailNotCertified(f"tail not certified: cutoff_a={cutoff_a} too small for tau={tau}")
    return logs, partial


def rho0_density(k: int, tau: float, cutoff_a: int | None = None) -> XReal:
    """Bergman density of the (k+1)-th power of the canonical bundle on the punctured disk."""
    _, partial = _terms(k, tau, cutoff_a)
    return XReal(1, partial)


def term_weights_punctured(k: int, tau: float, cutoff_a: int | None = None):
    """List of (a, weight) with weight_a = term_a / sum of terms."""
    logs, partial = _terms(k, tau, cutoff_a)
    w = [math.exp(v - partial) for v in logs]
    s = math.fsum(w)
    return [(a, x / s) for a, x in zip(range(1, len(w) + 1), w)]
