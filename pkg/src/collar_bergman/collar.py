"""The collar model: C* with the hyperbolic metric f(t) (dt^2 + dtheta^2).

Coordinates: ``t = log|z|``, the arc-length parameter ``u`` along the
t-curves, and the distance-to-the-end coordinate ``tau = pi/(2 eps) - t``.
Solving (log f)'' = 2f with f(0) = eps^2, f'(0) = 0 gives

    f = eps^2 cosh^2 u,   eps t = gd(u) = 2 atan(tanh(u/2)),

so ``cosh u = 1/cos(eps t)`` and ``f = eps^2 / cos^2(eps t) = eps^2 / sin^2(eps tau)``.
In the tau coordinate the norm integrals become

    I_a = 2^(k+2) pi exp(pi a / eps) * int_0^(pi/eps) exp(-2 a tau) (sin(eps tau)/eps)^(2k) dtau

which is the form used for quadrature when ``a != 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .laplace import LaplaceResult, laplace_estimate, outside_mass_fraction
from .punctured import TailNotCertified, log_prefactor
from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_log_concave
from .xreal import XReal, logsumexp

TAIL_RTOL = 1e-12
CUT_TAIL_GRID = 64


@dataclass(frozen=True)
class CollarParams:
    """One collar model: central geodesic of length 2 pi eps, bundle power k+1."""

    epsilon: float
    k: int
    cutoff_a: int | None = field(default=None)

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.1:
            raise ValueError(f"epsilon must lie in (0, 0.1], got {self.epsilon}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.epsilon * self.k < 0.5:
            raise ValueError("need epsilon * k < 0.5 so every maximizer sits inside the collar")
        if self.cutoff_a is None:
            object.__setattr__(self, "cutoff_a", max(4 * self.k, 8))
        elif self.cutoff_a < 1:
            raise ValueError("cutoff_a must be >= 1")

    @property
    def half_length(self) -> float:
        """pi / (2 eps): the collar is |t| < half_length."""
        return math.pi / (2 * self.epsilon)

    def check_index(self, a: int):
        if abs(a) > self.cutoff_a:
            raise ValueError(f"|a|={abs(a)} exceeds cutoff_a={self.cutoff_a}")


def _check_t(epsilon: float, t):
    if np.any(np.abs(t) >= math.pi / (2 * epsilon)):
        raise ValueError("outside collar range: need |t| < pi/(2 eps)")


# coordinates ------------------------------------------------------------

def t_of_u(epsilon: float, u: float) -> float:
    return (2.0 / epsilon) * math.atan(math.tanh(0.5 * u))


def tau_of_u(epsilon: float, u: float) -> float:
    """pi/(2 eps) - t(u), computed without cancellation."""
    return (2.0 / epsilon) * math.atan(math.exp(-u))


def u_of_t(epsilon: float, t: float) -> float:
    _check_t(epsilon, t)
    # inverse Gudermannian of eps*t
    return math.asinh(math.tan(epsilon * t))


def u_of_tau(epsilon: float, tau: float) -> float:
    if not 0 < tau < math.pi / epsilon:
        raise ValueError("outside collar range: need 0 < tau < pi/eps")
    return -math.log(math.tan(0.5 * epsilon * tau))


def f_of_t(epsilon: float, t):
    """log f(t) = 2 log eps - 2 log cos(eps t); accepts arrays."""
    _check_t(epsilon, t)
    return 2.0 * math.log(epsilon) - 2.0 * np.log(np.cos(epsilon * np.asarray(t, dtype=float)))


def f_of_tau(epsilon: float, tau):
    """log f in the end coordinate: 2 log eps - 2 log sin(eps tau)."""
    return 2.0 * math.log(epsilon) - 2.0 * np.log(np.sin(epsilon * np.asarray(tau, dtype=float)))


def f_of_u(epsilon: float, u: float) -> float:
    """log f as a function of arc length: 2 log(eps cosh u)."""
    au = abs(u)
    # log cosh without overflow
    return 2.0 * (math.log(epsilon) + au + math.log1p(math.exp(-2 * au)) - math.log(2.0))


# norms ------------------------------------------------------------------

def _tau_star(epsilon: float, k: int, a: int) -> float:
    # maximizer of -2|a| tau + 2k log sin(eps tau): tan(eps tau) = k eps / |a|
    return math.atan(k * epsilon / abs(a)) / epsilon


@lru_cache(maxsize=4096)
def _log_norm(epsilon: float, k: int, a: int, rel_tol: float, max_depth: int) -> float:
    spec = QuadSpec(rel_tol=rel_tol, max_depth=max_depth)
    c = log_prefactor(k)
    half = math.pi / (2 * epsilon)
    if a == 0:
        def g(t):
            return -2 * k * math.log(epsilon) + 2 * k * np.log(np.cos(epsilon * t))

        def dg(t):
            return -2 * k * epsilon * math.tan(epsilon * t)

        width = 1.0 / (math.sqrt(2 * k) * epsilon)
        j = integrate_log_concave(g, dg, 0.0, spec, lo=-half, hi=half, step=width)
        return c + j.logmag

    b = abs(a)

    def h(tau):
        return -2 * b * tau + 2 * k * (np.log(np.sin(epsilon * tau)) - math.log(epsilon))

    def dh(tau):
        return -2 * b + 2 * k * epsilon / math.tan(epsilon * tau)

    ts = _tau_star(epsilon, k, b)
    curv = 2 * k * epsilon ** 2 / math.sin(epsilon * ts) ** 2
    j = integrate_log_concave(h, dh, ts, spec, lo=0.0, hi=math.pi / epsilon,
                              step=1.0 / math.sqrt(curv))
    return c + math.pi * b / epsilon + j.logmag


def _norm_unchecked(params: CollarParams, a: int, spec: QuadSpec) -> XReal:
    return XReal(1, _log_norm(params.epsilon, params.k, a, spec.rel_tol, spec.max_depth))


def collar_norm(params: CollarParams, a: int, spec: QuadSpec = DEFAULT_SPEC) -> XReal:
    """I_{eps,a}: squared L2 norm of z^a (dz/z)^(k+1) on the collar."""
    params.check_index(a)
    return _norm_unchecked(params, a, spec)


T_ROUTE_SPEC = QuadSpec(rel_tol=1e-10)


def collar_norm_t_route(params: CollarParams, a: int, spec: QuadSpec = T_ROUTE_SPEC) -> XReal:
    """I_{eps,a} integrated directly in t, centred at t_a.

    Independent of the end-coordinate route used by :func:`collar_norm`; the
    two are compared in the symmetry audit. Near the collar ends t itself
    only resolves ~1e-16 * pi/(2 eps), which puts a ~1e-11 relative noise
    floor on the integrand at eps = 1e-4, hence the looser default tolerance.
    """
    params.check_index(a)
    g, dg, d2g = norm_exponent(params, a)
    ts = maximizer_t(params, a)
    step = 1.0 / math.sqrt(-d2g(ts))
    half = params.half_length
    return integrate_log_concave(g, dg, ts, spec, lo=-half, hi=half, step=step)


def norm_exponent(params: CollarParams, a: int):
    """g_a(t) = log(2^(k+2) pi) + 2 a t - k log f(t) with derivatives in t."""
    eps, k = params.epsilon, params.k
    c = log_prefactor(k)

    def g(t):
        return c + 2 * a * t - k * f_of_t(eps, t)

    def dg(t):
        return 2 * a - 2 * k * eps * math.tan(eps * t)

    def d2g(t):
        return -2 * k * math.exp(float(f_of_t(eps, t)))

    return g, dg, d2g


def maximizer_t(params: CollarParams, a: int) -> float:
    """t_a from eps sinh(u_a) = a/k."""
    if a == 0:
        return 0.0
    return t_of_u(params.epsilon, math.asinh(a / (params.k * params.epsilon)))


def collar_norm_laplace(params: CollarParams, a: int) -> LaplaceResult:
    params.check_index(a)
    eps, k = params.epsilon, params.k
    g, dg, d2g = norm_exponent(params, a)
    ts = maximizer_t(params, a)
    if a == 0:
        halfwidth = 3.0 / (math.sqrt(2 * k) * eps)
    else:
        halfwidth = math.sqrt(k) * math.log(k) / abs(a) if k > 1 else None
    # keep window edges inside the collar
    if halfwidth is not None:
        halfwidth = min(halfwidth, 0.5 * (params.half_length - abs(ts)))
    return laplace_estimate(lambda t: float(g(t)), d2g, ts, dg=dg, halfwidth=halfwidth)


def collar_outside_mass(params: CollarParams, a: int, halfwidth: float | None = None,
                        spec: QuadSpec = DEFAULT_SPEC) -> XReal:
    """Fraction of I_{eps,a} outside the window |t - t_a| < halfwidth (a != 0)."""
    params.check_index(a)
    if a == 0:
        raise ValueError("use an explicit halfwidth window for a = 0")
    eps, k, b = params.epsilon, params.k, abs(a)
    if halfwidth is None:
        halfwidth = math.sqrt(k) * math.log(k) / b

    def h(tau):
        return -2 * b * tau + 2 * k * (np.log(np.sin(eps * tau)) - math.log(eps))

    def dh(tau):
        return -2 * b + 2 * k * eps / math.tan(eps * tau)

    # |t - t_a| and |tau - tau_a| coincide; by symmetry a < 0 gives the same integrand
    return outside_mass_fraction(h, _tau_star(eps, k, b), halfwidth, spec,
                                 dlogf=dh, lo=0.0, hi=math.pi / eps)


# Bergman density ---------------------------------------------------------

def _log_terms(params: CollarParams, t: float, indices, spec: QuadSpec):
    eps, k = params.epsilon, params.k
    lf = float(f_of_t(eps, t))
    base = (k + 1) * (math.log(2.0) - lf)
    return {a: base + 2 * a * t - _norm_unchecked(params, a, spec).logmag for a in indices}


def collar_log_terms(params: CollarParams, t: float, spec: QuadSpec = DEFAULT_SPEC):
    """Certified log |z^a e^(k+1)|^2 / I_a for |a| <= cutoff_a.

    Returns ``(terms, log_tail)`` where ``terms`` maps a -> log term and
    ``log_tail`` bounds the omitted |a| > cutoff_a part. log I_a is convex in a
    (a Laplace transform), so term ratios are nonincreasing outward and a
    geometric series bounds each tail once the edge ratio is below 1/2.
    """
    _check_t(params.epsilon, t)
    A = params.cutoff_a
    terms = _log_terms(params, t, range(-A, A + 1), spec)
    edge = _log_terms(params, t, (A + 1, -A - 1), spec)
    partial = logsumexp(terms.values())
    tails = []
    for out, inn in ((A + 1, A), (-A - 1, -A)):
        log_r = edge[out] - terms[inn]
        if log_r >= math.log(0.5):
            raise TailNotCertified(
                f"tail not certified at t={t}: cutoff_a={A} too small (ratio {math.exp(log_r):.3g})")
        tails.append(terms[inn] + log_r - math.log1p(-math.exp(log_r)))
    log_tail = logsumexp(tails)
    if log_tail > math.log(TAIL_RTOL) + partial:
        raise TailNotCertified(f"tail not certified at t={t}: cutoff_a={A} too small")
    return terms, log_tail


def collar_density(params: CollarParams, t: float, spec: QuadSpec = DEFAULT_SPEC) -> XReal:
    """rho(t) = (2/f)^(k+1) sum_a exp(2 a t) / I_a, truncated with a certified tail."""
    terms, _ = collar_log_terms(params, t, spec)
    return XReal(1, logsumexp(terms.values()))


# cut-tail lemma ------------------------------------------------------------

@dataclass(frozen=True)
class CutTailReport:
    region: tuple          # (u_lo, u_hi)
    cosh_region: tuple     # (cosh u_lo, cosh u_hi)
    density_sup: XReal
    sup_u: float
    bound: XReal
    passed: bool

    @property
    def margin(self) -> float:
        """log(bound) - log(density_sup); positive when the lemma holds."""
        return self.bound.logmag - self.density_sup.logmag


def cut_tail_region(epsilon: float):
    if not 0 < epsilon < 1:
        raise ValueError("empty region: need 0 < eps < 1")
    le = math.log(epsilon)
    lo, hi = -1.0 / (2 * epsilon * le), -1.0 / (epsilon * le)
    if lo <= 1.0:
        raise ValueError("empty region: cosh u interval lies below 1")
    return lo, hi


def cut_tail_bound(epsilon: float, k: int) -> XReal:
    """eps (log eps / k)^(2k) as an XReal."""
    return XReal(1, math.log(epsilon) + 2 * k * math.log(-math.log(epsilon) / k))


def cut_tail_check(params: CollarParams, spec: QuadSpec = DEFAULT_SPEC,
                   n_grid: int = CUT_TAIL_GRID) -> CutTailReport:
    """Sup of the Bergman density on the annulus of the cut-off lemma vs its bound."""
    eps = params.epsilon
    if eps > 1e-2:
        raise ValueError("cut-tail check needs eps <= 1e-2")
    c_lo, c_hi = cut_tail_region(eps)
    u_lo, u_hi = math.acosh(c_lo), math.acosh(c_hi)
    best = None
    best_u = u_lo
    for u in np.linspace(u_lo, u_hi, n_grid):
        d = collar_density(params, t_of_u(eps, float(u)), spec)
        if best is None or d > best:
            best, best_u = d, float(u)
    bound = cut_tail_bound(eps, params.k)
    return CutTailReport((u_lo, u_hi), (c_lo, c_hi), best, best_u, bound, bool(best < bound))


# comparison with the cusp ---------------------------------------------------

def cusp_comparison(epsilon: float, u: float):
    """Map eps cosh u -> 1/(2 tau); returns (tau, du^2 distortion factor tanh^2 u)."""
    if not u > 0:
        raise ValueError("cusp comparison needs u > 0")
    log_cosh = u + math.log1p(math.exp(-2 * u)) - math.log(2.0)
    tau = 0.5 * math.exp(-math.log(epsilon) - log_cosh)
    return tau, math.tanh(u) ** 2
