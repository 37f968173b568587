"""Adaptive quadrature for integrands given by their logarithm.

The integrand ``exp(logf(t))`` is never formed globally: every panel is
rescaled by its own maximum log value and panel sums are combined in the log
domain, so integrals like ``exp(pi/eps) * J`` are computed without overflow.

The panel rule is the nested 7-point Gauss / 15-point Kronrod pair; the
difference between the two is the panel error estimate. Refinement is global:
the panel with the largest error is bisected until the summed error is below
``rel_tol`` times the summed value.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .xreal import XReal

# Kronrod abscissae on [0, 1]; odd positions (1, 3, 5, 7) are the Gauss nodes
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point node set on [-1, 1], symmetric
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]

_EPS = np.finfo(float).eps
_MAX_PANELS = 20_000

LogFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-12
    max_depth: int = 60
    panel_order: int = 15

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_depth < 10:
            raise ValueError("max_depth must be at least 10")
        if self.panel_order != 15:
            raise ValueError("only the 15-point nested Gauss-Kronrod rule is implemented")


DEFAULT_SPEC = QuadSpec()


class QuadratureError(RuntimeError):
    """Raised when the requested accuracy is not reached.

    ``estimate`` and ``error_bound`` carry the best value found so far.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


def eval_log(logf: LogFunc, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.asarray(logf(x), dtype=float)
    y = np.broadcast_to(y, x.shape).astype(float)
    if np.any(np.isnan(y)) or np.any(y == np.inf):
        raise ValueError("log-integrand returned NaN or +inf")
    return y


def _panel(logf: LogFunc, a: float, b: float):
    """Return (log scale, kronrod sum, error estimate) for one panel."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = eval_log(logf, mid + half * NODES)
    m = float(np.max(y))
    if m == -np.inf:
        return -math.inf, 0.0, 0.0
    v = np.exp(y - m)
    k = half * float(KRONROD_WEIGHTS @ v)
    g = half * float(GAUSS_WEIGHTS @ v)
    err = max(abs(k - g), 50 * _EPS * abs(k))
    return m, k, err


def _log_of(m, x):
    return m + math.log(x) if x > 0 else -math.inf


def _logsum(logs):
    logs = np.asarray(logs)
    finite = logs[logs > -np.inf]
    if finite.size == 0:
        return -math.inf
    top = float(np.max(finite))
    return top + math.log(float(np.sum(np.exp(finite - top))))


def integrate_log_with_error(logf: LogFunc, lo: float, hi: float, spec: QuadSpec = DEFAULT_SPEC,
                             points: Sequence[float] = ()):
    """Like :func:`integrate_log` but also returns the log of the error estimate."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("integrate_log needs finite limits; use integrate_log_halfline for tails")
    edges = sorted({lo, hi, *(p for p in points if lo < p < hi)})

    # heap entries: (-log error, counter, a, b, depth, log value). Running sums
    # of value and error are kept relative to a reference scale and verified
    # exactly before returning.
    heap = []
    counter = 0
    ref = None
    run_val = run_err = 0.0

    def push(a, b, depth):
        nonlocal counter, ref, run_val, run_err
        m, k, e = _panel(logf, a, b)
        lv, le = _log_of(m, k), _log_of(m, e)
        heapq.heappush(heap, (-le, counter, a, b, depth, lv))
        counter += 1
        if lv > -math.inf:
            if ref is None:
                ref = lv
            elif lv > ref + 300:
                shrink = math.exp(ref - lv)
                run_val *= shrink
                run_err *= shrink
                ref = lv
            run_val += math.exp(lv - ref)
            run_err += math.exp(le - ref)

    def drop(lv, le):
        nonlocal run_val, run_err
        if lv > -math.inf:
            run_val -= math.exp(lv - ref)
            run_err -= math.exp(le - ref)

    for a, b in zip(edges[:-1], edges[1:]):
        push(a, b, 0)

    while True:
        if ref is None:
            return XReal.zero(), -math.inf
        if run_err <= 2 * spec.rel_tol * run_val:
            log_total = _logsum([h[5] for h in heap])
            log_err = _logsum([-h[0] for h in heap])
            if log_err <= math.log(spec.rel_tol) + log_total:
                return XReal(1, log_total), log_err
            # resynchronise the running sums
            run_val = math.exp(log_total - ref)
            run_err = math.exp(log_err - ref)
        if len(heap) >= _MAX_PANELS:
            log_total = _logsum([h[5] for h in heap])
            log_err = _logsum([-h[0] for h in heap])
            raise QuadratureError("panel budget exhausted", XReal(1, log_total), XReal(1, log_err))
        neg_le, _, a, b, depth, lv = heapq.heappop(heap)
        if depth >= spec.max_depth:
            log_total = _logsum([h[5] for h in heap] + [lv])
            log_err = _logsum([-h[0] for h in heap] + [-neg_le])
            raise QuadratureError(
                f"no convergence at max_depth={spec.max_depth} on [{a}, {b}]",
                XReal(1, log_total), XReal(1, log_err),
            )
        drop(lv, -neg_le)
        mid = 0.5 * (a + b)
        push(a, mid, depth + 1)
        push(mid, b, depth + 1)


def integrate_log(logf: LogFunc, lo: float, hi: float, spec: QuadSpec = DEFAULT_SPEC,
                  points: Sequence[float] = ()) -> XReal:
    """Integrate ``exp(logf(t))`` over ``[lo, hi]``.

    ``logf`` must accept a numpy array and may return ``-inf`` where the
    integrand vanishes. ``points`` are extra breakpoints for the initial
    partition (e.g. a known peak location). Endpoints are never evaluated.
    """
    value, _ = integrate_log_with_error(logf, lo, hi, spec, points)
    return value


def integrate_log_halfline(logf: LogFunc, dlogf: Callable[[float], float], x0: float,
                           spec: QuadSpec = DEFAULT_SPEC, *, step: float = 1.0,
                           hi: float = math.inf, max_steps: int = 80,
                           return_cutoff: bool = False):
    """Integrate ``exp(logf)`` over ``[x0, hi)`` for a log-concave tail.

    Segments of doubling length are added until the concave-tail bound
    ``exp(logf(T)) / -dlogf(T)`` at the current right end ``T`` falls below
    ``rel_tol`` times the accumulated integral. If ``hi`` is finite and reached
    first, the integral simply stops there.

    With ``return_cutoff=True`` the truncation point ``T`` is returned too.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    log_rtol = math.log(spec.rel_tol)
    pieces = []
    a = x0
    h = step
    saw_decay = False
    for _ in range(max_steps):
        b = a + h
        if b >= hi:
            pieces.append(integrate_log(logf, a, hi, spec))
            total = _sum_pieces(pieces)
            return (total, hi) if return_cutoff else total
        pieces.append(integrate_log(logf, a, b, spec))
        total = _sum_pieces(pieces)
        fb = float(eval_log(logf, np.array([b]))[0])
        if fb == -math.inf:
            return (total, b) if return_cutoff else total
        d = float(dlogf(b))
        if d < 0:
            saw_decay = True
            tail = fb - math.log(-d)
            if total.sign != 0 and tail <= log_rtol + total.logmag:
                return (total, b) if return_cutoff else total
        a = b
        h *= 2.0
    if not saw_decay:
        raise QuadratureError("no decaying tail detected", _sum_pieces(pieces))
    raise QuadratureError("tail bound did not fall below tolerance", _sum_pieces(pieces))


def integrate_log_concave(logf: LogFunc, dlogf: Callable[[float], float], center: float,
                          spec: QuadSpec = DEFAULT_SPEC, *, lo: float = -math.inf,
                          hi: float = math.inf, step: float = 1.0) -> XReal:
    """Integrate a log-concave integrand over ``(lo, hi)`` by splitting at ``center``.

    Both sides are walked outward from ``center`` with the concave-tail
    truncation of :func:`integrate_log_halfline`; the left side is handled by
    reflection ``t -> -t``.
    """
    right = XReal.zero()
    left = XReal.zero()
    if hi > center:
        right = integrate_log_halfline(logf, dlogf, center, spec, step=step, hi=hi)
    if lo < center:
        left = integrate_log_halfline(
            lambda s: logf(-s), lambda s: -dlogf(-s), -center, spec, step=step, hi=-lo,
        )
    return right + left


def _sum_pieces(pieces) -> XReal:
    logs = [p.logmag for p in pieces if p.sign != 0]
    if not logs:
        return XReal.zero()
    return XReal(1, _logsum(logs))
