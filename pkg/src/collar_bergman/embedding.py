"""Fubini-Study geometry of the collar's Bergman embedding.

The model sections are ``z^a / sqrt(I_a)``, so on the circle ``|z| = e^t`` the
homogeneous coordinates are ``Z_a = c_a e^(i a theta)`` with
``|c_a|^2 = w_a`` proportional to ``exp(2 a t) / I_a``. For the FS metric
normalised as (i/2) dd^c log(1 + |w|^2) the theta-speed of such a torus orbit
is the standard deviation of the index ``a`` under the weights ``w``:

    |dZ/dtheta|^2 / |Z|^2 - |<Z, dZ/dtheta>|^2 / |Z|^4
        = sum a^2 w_a - (sum a w_a)^2 = Var_w(a)

hence circle length = 2 pi sqrt(Var_w(a)). Homogeneous coordinates are never
formed as raw magnitudes; weights are kept as logs relative to the largest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .collar import CollarParams, collar_norm
from .quadrature import DEFAULT_SPEC, QuadSpec
from .xreal import XReal, logsumexp, xr_sum

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class SectionFamily:
    """Orthogonal model sections: sorted (a, squared norm) entries."""

    entries: tuple
    params: Optional[CollarParams] = None

    def __post_init__(self):
        entries = tuple(sorted((int(a), n if isinstance(n, XReal) else XReal.from_float(n))
                               for a, n in self.entries))
        if not entries:
            raise ValueError("empty section family")
        if len({a for a, _ in entries}) != len(entries):
            raise ValueError("duplicate Fourier index")
        if any(n.sign <= 0 for _, n in entries):
            raise ValueError("squared norms must be positive")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_params(cls, params: CollarParams, spec: QuadSpec = DEFAULT_SPEC) -> SectionFamily:
        A = params.cutoff_a
        return cls(tuple((a, collar_norm(params, a, spec)) for a in range(-A, A + 1)), params)

    @property
    def indices(self):
        return [a for a, _ in self.entries]

    def sqnorm(self, a: int) -> XReal:
        for b, n in self.entries:
            if b == a:
                return n
        raise KeyError(a)


@dataclass(frozen=True)
class ProfileRow:
    t: float
    top_weights: tuple              # all (a, weight), heaviest first
    circle_length: XReal
    reduced_coordinate: XReal       # |w| of the printed reduced map at |z| = e^|t|
    line_distance: float
    two_section_ratio: XReal        # same coordinate with the quadrature constant

    def weight_sum(self) -> float:
        return math.fsum(w for _, w in self.top_weights)


def _check_t(family: SectionFamily, t: float):
    if family.params is not None and abs(t) >= family.params.half_length:
        raise ValueError("outside collar range: need |t| < pi/(2 eps)")


def log_weights_at(family: SectionFamily, t: float):
    """List of (a, log weight) with weights normalised to sum 1."""
    _check_t(family, t)
    raw = [(a, 2 * a * t - n.logmag) for a, n in family.entries]
    z = logsumexp(v for _, v in raw)
    return [(a, v - z) for a, v in raw]


def weights_at(family: SectionFamily, t: float):
    return [(a, math.exp(lw)) for a, lw in log_weights_at(family, t)]


def index_variance(log_weights) -> XReal:
    """Var of the index under the weights, computed about the heaviest index."""
    a0 = max(log_weights, key=lambda p: p[1])[0]
    s2 = xr_sum(XReal(1, lw + 2 * math.log(abs(a - a0))) for a, lw in log_weights if a != a0)
    d = xr_sum(XReal(1 if a > a0 else -1, lw + math.log(abs(a - a0)))
               for a, lw in log_weights if a != a0)
    var = s2 - d * d
    if var.sign < 0:
        return XReal.zero()
    return var


def circle_image_length(family: SectionFamily, t: float) -> XReal:
    """FS length of the image of the circle |z| = e^t, as an XReal."""
    var = index_variance(log_weights_at(family, t))
    if var.sign == 0:
        return XReal.zero()
    return XReal(1, math.log(TWO_PI) + 0.5 * var.logmag)


def direct_circle_length(family: SectionFamily, t: float, n_theta: int = 512,
                         h: float = 1e-4) -> float:
    """FS length of the circle by explicit pullback in an affine chart.

    Independent of the variance identity: builds w_i = Z_i / Z_0 on a theta
    grid (Z_0 the heaviest coordinate), differentiates by central differences
    and evaluates the FS form ((1+|w|^2)|v|^2 - |<w,v>|^2) / (1+|w|^2)^2.
    Only meaningful when the weights are representable as floats.
    """
    lw = log_weights_at(family, t)
    a0, l0 = max(lw, key=lambda p: p[1])
    others = [(a, lwa) for a, lwa in lw if a != a0]
    if not others:
        return 0.0
    mods = np.array([math.exp(0.5 * (lwa - l0)) for _, lwa in others])
    shifts = np.array([a - a0 for a, _ in others], dtype=float)

    def chart(theta):
        return mods[None, :] * np.exp(1j * np.outer(theta, shifts))

    theta = np.arange(n_theta) * (TWO_PI / n_theta)
    w = chart(theta)
    v = (chart(theta + h) - chart(theta - h)) / (2 * h)
    nw = 1.0 + np.sum(np.abs(w) ** 2, axis=1)
    inner = np.sum(np.conj(w) * v, axis=1)
    g = (nw * np.sum(np.abs(v) ** 2, axis=1) - np.abs(inner) ** 2) / nw ** 2
    speed = np.sqrt(np.maximum(g, 0.0))
    # periodic trapezoid rule
    return float(np.sum(speed) * (TWO_PI / n_theta))


def reduced_map(params: CollarParams, spec: QuadSpec = DEFAULT_SPEC):
    """(sqrt(I_0/I_1) from quadrature, exp(-pi/(2eps)) (eps k)^(-k-1/2) as printed)."""
    i0 = collar_norm(params, 0, spec)
    i1 = collar_norm(params, 1, spec)
    c_numeric = (i0 / i1).sqrt()
    eps, k = params.epsilon, params.k
    c_printed = XReal(1, -math.pi / (2 * eps) - (k + 0.5) * math.log(eps * k))
    return c_numeric, c_printed


def fs_distance_to_line(weights, pair) -> float:
    """FS distance from the point with |Z_a|^2 = weights to the line through two coordinates."""
    w = dict(weights)
    a1, a2 = pair
    if a1 not in w or a2 not in w:
        raise ValueError(f"pair {pair} not among the weight indices")
    rest = math.fsum(x for a, x in w.items() if a not in (a1, a2))
    return math.asin(math.sqrt(min(1.0, max(0.0, rest))))


def bubble_end(params: CollarParams) -> float:
    """t0 = pi/(2 eps) + log eps, the outer end of the bubble region."""
    t0 = params.half_length + math.log(params.epsilon)
    if t0 <= 0:
        raise ValueError("t0 <= 0: eps too large for a bubble region")
    return t0


def profile_row(family: SectionFamily, t: float, side: int, consts) -> ProfileRow:
    c_numeric, c_printed = consts
    w = weights_at(family, t)
    top = tuple(sorted(w, key=lambda p: (-p[1], p[0])))
    return ProfileRow(
        t=t,
        top_weights=top,
        circle_length=circle_image_length(family, t),
        reduced_coordinate=XReal(1, c_printed.logmag + abs(t)),
        line_distance=fs_distance_to_line(w, (0, side)),
        two_section_ratio=XReal(1, c_numeric.logmag + abs(t)),
    )


def bubble_profile(params: CollarParams, n_samples: int, spec: QuadSpec = DEFAULT_SPEC,
                   side: int = 1, jobs: int = 1) -> list:
    """Sample the bubble 0 <= side*t <= t0; rows are ordered by |t|.

    ``side=-1`` gives the mirror half-collar measured against the line
    through indices (0, -1).
    """
    if n_samples < 3:
        raise ValueError("n_samples must be >= 3")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    t0 = bubble_end(params)
    family = SectionFamily.from_params(params, spec)
    consts = reduced_map(params, spec)
    ts = [side * float(x) for x in np.linspace(0.0, t0, n_samples)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: profile_row(family, t, side, consts), ts))
    return [profile_row(family, t, side, consts) for t in ts]


def max_line_distance(rows: Sequence[ProfileRow]) -> float:
    return max(r.line_distance for r in rows)
