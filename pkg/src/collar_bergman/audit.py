"""Acceptance audits: one function per criterion, shared by the CLI and tests.

Each audit returns a :class:`CriterionResult` whose ``metrics`` hold the
numbers behind the verdict. Nothing here depends on wall-clock time except
the runtime budget of the exact-norm audit, which only affects ``passed``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .collar import (
    CollarParams,
    collar_norm,
    collar_norm_t_route,
    collar_outside_mass,
    cut_tail_check,
    f_of_tau,
    t_of_u,
    tau_of_u,
    u_of_t,
    u_of_tau,
)
from .embedding import (
    SectionFamily,
    bubble_profile,
    circle_image_length,
    direct_circle_length,
    max_line_distance,
)
from .laplace import concave_tail_bound, concentration_bound
from .punctured import y_norm_exact, y_norm_laplace, y_norm_quad, y_outside_mass
from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_log_halfline
from .xreal import XReal

EPS_SWEEP = (1e-2, 1e-3, 1e-4)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"


# 1 -------------------------------------------------------------------------

def exact_norm_oracle(spec: QuadSpec = DEFAULT_SPEC, rtol: float = 1e-9,
                      budget_s: float = 10.0) -> CriterionResult:
    start = time.perf_counter()
    worst = 0.0
    failures = []
    for k in range(1, 7):
        for a in range(1, 13):
            dev = abs(math.expm1(y_norm_quad(k, a, spec).logmag - y_norm_exact(k, a).logmag))
            worst = max(worst, dev)
            if dev > rtol:
                failures.append({"k": k, "a": a, "rel_dev": dev})
    elapsed = time.perf_counter() - start
    if elapsed >= budget_s:
        failures.append({"runtime_exceeded": True})
    return CriterionResult(1, "exact-norm oracle", not failures,
                           {"max_rel_dev": worst, "rtol": rtol}, failures)


# 2 -------------------------------------------------------------------------

def laplace_ratios(ks=(2, 4, 8, 16), a: int = 1):
    return [(k, math.exp(y_norm_laplace(k, a).estimate.logmag - y_norm_exact(k, a).logmag))
            for k in ks]


def laplace_audit(ks=(2, 4, 8, 16)) -> CriterionResult:
    ratios = laplace_ratios(ks)
    failures = []
    for k, r in ratios:
        if not (1 - 0.1 / k <= r <= 1):
            failures.append({"k": k, "ratio": r, "reason": "outside [1-0.1/k, 1]"})
    for (k1, r1), (k2, r2) in zip(ratios, ratios[1:]):
        if not r2 > r1:
            failures.append({"k": k2, "reason": "not increasing"})
    r2 = dict(ratios).get(2)
    if r2 is not None and abs(r2 - 0.9793) > 5e-4:
        failures.append({"k": 2, "ratio": r2, "reason": "k=2 ratio differs from 0.9793"})
    return CriterionResult(2, "Laplace audit", not failures,
                           {f"ratio_k{k}": r for k, r in ratios}, failures)


# 3 -------------------------------------------------------------------------

def _lin(c, b=0.0):
    return (lambda x: c * x + b, lambda x: c + 0.0 * x)


def concave_suite():
    """20 concave exponents (name, f, f', x0, linear?) with f'(x0) < 0."""
    sq = (lambda x: -x ** 2, lambda x: -2 * x)
    suite = [
        ("-2x @1", *_lin(-2.0), 1.0, True),
        ("-x @0", *_lin(-1.0), 0.0, True),
        ("-x/2+3 @2", *_lin(-0.5, 3.0), 2.0, True),
        ("-5x @-1", *_lin(-5.0), -1.0, True),
        ("-x^2 @1", *sq, 1.0, False),
        ("-x^2 @0.5", *sq, 0.5, False),
        ("-(x-1)^2 @2", lambda x: -(x - 1) ** 2, lambda x: -2 * (x - 1), 2.0, False),
        ("-3x^2+x @1", lambda x: -3 * x ** 2 + x, lambda x: -6 * x + 1, 1.0, False),
        ("-x^4 @1", lambda x: -x ** 4, lambda x: -4 * x ** 3, 1.0, False),
        ("-x^4 @0.5", lambda x: -x ** 4, lambda x: -4 * x ** 3, 0.5, False),
        ("-cosh x @1", lambda x: -np.cosh(x), lambda x: -np.sinh(x), 1.0, False),
        ("-cosh x @0.5", lambda x: -np.cosh(x), lambda x: -np.sinh(x), 0.5, False),
        ("-x+3ln x @5", lambda x: -x + 3 * np.log(x), lambda x: -1 + 3 / x, 5.0, False),
        ("-2x+4ln x @3", lambda x: -2 * x + 4 * np.log(x), lambda x: -2 + 4 / x, 3.0, False),
        ("-x+10ln x @12", lambda x: -x + 10 * np.log(x), lambda x: -1 + 10 / x, 12.0, False),
        ("-e^x @0", lambda x: -np.exp(x), lambda x: -np.exp(x), 0.0, False),
        ("-e^x @-1", lambda x: -np.exp(x), lambda x: -np.exp(x), -1.0, False),
        ("-sqrt(1+x^2) @1", lambda x: -np.sqrt(1 + x * x), lambda x: -x / np.sqrt(1 + x * x), 1.0, False),
        ("-sqrt(1+x^2) @3", lambda x: -np.sqrt(1 + x * x), lambda x: -x / np.sqrt(1 + x * x), 3.0, False),
        ("-x-x^2 @0", lambda x: -x - x ** 2, lambda x: -1 - 2 * x, 0.0, False),
    ]
    return suite


def concavity_lemma(spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    failures = []
    worst_linear = 0.0
    min_slack = math.inf
    for name, f, df, x0, linear in concave_suite():
        bound = concave_tail_bound(float(f(x0)), float(df(x0)))
        tail = integrate_log_halfline(f, lambda x: float(df(x)), x0, spec, step=0.5)
        slack = bound.logmag - tail.logmag
        min_slack = min(min_slack, slack)
        if linear:
            dev = abs(math.expm1(slack))
            worst_linear = max(worst_linear, dev)
            if dev > 1e-12:
                failures.append({"function": name, "rel_dev": dev})
        elif slack < 0:
            failures.append({"function": name, "log_slack": slack})
    return CriterionResult(3, "concavity lemma", not failures,
                           {"n_functions": len(concave_suite()), "max_linear_rel_dev": worst_linear,
                            "min_log_slack": min_slack}, failures)


# 4 -------------------------------------------------------------------------

def collar_symmetry(eps_list=EPS_SWEEP, ks=(2, 3, 4), amax: int = 6,
                    spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    worst = 0.0
    failures = []
    for eps in eps_list:
        for k in ks:
            p = CollarParams(eps, k)
            for a in range(1, amax + 1):
                # end-coordinate route for +a against the direct t route for -a
                d = abs(collar_norm(p, a, spec).logmag - collar_norm_t_route(p, -a).logmag)
                d = max(d, abs(collar_norm(p, a, spec).logmag - collar_norm(p, -a, spec).logmag))
                worst = max(worst, d)
                if d > 1e-9:
                    failures.append({"epsilon": eps, "k": k, "a": a, "logmag_diff": d})
    return CriterionResult(4, "collar symmetry", not failures, {"max_logmag_diff": worst}, failures)


# 5 -------------------------------------------------------------------------

def ratio_law_deviation(eps: float, k: int, a: int, spec: QuadSpec = DEFAULT_SPEC) -> float:
    p = CollarParams(eps, k)
    lr = collar_norm(p, a + 1, spec).logmag - collar_norm(p, a, spec).logmag
    return abs(lr - (math.pi / eps + (2 * k + 1) * math.log(a / (a + 1))))


def ratio_law(eps_list=EPS_SWEEP, k: int = 3, a_list=(1, 2, 3),
              spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    metrics = {}
    failures = []
    for a in a_list:
        devs = [ratio_law_deviation(eps, k, a, spec) for eps in eps_list]
        for eps, d in zip(eps_list, devs):
            metrics[f"dev_a{a}_eps{eps:g}"] = d
        if not all(d2 < d1 for d1, d2 in zip(devs, devs[1:])):
            failures.append({"a": a, "reason": "deviation not decreasing along eps sweep"})
        if devs[-1] > 0.05:
            failures.append({"a": a, "deviation": devs[-1], "reason": "> 0.05 at smallest eps"})
    return CriterionResult(5, "ratio law", not failures, metrics, failures)


# 6 -------------------------------------------------------------------------

def mass_concentration(ks=(4, 6), a_list=(1, 2), collar_eps: float = 1e-3,
                       spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    metrics = {}
    failures = []
    for k in ks:
        bound = concentration_bound(k)
        for a in a_list:
            out_p = float(y_outside_mass(k, a, spec=spec))
            out_c = float(collar_outside_mass(CollarParams(collar_eps, k), a, spec=spec))
            metrics[f"punctured_k{k}_a{a}"] = out_p
            metrics[f"collar_k{k}_a{a}"] = out_c
            for model, v in (("punctured", out_p), ("collar", out_c)):
                if v > bound:
                    failures.append({"model": model, "k": k, "a": a, "outside": v, "bound": bound})
    return CriterionResult(6, "mass concentration", not failures, metrics, failures)


# 7 -------------------------------------------------------------------------

def cut_tail(eps_list=(1e-3, 1e-4), ks=(3, 4), spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    metrics = {}
    failures = []
    for eps in eps_list:
        for k in ks:
            rep = cut_tail_check(CollarParams(eps, k), spec)
            metrics[f"eps{eps:g}_k{k}_density_sup_logmag"] = rep.density_sup.logmag
            metrics[f"eps{eps:g}_k{k}_bound_logmag"] = rep.bound.logmag
            if not rep.passed:
                failures.append({"epsilon": eps, "k": k,
                                 "density_sup_logmag": rep.density_sup.logmag,
                                 "bound_logmag": rep.bound.logmag})
    return CriterionResult(7, "cut-tail lemma", not failures, metrics, failures)


# 8 -------------------------------------------------------------------------

def ode_residual(eps: float = 1e-2, du: float = 1e-4, u_grid=None) -> float:
    """max |(log f)'' - 2f| by central differences in t with a step of du in arc length."""
    if u_grid is None:
        u_grid = np.linspace(-6.0, 6.0, 49)
    worst = 0.0
    for u in u_grid:
        # distance to the nearer end keeps the stencil well resolved; f is even
        tau = tau_of_u(eps, abs(float(u)))
        h = du * math.cosh(u) ** -1 / eps          # dt = du / (eps cosh u)
        lf = f_of_tau(eps, np.array([tau - h, tau, tau + h]))
        second = (lf[0] - 2 * lf[1] + lf[2]) / (h * h)
        worst = max(worst, abs(float(second) - 2 * math.exp(lf[1])))
    return worst


def roundtrip_errors(eps_list=EPS_SWEEP):
    """(max t-route error for |u| <= 12, max end-coordinate error for |u| <= 50)."""
    t_err = tau_err = 0.0
    for eps in eps_list:
        for u in np.linspace(-12.0, 12.0, 97):
            t_err = max(t_err, abs(u_of_t(eps, t_of_u(eps, float(u))) - u))
        for u in np.linspace(-50.0, 50.0, 201):
            # negative u is measured from the left end, by the t -> -t mirror
            back = math.copysign(u_of_tau(eps, tau_of_u(eps, abs(float(u)))), u)
            tau_err = max(tau_err, abs(back - u))
    return float(t_err), float(tau_err)


def expansion_ratio(eps_list=EPS_SWEEP, log_cosh_grid=None) -> float:
    """max of |tau(u) - 1/(eps(cosh u+1))| / (eps / (eps (cosh u + 1))^2) over cosh u >= 10."""
    if log_cosh_grid is None:
        log_cosh_grid = np.linspace(math.log(10.0), 30.0, 60)
    worst = 0.0
    for eps in eps_list:
        for lc in log_cosh_grid:
            c = math.exp(lc)
            u = math.acosh(c)
            x = math.exp(-u)
            # tau - 1/(eps (cosh u + 1)) = (2/eps)(atan x - x/(1+x)^2); evaluated by series for small x
            if x < 1e-3:
                diff = (2 / eps) * (2 * x * x - (10.0 / 3.0) * x ** 3 + 4.8 * x ** 4)
            else:
                diff = (2 / eps) * (math.atan(x) - x / (1 + x) ** 2)
            unit = eps / (eps * (c + 1)) ** 2
            worst = max(worst, abs(diff) / unit)
    return worst


def metric_ode() -> CriterionResult:
    res = ode_residual()
    t_err, tau_err = roundtrip_errors()
    ratio = expansion_ratio()
    failures = []
    if res > 1e-6:
        failures.append({"ode_residual": res})
    if t_err > 1e-10 or tau_err > 1e-10:
        failures.append({"roundtrip_t": t_err, "roundtrip_tau": tau_err})
    if ratio > 2.0:
        failures.append({"expansion_constant": ratio})
    return CriterionResult(8, "metric ODE and coordinates", not failures,
                           {"ode_residual": res, "roundtrip_t": t_err, "roundtrip_tau": tau_err,
                            "expansion_constant": ratio}, failures)


# 9 -------------------------------------------------------------------------

def random_families(n: int = 10, seed: int = 20240611):
    rng = np.random.default_rng(seed)
    fams = []
    for _ in range(n):
        size = int(rng.integers(2, 6))
        idx = sorted(int(v) for v in rng.choice(np.arange(-4, 5), size=size, replace=False))
        logw = rng.uniform(-6.0, 0.0, size=size)
        # at t = 0 the weight is 1/sqnorm
        fams.append(SectionFamily(tuple((a, XReal(1, -lw)) for a, lw in zip(idx, logw))))
    return fams


def fs_length_oracle(spec: QuadSpec = DEFAULT_SPEC) -> CriterionResult:
    failures = []
    worst = 0.0
    for i, fam in enumerate(random_families()):
        v = float(circle_image_length(fam, 0.0))
        d = direct_circle_length(fam, 0.0)
        rel = abs(v - d) / d
        worst = max(worst, rel)
        if rel > 1e-6:
            failures.append({"family": i, "rel_dev": rel})
    p = CollarParams(1e-3, 3)
    fam = SectionFamily.from_params(p, spec)
    got = circle_image_length(fam, 0.0).logmag
    ref = (math.log(2 * math.pi) + 0.5 * (math.log(2.0) + collar_norm(p, 0, spec).logmag
                                          - collar_norm(p, 1, spec).logmag))
    t0_dev = abs(math.expm1(got - ref))
    if t0_dev > 0.01:
        failures.append({"t0_rel_dev": t0_dev})
    return CriterionResult(9, "FS length oracle", not failures,
                           {"max_family_rel_dev": worst, "center_rel_dev": t0_dev}, failures)


# 10 ------------------------------------------------------------------------

def printed_center_log_length(eps: float, k: int) -> float:
    return -math.pi / (2 * eps) - (k + 0.5) * math.log(eps * k) + math.log(2 * math.pi)


def printed_t0_log_length(eps: float, k: int) -> float:
    return math.log(2 * math.pi) - math.log(eps) + (k + 0.5) * math.log(eps * k)


def degeneration_profile(eps_list=EPS_SWEEP, k: int = 3, samples: int = 33,
                         spec: QuadSpec = DEFAULT_SPEC, jobs: int = 1) -> CriterionResult:
    metrics = {}
    failures = []
    center, end, offsets = [], [], []
    for eps in eps_list:
        p = CollarParams(eps, k)
        rows = bubble_profile(p, samples, spec, jobs=jobs)
        lc = rows[0].circle_length.logmag
        le = rows[-1].circle_length.logmag
        off = lc - printed_center_log_length(eps, k)
        dist = max_line_distance(rows)
        center.append(lc)
        end.append(le)
        offsets.append(off)
        metrics[f"eps{eps:g}_log_length_center"] = lc
        metrics[f"eps{eps:g}_log_length_t0"] = le
        metrics[f"eps{eps:g}_center_offset"] = off
        metrics[f"eps{eps:g}_max_line_distance"] = dist
        if dist > 10 * k * k * eps:
            failures.append({"epsilon": eps, "max_line_distance": dist, "bound": 10 * k * k * eps})
    if not all(b < a for a, b in zip(center, center[1:])):
        failures.append({"reason": "center circle length not decreasing"})
    if not all(b < a for a, b in zip(end, end[1:])):
        failures.append({"reason": "t0 circle length not decreasing"})
    target = k + 0.5 * math.log(2.0)
    if abs(offsets[-1] - target) > 0.1:
        failures.append({"center_offset": offsets[-1], "target": target})
    return CriterionResult(10, "degeneration profile", not failures, metrics, failures)


AUDITS = (
    exact_norm_oracle,
    laplace_audit,
    concavity_lemma,
    collar_symmetry,
    ratio_law,
    mass_concentration,
    cut_tail,
    metric_ode,
    fs_length_oracle,
    degeneration_profile,
)


def run_all(jobs: int = 1):
    """Run every audit; results come back in criterion order regardless of jobs."""
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda f: f(), AUDITS))
    return [f() for f in AUDITS]
