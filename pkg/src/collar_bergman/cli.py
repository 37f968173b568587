"""Sweep runner: every subcommand maps a SweepConfig to rows of library results.

Output is CSV (header always present) or a single JSON object
``{config, rows, failures}``. Extended reals are written as sign, logmag and,
when representable, decimal. Exit status is 0 on success, 1 when an audit
fails and 2 on bad arguments.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import audit
from .collar import (
    CollarParams,
    collar_log_terms,
    collar_norm,
    collar_norm_laplace,
    collar_norm_t_route,
    cut_tail_check,
)
from .embedding import bubble_end, bubble_profile
from .punctured import rho0_density, term_weights_punctured, y_norm_exact, y_norm_laplace, y_norm_quad
from .quadrature import QuadSpec
from .xreal import XReal, logsumexp

MODELS = ("punctured", "collar", "embedding")
NORM_MATCH_RTOL = 1e-9


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    model: str = "collar"
    epsilon_list: tuple = (1e-3,)
    k_list: tuple = (3,)
    a_range: tuple = (1, 3)
    samples: int = 9
    rel_tol: float = 1e-12
    output_format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise UsageError(f"unknown model {self.model!r}")
        if not self.epsilon_list or not self.k_list:
            raise UsageError("epsilon and k lists must be nonempty")
        if any(not e > 0 for e in self.epsilon_list):
            raise UsageError("epsilon values must be positive")
        if any(k < 1 for k in self.k_list):
            raise UsageError("k values must be >= 1")
        lo, hi = self.a_range
        if lo > hi:
            raise UsageError("empty a range")
        if not self.rel_tol > 0:
            raise UsageError("rel-tol must be positive")
        if self.samples < 3:
            raise UsageError("samples must be >= 3")
        if self.output_format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")

    @property
    def spec(self) -> QuadSpec:
        return QuadSpec(rel_tol=self.rel_tol)

    @property
    def a_values(self):
        return range(self.a_range[0], self.a_range[1] + 1)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("jobs")  # output must not depend on the degree of parallelism
        d["a_range"] = list(self.a_range)
        d["epsilon_list"] = list(self.epsilon_list)
        d["k_list"] = list(self.k_list)
        return d


# encoding ------------------------------------------------------------------

def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def encode_xreal(x: XReal) -> dict:
    out = {"sign": x.sign, "logmag": _finite_or_none(x.logmag)}
    dec = x.decimal()
    if dec is not None:
        out["decimal"] = dec
    return out


def _json_value(v):
    if isinstance(v, XReal):
        return encode_xreal(v)
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _finite_or_none(float(v))
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _csv_scalar(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _csv_fields(name, v):
    if isinstance(v, XReal):
        dec = v.decimal()
        return [(f"{name}_sign", str(v.sign)), (f"{name}_logmag", _csv_scalar(v.logmag)),
                (f"{name}_decimal", _csv_scalar(dec))]
    return [(name, _csv_scalar(v))]


def _csv_quote(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def render_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    header = None
    for row in rows:
        cells = [c for name, v in row.items() for c in _csv_fields(name, v)]
        if header is None:
            header = [n for n, _ in cells]
            buf.write(",".join(header) + "\n")
        buf.write(",".join(_csv_quote(s) for _, s in cells) + "\n")
    return buf.getvalue()


def render_json(config: dict, rows, failures) -> str:
    doc = {"config": config, "rows": _json_value(rows), "failures": _json_value(failures)}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# subcommands ---------------------------------------------------------------

def _map(cfg: SweepConfig, fn, cells):
    """Evaluate cells, concurrently if requested; results stay in config order."""
    cells = list(cells)
    if cfg.jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def _collar_params(eps, k):
    try:
        return CollarParams(eps, k)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _rel_dev(x: XReal, y: XReal) -> float:
    return abs(math.expm1(x.logmag - y.logmag))


def cmd_norms(cfg: SweepConfig):
    rows, failures = [], []
    if cfg.model == "punctured":
        if cfg.a_range[0] < 1:
            raise UsageError("punctured norms need a >= 1")
        cells = [(None, k, a) for k in cfg.k_list for a in cfg.a_values]

        def run(cell):
            _, k, a = cell
            return y_norm_exact(k, a), y_norm_quad(k, a, cfg.spec)
    elif cfg.model == "collar":
        cells = [(e, k, a) for e in cfg.epsilon_list for k in cfg.k_list for a in cfg.a_values]
        for e, k, _ in cells:
            _collar_params(e, k)

        def run(cell):
            e, k, a = cell
            p = CollarParams(e, k)
            return collar_norm_t_route(p, a), collar_norm(p, a, cfg.spec)
    else:
        raise UsageError("norms supports --model punctured or collar")
    for (e, k, a), (ref, quad) in zip(cells, _map(cfg, run, cells)):
        dev = _rel_dev(quad, ref)
        ok = dev <= NORM_MATCH_RTOL
        rows.append({"model": cfg.model, "epsilon": e, "k": k, "a": a,
                     "norm_reference": ref, "norm_quad": quad, "rel_dev": dev, "match": ok})
        if not ok:
            failures.append({"epsilon": e, "k": k, "a": a, "rel_dev": dev})
    return rows, failures


def cmd_laplace_audit(cfg: SweepConfig):
    rows, failures = [], []
    if cfg.model == "punctured":
        if cfg.a_range[0] < 1:
            raise UsageError("punctured norms need a >= 1")
        cells = [(None, k, a) for k in cfg.k_list for a in cfg.a_values]

        def run(cell):
            _, k, a = cell
            return y_norm_laplace(k, a).estimate, y_norm_exact(k, a)
    elif cfg.model == "collar":
        cells = [(e, k, a) for e in cfg.epsilon_list for k in cfg.k_list for a in cfg.a_values]
        for e, k, _ in cells:
            _collar_params(e, k)

        def run(cell):
            e, k, a = cell
            p = CollarParams(e, k)
            return collar_norm_laplace(p, a).estimate, collar_norm(p, a, cfg.spec)
    else:
        raise UsageError("laplace-audit supports --model punctured or collar")
    for (e, k, a), (est, ref) in zip(cells, _map(cfg, run, cells)):
        ratio = math.exp(est.logmag - ref.logmag)
        lower = 1 - 0.1 / k
        ok = lower <= ratio <= 1
        if cfg.model == "collar" and a == 0:
            # I_0 peaks at the collar centre where the exponent is flatter than
            # its quadratic model; the estimate overshoots and is not audited
            ok = None
        rows.append({"model": cfg.model, "epsilon": e, "k": k, "a": a, "laplace": est,
                     "quadrature": ref, "ratio": ratio, "lower": lower, "pass": ok})
        if ok is False:
            failures.append({"epsilon": e, "k": k, "a": a, "ratio": ratio, "lower": lower})
    return rows, failures


def cmd_kernel(cfg: SweepConfig):
    """Bergman density on a grid: tau in (0, 4(k+1)] for the disk, 0 <= t <= t0 on the collar."""
    if cfg.model == "punctured":
        cells = [(None, k, float(x)) for k in cfg.k_list
                 for x in np.linspace(4 * (k + 1) / cfg.samples, 4 * (k + 1), cfg.samples)]

        def run(cell):
            _, k, tau = cell
            dens = rho0_density(k, tau)
            a, wt = max(term_weights_punctured(k, tau), key=lambda p: p[1])
            return dens, (a, wt)
    elif cfg.model == "collar":
        cells = []
        for e in cfg.epsilon_list:
            for k in cfg.k_list:
                p = _collar_params(e, k)
                try:
                    t0 = bubble_end(p)
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
                cells += [(e, k, float(x)) for x in np.linspace(0.0, t0, cfg.samples)]

        def run(cell):
            e, k, t = cell
            terms, _ = collar_log_terms(CollarParams(e, k), t, cfg.spec)
            z = logsumexp(terms.values())
            a = max(terms, key=lambda b: (terms[b], -abs(b), b))
            return XReal(1, z), (a, math.exp(terms[a] - z))
    else:
        raise UsageError("kernel supports --model punctured or collar")
    rows = []
    for (e, k, x), (dens, (a, wt)) in zip(cells, _map(cfg, run, cells)):
        rows.append({"model": cfg.model, "epsilon": e, "k": k, "t": x, "density": dens,
                     "heaviest_a": a, "heaviest_weight": wt})
    return rows, []


def cmd_collar_sweep(cfg: SweepConfig):
    """Consecutive norm ratios against pi/eps + (2k+1) ln(a/(a+1))."""
    if cfg.a_range[0] < 1:
        raise UsageError("collar-sweep needs a >= 1")
    cells = [(e, k, a) for k in cfg.k_list for a in cfg.a_values for e in cfg.epsilon_list]
    for e, k, _ in cells:
        _collar_params(e, k)

    def run(cell):
        e, k, a = cell
        p = CollarParams(e, k)
        return collar_norm(p, a, cfg.spec), collar_norm(p, a + 1, cfg.spec)

    rows = []
    for (e, k, a), (na, nb) in zip(cells, _map(cfg, run, cells)):
        log_ratio = nb.logmag - na.logmag
        predicted = math.pi / e + (2 * k + 1) * math.log(a / (a + 1))
        rows.append({"model": "collar", "epsilon": e, "k": k, "a": a, "norm_a": na,
                     "norm_a_plus_1": nb, "log_ratio": log_ratio, "predicted": predicted,
                     "deviation": abs(log_ratio - predicted)})
    return rows, []


def cmd_cut_tail(cfg: SweepConfig):
    cells = [(e, k) for e in cfg.epsilon_list for k in cfg.k_list]
    for e, k in cells:
        _collar_params(e, k)
        if e > 1e-2:
            raise UsageError("cut-tail needs epsilon <= 1e-2")

    def run(cell):
        e, k = cell
        return cut_tail_check(CollarParams(e, k), cfg.spec)

    rows, failures = [], []
    for (e, k), rep in zip(cells, _map(cfg, run, cells)):
        rows.append({"model": "collar", "epsilon": e, "k": k, "u_lo": rep.region[0],
                     "u_hi": rep.region[1], "sup_u": rep.sup_u, "density_sup": rep.density_sup,
                     "bound": rep.bound, "margin": rep.margin, "pass": rep.passed})
        if not rep.passed:
            failures.append({"epsilon": e, "k": k,
                             "density_sup_logmag": rep.density_sup.logmag,
                             "bound_logmag": rep.bound.logmag})
    return rows, failures


def cmd_bubble(cfg: SweepConfig):
    cells = [(e, k) for e in cfg.epsilon_list for k in cfg.k_list]
    for e, k in cells:
        p = _collar_params(e, k)
        try:
            bubble_end(p)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def run(cell):
        e, k = cell
        return bubble_profile(CollarParams(e, k), cfg.samples, cfg.spec)

    rows, failures = [], []
    for (e, k), profile in zip(cells, _map(cfg, run, cells)):
        limit = 10 * k * k * e
        for r in profile:
            w = dict(r.top_weights)
            rows.append({"model": "embedding", "epsilon": e, "k": k, "t": r.t,
                         "circle_length": r.circle_length,
                         "reduced_coordinate": r.reduced_coordinate,
                         "two_section_ratio": r.two_section_ratio,
                         "line_distance": r.line_distance,
                         "weight_0": w.get(0, 0.0), "weight_1": w.get(1, 0.0),
                         "weight_minus_1": w.get(-1, 0.0)})
            if r.line_distance > limit:
                failures.append({"epsilon": e, "k": k, "t": r.t,
                                 "line_distance": r.line_distance, "bound": limit})
    return rows, failures


def cmd_report_all(cfg: SweepConfig):
    rows, failures = [], []
    for res in audit.run_all(cfg.jobs):
        for name in sorted(res.metrics):
            rows.append({"criterion": res.number, "name": res.name, "passed": res.passed,
                         "metric": name, "value": float(res.metrics[name])})
        for f in res.failures:
            failures.append({"criterion": res.number, "name": res.name, **f})
    return rows, failures


COMMANDS = {
    "norms": cmd_norms,
    "laplace-audit": cmd_laplace_audit,
    "kernel": cmd_kernel,
    "collar-sweep": cmd_collar_sweep,
    "cut-tail": cmd_cut_tail,
    "bubble": cmd_bubble,
    "report-all": cmd_report_all,
}


# argument parsing ----------------------------------------------------------

def _float_list(s: str):
    try:
        vals = tuple(float(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of reals: {s!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(s: str):
    try:
        vals = tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {s!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _a_range(s: str):
    try:
        if ".." in s:
            lo, hi = s.split("..", 1)
            return int(lo), int(hi)
        return int(s), int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo..hi or an integer, got {s!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=MODELS)
    common.add_argument("--epsilon", type=_float_list, help="comma-separated list")
    common.add_argument("--k", type=_int_list, help="comma-separated list")
    common.add_argument("--a", type=_a_range, help="index range lo..hi")
    common.add_argument("--samples", type=int)
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--jobs", type=int, default=1)
    parser = argparse.ArgumentParser(prog="collar-bergman", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


# per-command defaults used when a flag is absent
DEFAULTS = {
    "norms": dict(model="punctured", k_list=(2,), a_range=(1, 1)),
    "laplace-audit": dict(model="punctured", k_list=(2, 4, 8, 16), a_range=(1, 1)),
    "kernel": dict(model="collar", k_list=(3,)),
    "collar-sweep": dict(model="collar", epsilon_list=(1e-2, 1e-3, 1e-4), k_list=(3,),
                         a_range=(1, 3)),
    "cut-tail": dict(model="collar", epsilon_list=(1e-3, 1e-4), k_list=(3, 4)),
    "bubble": dict(model="embedding", k_list=(3,)),
    "report-all": dict(),
}


def config_from_args(args) -> SweepConfig:
    kw = dict(DEFAULTS[args.command])
    for flag, key in (("model", "model"), ("epsilon", "epsilon_list"), ("k", "k_list"),
                      ("a", "a_range"), ("samples", "samples"), ("rel_tol", "rel_tol")):
        v = getattr(args, flag)
        if v is not None:
            kw[key] = v
    kw["output_format"] = args.format
    kw["jobs"] = args.jobs
    return SweepConfig(**kw)


def run_command(argv, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    argv = list(argv)
    # let "--a -3..3" through: argparse would read "-3..3" as an option
    for i in range(len(argv) - 1):
        if argv[i] == "--a" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--a={argv[i + 1]}", ""]
    argv = [x for x in argv if x != ""]
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        rows, failures = COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(stderr)
        stderr.write(f"error: {exc}\n")
        return 2

    if cfg.output_format == "json":
        text = render_json({"command": args.command, **cfg.to_json()}, rows, failures)
    else:
        text = render_csv(rows)
        for f in failures:
            stderr.write(json.dumps({"command": args.command, **_json_value(f)},
                                    allow_nan=False) + "\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 1 if failures else 0


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
