"""Command-line front end: ``weierlab <subcommand> [flags]``.

Every run prints a one-line JSON summary on stdout and, under ``--out``,
writes ``<subcommand>.json`` (the same summary), a data table as
``<subcommand>.csv`` (or embedded in the JSON with ``--format json``) and,
with ``--emit-plot``, a gnuplot script ``<subcommand>.gp``.

The summary's ``config`` block is a complete RunConfig; feeding the summary
file back through ``--config`` repeats the run. Flags given explicitly win
over values from the config file.

Exit codes: 0 ok, 1 a check reported pass=false, 2 usage or domain error,
3 runtime or resource error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import boxdim, density, energy, series
from ._chunks import default_workers
from .errors import DomainError, WeierlabError

SUBCOMMANDS = ("gen", "gen-scalar", "boxdim", "corrdim", "energy", "constants",
               "holder-check", "density-check", "expectation-check", "selftest")


@dataclass
class RunConfig:
    subcommand: str = ""
    b: float = 3.0
    beta: float = 0.3
    a: float = 0.6  # gen-scalar only
    seed: int = 42
    mc_seed: int = 1
    step: float = 2.0 ** -16
    eps: float = 1e-6
    deltas: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    scales: list = field(default_factory=lambda: boxdim.geometric_ladder(8, 1024))
    s_values: list = field(default_factory=lambda: [2.2, 2.8])
    n_samples: int | None = None  # per-subcommand default, see _N_DEFAULT
    method: str = "cuboid"
    drop: int = 2
    estimator: str = "mean"
    x: float = 0.3
    y: float = 0.31
    bandwidth: float | None = None
    r_min: float = 1e-3
    r_max: float = 1e-1
    n_radii: int = 9
    format: str = "csv"
    emit_plot: bool = False


# not part of the reproducible config: they never change the results
_RUNTIME_KEYS = ("out", "workers", "config")

_N_DEFAULT = {"gen-scalar": 4096, "corrdim": 10 ** 6, "energy": 10 ** 5,
              "holder-check": 10 ** 5, "density-check": 10 ** 5,
              "expectation-check": 10 ** 5}


# -- flag parsing ------------------------------------------------------------

def parse_scales(text) -> list[int]:
    """``lo:hi:x<factor>`` geometric ladder or a comma list of integers."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3 or not parts[2].startswith("x"):
            raise DomainError(f"scale ladder must look like lo:hi:x<factor> (got {text!r})")
        lo, hi, fac = int(parts[0]), int(parts[1]), int(parts[2][1:])
        if lo < 1 or hi < lo or fac < 2:
            raise DomainError(f"ladder needs 1 <= lo <= hi and factor >= 2 (got {text!r})")
        return boxdim.geometric_ladder(lo, hi, fac)
    return [int(v) for v in text.split(",") if v.strip()]


def parse_reals(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weierlab", description=__doc__.split("\n")[0])
    ap.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    S = argparse.SUPPRESS
    ap.add_argument("--b", type=float, default=S, help="lacunarity base b > 1")
    ap.add_argument("--beta", type=float, default=S, help="exponent 0 < beta < 1")
    ap.add_argument("--a", type=float, default=S, help="amplitude ratio (gen-scalar)")
    ap.add_argument("--seed", type=int, default=S, help="phase seed (64-bit unsigned)")
    ap.add_argument("--mc-seed", dest="mc_seed", type=int, default=S,
                    help="Monte Carlo seed (64-bit unsigned)")
    ap.add_argument("--step", type=float, default=S, help="abscissa spacing")
    ap.add_argument("--eps", type=float, default=S, help="certified evaluation error")
    ap.add_argument("--delta", dest="deltas", default=S, help="comma list of cutoffs")
    ap.add_argument("--scales", default=S, help="lo:hi:x<factor> or comma list")
    ap.add_argument("--s", dest="s_values", default=S, help="comma list of exponents s")
    ap.add_argument("--n-samples", dest="n_samples", type=int, default=S)
    ap.add_argument("--method", choices=sorted(boxdim.COUNTERS), default=S)
    ap.add_argument("--drop", type=int, default=S, help="smallest scales left out of fit")
    ap.add_argument("--estimator", choices=("mean", "mom"), default=S)
    ap.add_argument("--x", type=float, default=S)
    ap.add_argument("--y", type=float, default=S)
    ap.add_argument("--bandwidth", type=float, default=S)
    ap.add_argument("--r-min", dest="r_min", type=float, default=S)
    ap.add_argument("--r-max", dest="r_max", type=float, default=S)
    ap.add_argument("--n-radii", dest="n_radii", type=int, default=S)
    ap.add_argument("--format", choices=("csv", "json"), default=S)
    ap.add_argument("--emit-plot", dest="emit_plot", action="store_true", default=S)
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker threads (default: $WEIERLAB_WORKERS or CPU count)")
    ap.add_argument("--config", default=None, help="JSON config or run summary")
    return ap


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            blob = json.load(fh)
        if isinstance(blob, dict) and isinstance(blob.get("config"), dict):
            blob = blob["config"]
        if not isinstance(blob, dict):
            raise DomainError("--config must hold a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(blob) - known)
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(unknown)}")
        values.update(blob)
    given = {k: v for k, v in vars(ns).items() if k not in _RUNTIME_KEYS}
    if given.get("subcommand") is None:
        given.pop("subcommand", None)
    values.update(given)
    cfg = RunConfig(**values)
    if not cfg.subcommand:
        raise DomainError(f"a subcommand is required: one of {', '.join(SUBCOMMANDS)}")
    if cfg.subcommand not in SUBCOMMANDS:
        raise DomainError(f"unknown subcommand {cfg.subcommand!r}")
    cfg.scales = parse_scales(cfg.scales)
    cfg.deltas = parse_reals(cfg.deltas)
    cfg.s_values = parse_reals(cfg.s_values)
    if cfg.n_samples is None:
        cfg.n_samples = _N_DEFAULT.get(cfg.subcommand)
    if cfg.format not in ("csv", "json"):
        raise DomainError(f"format must be csv or json (got {cfg.format!r})")
    return cfg


def resolve_workers(flag: int | None) -> int:
    w = flag if flag is not None else default_workers()
    if w < 1:
        raise DomainError(f"workers >= 1 required (got {w})")
    return w


# -- output ------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, allow_nan=False)


_PLOTS = {
    "gen": ("set xlabel 't'\nset ylabel 'f1'\nset zlabel 'f2'\n"
            "splot '{csv}' using 1:2:3 with lines notitle\n"),
    "gen-scalar": ("set xlabel 't'\nset ylabel 'W(t)'\n"
                   "plot '{csv}' using 1:2 with lines notitle\n"),
    "boxdim": ("set logscale xy\nset xlabel 'm'\nset ylabel 'N(m)'\n"
               "plot '{csv}' using 1:2 with linespoints title 'box count'\n"),
    "corrdim": ("set logscale xy\nset xlabel 'r'\nset ylabel 'C(r)'\n"
                "plot '{csv}' using 1:2 with linespoints title 'correlation integral'\n"),
    "energy": ("set logscale xy\nset xlabel 'delta'\nset ylabel 'mean kernel'\n"
               "plot for [s in '{svals}'] '{csv}' using "
               "(abs($1 - s) < 1e-12 ? $2 : 1/0):3:4 with yerrorlines title 's='.s\n"),
}


def plot_script(cmd: str, csv_name: str, cfg: RunConfig) -> str | None:
    body = _PLOTS.get(cmd)
    if body is None:
        return None
    svals = " ".join(_cell(s) for s in cfg.s_values)
    return ("set datafile separator ','\nset key autotitle columnhead\n"
            + body.format(csv=csv_name, svals=svals))


# -- subcommands -------------------------------------------------------------
# each returns (result dict, csv header, csv rows, passed or None)

def _params(cfg):
    return series.make_params(cfg.b, cfg.beta)


def run_gen(cfg, workers):
    p = _params(cfg)
    g = boxdim.sample_graph(p, cfg.seed, cfg.step, cfg.eps, workers=workers)
    res = {"points": len(g.points), "certified_eps": g.eps, "theorem_mode": p.theorem_mode}
    return res, ("t", "f1", "f2"), g.points.tolist(), None


def run_gen_scalar(cfg, workers):
    n = int(cfg.n_samples)
    if n < 1:
        raise DomainError(f"n_samples >= 1 required (got {n})")
    ts = np.arange(n) / n
    w = series.eval_scalar_classic(cfg.a, cfg.b, ts, cfg.eps)
    res = {"points": n, "w_at_0": float(w[0])}
    if n % 2 == 0:
        res["w_at_half"] = float(w[n // 2])
    return res, ("t", "w"), np.column_stack([ts, w]).tolist(), None


def run_boxdim(cfg, workers):
    p = _params(cfg)
    g = boxdim.sample_graph(p, cfg.seed, cfg.step, cfg.eps, workers=workers)
    lad = boxdim.box_ladder(g, cfg.scales, cfg.method, cfg.drop, workers=workers)
    bounds = [boxdim.cover_bound(p, int(m), g.eps) for m in lad.ms]
    viol = int(sum(c > bnd for c, bnd in zip(lad.counts, bounds)))
    res = {"slope": lad.fit.slope, "intercept": lad.fit.intercept, "r2": lad.fit.r2,
           "beta": p.beta, "theorem_value": p.theorem_value, "method": lad.method,
           "dropped": lad.dropped, "cover_bound_violations": viol}
    return res, ("m", "count", "log10_m", "log10_count"), list(lad.rows()), None


def run_corrdim(cfg, workers):
    p = _params(cfg)
    if not 0 < cfg.r_min < cfg.r_max:
        raise DomainError(f"0 < r_min < r_max required (got {cfg.r_min}, {cfg.r_max})")
    g = boxdim.sample_graph(p, cfg.seed, cfg.step, cfg.eps, workers=workers)
    radii = np.geomspace(cfg.r_max, cfg.r_min, int(cfg.n_radii))
    r = energy.correlation_dimension(g, radii, int(cfg.n_samples), cfg.mc_seed,
                                     workers=workers)
    res = {"slope": r.slope, "intercept": r.intercept, "r2": r.r2, "beta": p.beta,
           "theorem_value": p.theorem_value, "n_pairs_per_radius": int(cfg.n_samples)}
    return res, ("radius", "correlation"), [list(c) for c in r.curve], None


def run_energy(cfg, workers):
    p = _params(cfg)
    ests = energy.energy_ladder(p, cfg.seed, cfg.s_values, cfg.deltas, int(cfg.n_samples),
                                cfg.mc_seed, cfg.eps, estimator=cfg.estimator,
                                workers=workers)
    trends = {}
    for s in cfg.s_values:
        group = [e for e in ests if e.s == s and e.delta > 0]
        if len(group) >= 2 and len({e.delta for e in group}) >= 2:
            trends[_cell(s)] = energy.energy_trend(group).to_dict()
    res = {"threshold": p.theorem_value, "trend": trends, "estimator": cfg.estimator}
    rows = [(e.s, e.delta, e.mean, e.stderr, e.n) for e in ests]
    return res, ("s", "delta", "mean", "stderr", "n_accepted"), rows, None


def _single_s(cfg) -> float:
    if len(cfg.s_values) != 1:
        raise DomainError(f"exactly one --s value required (got {cfg.s_values})")
    return cfg.s_values[0]


def run_constants(cfg, workers):
    p = _params(cfg)
    chain = density.constant_chain(p, _single_s(cfg))
    d = chain.to_dict()
    return d, ("name", "value"), sorted(d.items()), None


def run_holder(cfg, workers):
    p = _params(cfg)
    r = series.holder_check(p, cfg.seed, int(cfg.n_samples), cfg.mc_seed, cfg.eps,
                            workers=workers)
    return r, ("name", "value"), sorted(r.items()), r["pass"]


def run_density(cfg, workers):
    p = _params(cfg)
    chain = density.constant_chain(p, _single_s(cfg))
    smp = density.sample_sq_distance(p, cfg.x, cfg.y, int(cfg.n_samples), cfg.seed, cfg.eps,
                                     workers=workers)
    chk = density.density_sup_check(smp, chain, cfg.bandwidth)
    res = chk.to_dict()
    res["constants"] = chain.to_dict()
    rows = np.column_stack([smp.X1s, smp.X2s, smp.Xs]).tolist()
    return res, ("X1", "X2", "X"), rows, chk.passed


def run_expectation(cfg, workers):
    p = _params(cfg)
    r = density.expectation_check(p, _single_s(cfg), cfg.x, cfg.y, int(cfg.n_samples),
                                  cfg.seed, cfg.eps, workers=workers)
    return r, ("name", "value"), sorted(r.items()), r["pass"]


def run_selftest(cfg, workers):
    from .selftest import run_suite
    checks, tables = run_suite(cfg.seed, cfg.mc_seed, workers=workers)
    passed = all(c["pass"] for c in checks)
    res = {"checks": len(checks), "failed": [c["name"] for c in checks if not c["pass"]],
           "tables": tables}
    rows = [(c["name"], c["pass"], c["value"]) for c in checks]
    return res, ("check", "pass", "value"), rows, passed


HANDLERS = {
    "gen": run_gen, "gen-scalar": run_gen_scalar, "boxdim": run_boxdim,
    "corrdim": run_corrdim, "energy": run_energy, "constants": run_constants,
    "holder-check": run_holder, "density-check": run_density,
    "expectation-check": run_expectation, "selftest": run_selftest,
}


def execute(cfg: RunConfig, out_dir: str, workers: int) -> tuple[dict, int]:
    cmd = cfg.subcommand
    result, header, rows, passed = HANDLERS[cmd](cfg, workers)
    files = []
    summary = {"subcommand": cmd, "config": dataclasses.asdict(cfg), "result": result,
               "files": files}
    if cmd == "selftest":
        # auxiliary tables travel in the result; write them next to the summary
        for name, (thead, trows) in result.pop("tables").items():
            fname = f"selftest-{name}.csv"
            atomic_write(os.path.join(out_dir, fname), csv_text(thead, trows))
            files.append(fname)
    if cfg.format == "csv":
        fname = f"{cmd}.csv"
        atomic_write(os.path.join(out_dir, fname), csv_text(header, rows))
        files.append(fname)
        if cfg.emit_plot:
            script = plot_script(cmd, fname, cfg)
            if script is not None:
                atomic_write(os.path.join(out_dir, f"{cmd}.gp"), script)
                files.append(f"{cmd}.gp")
    files.append(f"{cmd}.json")
    summary["pass"] = passed
    if cfg.format == "json":
        full = dict(summary, table={"columns": list(header), "rows": rows})
        atomic_write(os.path.join(out_dir, f"{cmd}.json"), dumps(full) + "\n")
    else:
        atomic_write(os.path.join(out_dir, f"{cmd}.json"), dumps(summary) + "\n")
    return summary, 0 if passed in (None, True) else 1


def _fail(code: int, msg: str) -> int:
    print(f"weierlab: error: {msg}", file=sys.stderr)
    print(dumps({"error": msg, "exit": code}))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:  # argparse already printed the usage message
        return int(e.code or 0)
    try:
        cfg = resolve_config(ns)
        workers = resolve_workers(ns.workers)
        summary, code = execute(cfg, ns.out, workers)
    except (DomainError, ValueError, TypeError, json.JSONDecodeError) as e:
        return _fail(2, str(e))
    except OSError as e:
        return _fail(3, str(e))
    except (WeierlabError, MemoryError, RuntimeError) as e:
        return _fail(3, str(e))
    print(dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
