"""Fast property suite behind ``weierlab selftest``.

Each check is a dict ``{name, pass, value}`` where ``value`` is the number
the check turned on. Everything is seeded, and the reductions do not depend
on the worker count, so two runs with the same seeds give identical outputs.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special, stats

from . import boxdim, density, energy, series
from .errors import DomainError, SingularityError
from .phases import PhaseSeq, Role, sample_phases, stream_key, uniform_stream


def _check(name, ok, value):
    return {"name": name, "pass": bool(ok), "value": float(value)}


def _series_checks(seed, mc_seed, workers):
    out = []
    p4 = series.make_params(4, 0.25)
    out.append(_check("params_a_4_quarter", abs(p4.a - 2 ** -0.5) < 1e-15, p4.a))
    n = series.truncation_order(p4, 0.01)
    out.append(_check("truncation_order_4_quarter", n == 18, n))
    z = np.zeros(64)
    v = series.evaluate_at(p4, z, z, [0.0], 1e-6)[0]
    out.append(_check("eval_zero_phases", abs(v[0] - (2 + math.sqrt(2))) <= 1e-6 and v[1] == 0,
                      v[0]))
    p = series.make_params(3, 0.3)
    th, la = sample_phases(seed, Role.THETA, 128), sample_phases(seed, Role.LAMBDA, 128)
    # dyadic abscissae, so that t + 1 is exact
    ts = np.floor(uniform_stream(stream_key(mc_seed, Role.PAIRS, replicate=99), 0, 512)
                  * 2 ** 40) / 2 ** 40
    f = series.evaluate_at(p, th, la, ts, 1e-9)
    g = series.evaluate_at(p, (th + 0.5) % 1.0, (la + 0.5) % 1.0, ts, 1e-9)
    err = float(np.max(np.abs(f + g)))
    out.append(_check("half_shift_antisymmetry", err < 1e-12, err))
    r = series.eval_raw(p, th, la, ts + 1.0, 1e-9)
    err = float(np.max(np.abs(r - f)))
    out.append(_check("integer_base_periodicity", err == 0.0, err))
    w = series.eval_scalar_classic(0.6, 4, [0.0, 0.5], 1e-9)
    out.append(_check("scalar_classic_values", abs(w[0] - 2.5) < 1e-9 and abs(w[1] - 0.5) < 1e-9,
                      w[1]))
    h = series.holder_check(p, seed, 20000, mc_seed, 1e-6, workers=workers)
    out.append(_check("holder_bound", h["pass"], h["max_ratio"]))
    return out


def _phase_checks(seed):
    out = []
    u = sample_phases(seed, Role.THETA, 10 ** 4)
    prefix = np.array_equal(sample_phases(seed, Role.THETA, 100), u[:100])
    out.append(_check("phase_prefix_stability", prefix, 100))
    ks = stats.kstest(u, "uniform")
    out.append(_check("phase_uniformity_ks", ks.pvalue > 0.01, ks.pvalue))
    lam = sample_phases(seed, Role.LAMBDA, 10)
    out.append(_check("phase_role_separation", not np.array_equal(lam, u[:10]), 10))
    seq = PhaseSeq(seed, Role.THETA)
    out.append(_check("phase_random_access", seq[777] == u[777], u[777]))
    return out


def _box_checks(seed, workers, tables):
    out = []
    p = series.make_params(3, 0.3)
    g = boxdim.sample_graph(p, seed, 2.0 ** -17, 1e-6, workers=workers)
    tables["graph"] = (("t", "f1", "f2"), g.points[::128].tolist())
    ms = boxdim.geometric_ladder(4, 256)
    occ = [boxdim.box_count(g, m, workers=workers) for m in ms]
    cub = [boxdim.cuboid_count(g, m, workers=workers) for m in ms]
    bound = [boxdim.cover_bound(p, m, g.eps) for m in ms]
    tables["box"] = (("m", "occupancy", "cuboid", "cover_bound"),
                     [list(r) for r in zip(ms, occ, cub, bound)])
    out.append(_check("column_completeness", all(c >= m for c, m in zip(occ, ms)), min(occ)))
    sandwich = all(a <= b <= 8 * a for a, b in zip(occ, occ[1:]))
    out.append(_check("dyadic_sandwich", sandwich, occ[-1]))
    chain = all(o <= c <= bd for o, c, bd in zip(occ, cub, bound))
    out.append(_check("cover_bound_soundness", chain, max(c / bd for c, bd in zip(cub, bound))))
    whole = [boxdim.box_count(g, 64, workers=1),
             len(np.unique(boxdim.occupied_cells(g.points, 64, g.half_width)))]
    out.append(_check("partition_independence", whole[0] == whole[1], whole[0]))
    flat = boxdim.GraphSample(p, seed, 1 / 64, 1e-6,
                              np.column_stack([np.linspace(0, 1, 65), np.zeros(65),
                                               np.zeros(65)]))
    out.append(_check("constant_function_count", boxdim.box_count(flat, 16) == 16, 16))
    m = np.array(boxdim.geometric_ladder(16, 1024))
    fit = boxdim.fit_dimension(m, np.rint(7 * m ** 2.4))
    out.append(_check("synthetic_power_law_fit", abs(fit.slope - 2.4) < 0.01, fit.slope))
    return out


def _energy_checks(seed, mc_seed, workers, tables):
    out = []
    out.append(_check("pair_kernel_value", energy.pair_kernel(0, 0.5, (1, 2), (1, 2), 2) == 4.0,
                      4.0))
    try:
        energy.pair_kernel(0.2, 0.2, (1, 1), (1, 1), 2.2)
        raised = False
    except SingularityError:
        raised = True
    out.append(_check("pair_kernel_singularity", raised, 0))
    p = series.make_params(3, 0.3)
    e0 = energy.mc_energy(p, seed, 0.0, 1000, mc_seed)
    out.append(_check("energy_s0", e0.mean == 1.0 and e0.stderr == 0.0, e0.mean))
    ests = energy.energy_ladder(p, seed, [2.2, 2.8], [1e-1, 1e-2], 2 * 10 ** 5, mc_seed,
                                workers=workers)
    tables["energy"] = (("s", "delta", "mean", "stderr", "n_accepted"),
                        [(e.s, e.delta, e.mean, e.stderr, e.n) for e in ests])
    grows = ests[3].mean > ests[2].mean
    out.append(_check("energy_grows_above_threshold", grows, ests[3].mean / ests[2].mean))
    line = np.column_stack([np.linspace(0, 1, 1000)] * 3) / math.sqrt(3)
    seg = boxdim.GraphSample(p, seed, 1e-3, 1e-6, line)
    r = energy.correlation_dimension(seg, np.geomspace(0.3, 0.01, 6), 20000, mc_seed)
    tables["corr_line"] = (("radius", "correlation"), [list(c) for c in r.curve])
    out.append(_check("correlation_line_slope", abs(r.slope - 1.0) < 0.05, r.slope))
    return out


def _density_checks(seed):
    out = []
    ref = float(special.beta(0.5, 0.25))
    out.append(_check("universal_I", abs(density.universal_I() - ref) < 1e-10,
                      density.universal_I()))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for bn in rng.uniform(1e-3, 2.0, 10):
        a, q = density.arcsine_l32_norm(bn), density.arcsine_l32_norm_quadrature(bn)
        worst = max(worst, abs(a - q) / a)
    out.append(_check("l32_norm_identity", worst < 1e-6, worst))
    p = series.make_params(3, 0.3)
    ks = [density.choose_k(p, 0.3, 0.31), density.choose_k(p, 0.0, 1 / 18)]
    out.append(_check("choose_k_examples", ks == [3, 2], ks[0]))
    try:
        density.choose_k(p, 0.0, 0.2)
        raised = False
    except DomainError:
        raised = True
    out.append(_check("choose_k_range", raised, 0))
    viol = 0
    xs = rng.uniform(1 / 18, 1 - 1 / 18, 200)
    ds = rng.uniform(1e-6, 1 / 18, 200) * rng.choice([-1, 1], 200)
    for x, d in zip(xs, ds):
        y = x + d
        k = density.choose_k(p, x, y)
        floor = density.coefficient_floor(p, abs(d))
        viol += sum(abs(density.bn_coefficient(p, n, x, y)) <= floor for n in (k - 2, k - 1, k))
    out.append(_check("coefficient_lower_bound", viol == 0, viol))
    c = density.constant_chain(p, 2.2)
    ok = (c.C3 == c.C2 ** 3 and c.C1 == math.pi * c.C3 ** 2
          and math.isclose(c.C0 * (c.s - 2) / 2, c.C1, rel_tol=1e-12))
    out.append(_check("constant_chain_identities", ok, c.C0))
    kt = density.arcsine_ks_check(p, 1, 0.3, 0.31, 5000, seed)
    out.append(_check("arcsine_single_term_ks", kt["pass"], kt["pvalue"]))
    return out


def run_suite(seed: int = 42, mc_seed: int = 1, *, workers: int = 1):
    """Run every check; returns ``(checks, tables)``.

    ``tables`` maps a name to ``(header, rows)`` for the auxiliary CSVs.
    """
    tables: dict = {}
    checks = []
    checks += _series_checks(seed, mc_seed, workers)
    checks += _phase_checks(seed)
    checks += _box_checks(seed, workers, tables)
    checks += _energy_checks(seed, mc_seed, workers, tables)
    checks += _density_checks(seed)
    return checks, tables
