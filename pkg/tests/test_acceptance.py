"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""
import json
import math
import time

import numpy as np
import pytest

from densq import (
    ScaleGrid,
    WeightedPointMeasure,
    beta2,
    beta_inf,
    build_cantor,
    find_thin_boundary_radius,
    run_comparability,
    run_identity_suite,
    run_integer_degeneracy,
    run_small_s_comparability,
    run_tent_counterexample,
    square_function_energy,
    wolff_energy,
)
from densq.experiments import EXPERIMENTS

from conftest import brute_ball_atoms
from test_betas import scan_beta2


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:2d} [{'PASS' if ok else 'FAIL'}] {detail}")
    assert ok


# ---------------------------------------------------------------------------

def test_criterion_1_index_oracle_exactness():
    rng = np.random.default_rng(11)
    m = WeightedPointMeasure(rng.uniform(-1, 1, size=(1000, 2)),
                             rng.uniform(0.5, 1.5, size=1000) / 1000)
    idx = m.ball_index()
    t0 = time.perf_counter()
    worst = 0.0
    sets_equal = True
    for _ in range(1000):
        c = rng.uniform(-1.2, 1.2, size=2)
        r = rng.uniform(0.0, 2.0)
        got = np.sort(idx.ball_atoms(c, r))
        ref = brute_ball_atoms(m, c, r)
        if not np.array_equal(got, ref):
            sets_equal = False
            break
        mass_got = float(m.weights[got].sum())
        mass_ref = float(m.weights[ref].sum())
        if mass_ref > 0:
            worst = max(worst, abs(mass_got - mass_ref) / mass_ref)
    elapsed = time.perf_counter() - t0
    ok = sets_equal and worst <= 1e-12 and elapsed < 10.0
    verdict(1, ok, f"index vs brute force: identical sets={sets_equal}, "
                   f"max rel mass diff={worst:.2e}, {elapsed:.2f}s (< 10 s)")


def test_criterion_2_quadrature_consistency_and_tails():
    s = 0.5
    m = build_cantor(2, s, 6)
    r_min, r_max = 4 * m.min_spacing, 8 * m.support_radius
    ratios = {}
    for fn, name in [(square_function_energy, "sf"), (wolff_energy, "wolff")]:
        a = fn(m, s, ScaleGrid(r_min, r_max, 1.2)).total
        b = fn(m, s, ScaleGrid(r_min, r_max, 1.02)).total
        ratios[name] = a / b
    quad_ok = all(abs(v - 1) <= 0.05 for v in ratios.values())
    # closed-form tail vs numeric log-midpoint quadrature over [T, 100T], q=1.05
    p = 2.0
    M = m.total_mass
    T = float(np.median(m.farthest_distances()))
    q = 1.05
    n = int(math.ceil(math.log(100.0) / math.log(q)))
    edges = T * q ** np.arange(n + 1)
    edges[-1] = 100.0 * T
    mids = np.sqrt(edges[:-1] * edges[1:])
    widths = np.log(edges[1:] / edges[:-1])
    tail_ok = True
    errs = []
    for coeff in [(M * (1 - 2.0 ** -s)) ** p, M ** p]:
        closed = coeff / (p * s) * (T ** (-p * s) - (100.0 * T) ** (-p * s))
        numeric = float((coeff * mids ** (-p * s) * widths).sum())
        errs.append(abs(numeric / closed - 1))
        tail_ok = tail_ok and errs[-1] <= 0.01
    verdict(2, quad_ok and tail_ok,
            f"q=1.2 vs q=1.02 totals: sf ratio={ratios['sf']:.4f}, "
            f"wolff ratio={ratios['wolff']:.4f} (within 5%); "
            f"tail vs quadrature errs={[f'{e:.2e}' for e in errs]} (within 1%)")


def test_criterion_3_comparability_family():
    t0 = time.perf_counter()
    res = run_comparability()
    elapsed = time.perf_counter() - t0
    spread = next(c["value"] for c in res.checks if c["name"] == "ratio_spread")
    worst_drift = max(c["value"] for c in res.checks
                      if c["name"].startswith("depth_drift"))
    ok = res.passed and elapsed < 60.0
    verdict(3, ok, f"SF/Wolff ratio spread={spread:.2f} (<= 20), worst depth "
                   f"drift={worst_drift:.3f} (<= 0.10), {elapsed:.1f}s (< 60 s)")


def test_criterion_4_integer_degeneracy():
    res = run_integer_degeneracy()
    vals = {c["name"]: c for c in res.checks}
    ratio = vals["sf_wolff_ratio_finest"]["value"]
    wom = vals["wolff_matches_4_mass_log_range"]["value"]
    ok = res.passed
    verdict(4, ok, f"flat line s=1: SF/Wolff={ratio:.2e} (< 1e-3), strictly "
                   f"decreasing across 4x widenings, Wolff/4m·ln(range)="
                   f"{wom:.4f} (within 5%)")


@pytest.fixture(scope="module")
def tent_result():
    t0 = time.perf_counter()
    res = run_tent_counterexample()
    return res, time.perf_counter() - t0


def test_criterion_5_tent_sf_and_riesz(tent_result):
    res, elapsed = tent_result
    sf_slope = res.fits["square_function"]["slope"]
    rz_slope = res.fits["sup_riesz"]["slope"]
    named = {c["name"]: c for c in res.checks}
    ok = (named["square_function_slope"]["passed"]
          and named["sup_riesz_slope"]["passed"]
          and named["sf_over_riesz_monotone_to_zero"]["passed"]
          and named["l_stability_sf"]["passed"]
          and named["l_stability_riesz"]["passed"]
          and elapsed < 300.0)
    verdict(5, ok, f"tent sweep: SF slope={sf_slope:.3f} (in [3.5,4.5]), "
                   f"sup-Riesz slope={rz_slope:.3f} (in [1.7,2.3]), SF/Riesz "
                   f"monotone to 0, L-doubling stable, {elapsed:.1f}s (< 300 s)")


def test_criterion_6_beta_comparison(tent_result):
    res, _ = tent_result
    bt_slope = res.fits["beta2"]["slope"]
    gap = (res.fits["square_function_mu"]["slope"]
           - res.fits["beta2"]["slope"])
    named = {c["name"]: c for c in res.checks}
    ok = (named["beta2_slope"]["passed"]
          and named["sf_over_beta_slope_gap"]["passed"]
          and named["sf_over_beta_monotone_to_zero"]["passed"])
    verdict(6, ok, f"beta2-energy slope={bt_slope:.3f} (in [1.7,2.3]), SF/beta "
                   f"-> 0 with slope gap={gap:.3f} (in [1.5,2.5])")


def test_criterion_7_small_s_three_way():
    res = run_small_s_comparability()
    vals = {c["name"]: c["value"] for c in res.checks}
    ratios = [v for k, v in vals.items() if k.startswith("ratio_")]
    drifts = [v for k, v in vals.items() if k.startswith("drift_")]
    ok = res.passed
    verdict(7, ok, f"s=0.5 cantor: pairwise ratios={[f'{v:.3f}' for v in ratios]} "
                   f"(in [1/30, 30]), depth drifts={[f'{v:.3f}' for v in drifts]} "
                   f"(<= 0.15)")


def test_criterion_8_smoothing_identity():
    res = run_identity_suite()
    max_resid = res.checks[0]["value"]
    cfg = res.config
    ok = (res.passed and cfg["n_measures"] == 20 and cfg["n_atoms"] == 100
          and cfg["n_queries"] == 20 and cfg["quad_points"] == 512
          and set(cfg["profiles"]) == {"gaussian", "bump"})
    verdict(8, ok, f"20 measures x 20 queries x (gaussian, bump): max relative "
                   f"residual={max_resid:.2e} (< 1e-6 at 512 nodes)")


def test_criterion_9_thin_boundary():
    m = build_cantor(2, 0.5, 5)
    rng = np.random.default_rng(17)
    t_thin = 32.0 * m.dim
    lam_grid = [2.0 ** (-j) for j in range(11)]
    found = 0
    for _ in range(100):
        x = m.points[rng.integers(0, m.n_atoms)]
        r = math.exp(rng.uniform(math.log(4 * m.min_spacing),
                                 math.log(m.support_radius)))
        rp = find_thin_boundary_radius(m, x, r, t_thin=t_thin,
                                       lambda_grid=lam_grid)
        assert r <= rp <= 2 * r
        found += 1
    # adversarial shell: atoms on a circle of radius rho in (r, 2r)
    th = rng.uniform(0, 2 * math.pi, size=500)
    rho = 1.4
    shell = WeightedPointMeasure(rho * np.stack([np.cos(th), np.sin(th)], 1),
                                 np.full(500, 1.0 / 500))
    rp = find_thin_boundary_radius(shell, [0.0, 0.0], 1.0, t_thin=64.0,
                                   lambda_grid=lam_grid)
    avoided = abs(rp - rho) / rp > 2.0 ** -10
    ok = found == 100 and avoided
    verdict(9, ok, f"thin-boundary search: {found}/100 random (x, r) succeed "
                   f"at t=32d; shell radius avoided (r'={rp:.4f} vs rho={rho})")


def test_criterion_10_beta_oracles():
    rng = np.random.default_rng(23)
    worst = 0.0
    holder_ok = True
    n_cfg = 0
    while n_cfg < 100:
        n = int(rng.integers(3, 40))
        pts = rng.uniform(-1, 1, size=(n, 2))
        w = rng.uniform(0.2, 2.0, size=n)
        m = WeightedPointMeasure(pts, w)
        x = rng.uniform(-0.5, 0.5, size=2)
        r = rng.uniform(0.5, 2.5)
        d2 = ((m.points - x) ** 2).sum(axis=1)
        if not (d2 <= r * r).any():
            continue
        n_cfg += 1
        b2 = beta2(m, x, r)[0]
        worst = max(worst, abs(b2 - scan_beta2(m, x, r)))
        mass = float(m.weights[d2 <= r * r].sum())
        binf = beta_inf(m, x, r)[0]
        if b2 > math.sqrt(mass / r) * binf + 1e-12:
            holder_ok = False
    ok = worst <= 1e-6 and holder_ok
    verdict(10, ok, f"beta2 closed form vs dense scan on 100 configs: max "
                    f"diff={worst:.2e} (<= 1e-6); Holder ordering "
                    f"beta2 <= sqrt(mass/r)*beta_inf everywhere={holder_ok}")


def test_criterion_11_determinism(tmp_path):
    quick = {
        "comparability": {"s_list": [0.5, 0.7, 1.2, 1.5], "depth": 3,
                          "drift_depth": 2},
        "integer-degeneracy": {"resolutions": [101, 201],
                               "widen_factors": [1, 4]},
        "tent-counterexample": {"alpha_list": [math.pi / 4 * 2.0 ** (-k)
                                               for k in range(4)],
                                "sf_spacing": 2e-3},
        "small-s": {"depth": 3, "drift_depth": 2},
        "identity": {"n_measures": 2, "n_atoms": 30, "n_queries": 2,
                     "quad_points": 64},
    }
    all_ok = True
    for name, cfg in quick.items():
        _, runner = EXPERIMENTS[name]
        blobs = []
        for i, threads in enumerate([1, 4]):
            out = tmp_path / f"{name}-{i}"
            runner(cfg, threads=threads).emit(out)
            blobs.append((out / "result.json").read_bytes())
        if blobs[0] != blobs[1]:
            all_ok = False
    verdict(11, all_ok, "all five experiments rerun at 1 and 4 threads: "
                        "result.json bit-identical")
