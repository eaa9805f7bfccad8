"""One test per acceptance criterion, each printing an 'acceptance N: PASS/FAIL' line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected in the terminal summary.
"""
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from planar_kernels.cli import kernel_row
from planar_kernels.extremal import annulus_bergman_series, bergman_minimizer, default_basis, disc_bergman
from planar_kernels.geometry import unit_disc
from planar_kernels.green import GreenEvaluator, bergman_via_green
from planar_kernels.verify import (DEFAULT_R_GRID, KernelEngine, Settings, check_boundary_limit,
                                   check_capacity_limit, check_concavity, check_slope_chain,
                                   polynomial_test_functions)

from conftest import random_interior, record

ANN_POINTS = (0.55, 0.7, 0.9 * np.exp(1j * np.pi / 3))
DISC_POINTS = (0, 0.3, 0.5j)
W_ANN = 0.7
ROWS = {}


def annulus_row(ev_ann, w):
    # fresh engine per point so the timing includes every solve
    if w not in ROWS:
        t0 = time.perf_counter()
        row = kernel_row(KernelEngine(GreenEvaluator(ev_ann.domain), Settings(40, 256, 512)), complex(w))
        ROWS[w] = (row, time.perf_counter() - t0)
    return ROWS[w]


def test_1_disc_oracles():
    t0 = time.perf_counter()
    eng = KernelEngine(GreenEvaluator(unit_disc()))
    g = {r: eng.g(0j, r).value for r in (0.25, 0.5, 1.0)}
    b = eng.bergman(0j).value
    h = eng.hardy(0j).value
    elapsed = time.perf_counter() - t0
    errs = [abs(g[r] / (np.pi * r) - 1) for r in g] + [abs(b * np.pi - 1), abs(h - 1)]
    ok = max(errs) <= 1e-6 and elapsed < 10
    record("1", ok, f"max rel err {max(errs):.2e} (tol 1e-6), runtime {elapsed:.2f}s (< 10s)")
    assert ok


def test_2_equality_case(eng_disc):
    worst = 0.0
    for w in DISC_POINTS:
        b, h, c = eng_disc.bergman(w).value, eng_disc.hardy(w).value, eng_disc.c_beta(w).value
        worst = max(worst, abs(h - np.pi * b), abs(np.pi * b - c ** 2))
    ok = worst <= 1e-5
    record("2", ok, f"max |hR - pi B|, |pi B - c_beta^2| = {worst:.2e} over w in {{0, 0.3, 0.5i}} (tol 1e-5)")
    assert ok


@pytest.mark.parametrize("k", range(3))
def test_3_strict_case(ev_ann, eng_ann, k):
    w = ANN_POINTS[k]
    row, elapsed = annulus_row(ev_ann, w)
    saitoh = row["gap"] / row["gap_error"]
    suita = (row["pi_bergman"] - row["c_beta_sq"]) / (np.pi * row["bergman_error"] + row["c_beta_sq_error"])
    ok = saitoh > 10 and suita > 10 and elapsed < 60
    record(f"3.{k + 1}", ok, f"w={row['point']}: hR-piB = {row['gap']:.3e} ({saitoh:.3g}x err), "
           f"piB-c^2 = {row['pi_bergman'] - row['c_beta_sq']:.3e} ({suita:.3g}x err), "
           f"runtime {elapsed:.1f}s (< 60s)")
    assert ok


def test_4_concavity(ev_disc, eng_disc, ev_ann, eng_ann):
    grid = DEFAULT_R_GRID
    assert len(grid) == 9 and grid[0] == 0.1 and grid[-1] == 1.0
    ann = check_concavity(ev_ann, 40, W_ANN, grid, engine=eng_ann)
    disc = check_concavity(ev_disc, 40, 0.3, grid, engine=eng_disc)
    ok = ann.passed and disc.value("max_abs_ratio") <= 5
    record("4", ok, f"annulus max d2/err {ann.value('max_ratio'):.3g}, "
           f"disc max |d2|/err {disc.value('max_abs_ratio'):.3g} (tol 5)")
    assert ok


def slope_triples(ev_disc, eng_disc, ev_ann, eng_ann):
    return {"disc": check_slope_chain(ev_disc, 40, 0.3, engine=eng_disc),
            "annulus": check_slope_chain(ev_ann, 40, W_ANN, engine=eng_ann)}


def spread(res):
    vals = [res.value(k) for k in ("left_slope", "g0", "right_slope")]
    return max(vals) / min(vals) - 1


def test_5_slope_chain(ev_disc, eng_disc, ev_ann, eng_ann):
    res = slope_triples(ev_disc, eng_disc, ev_ann, eng_ann)
    ok = all(r.passed for r in res.values()) and spread(res["disc"]) <= 1e-2
    record("5.1", ok, "left <= g(0) <= right within 1% on disc and annulus; "
           f"disc spread {spread(res['disc']):.2e} (tol 1e-2)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the three slopes coincide to ~1e-9 on A(0.5, 1); see ledger")
def test_5_not_all_equal_off_disc(ev_disc, eng_disc, ev_ann, eng_ann):
    res = slope_triples(ev_disc, eng_disc, ev_ann, eng_ann)
    ok = spread(res["annulus"]) > 1e-2
    record("5.2", ok, f"'all three equal within 1% on the disc only': annulus spread "
           f"{spread(res['annulus']):.2e}, needs > 1e-2")
    assert ok


def test_6_boundary_limit(ev_disc, eng_disc, ev_ann, eng_ann):
    labels, funcs = zip(*polynomial_test_functions())
    assert labels == ("1", "z", "z^2")
    out = {name: check_boundary_limit(ev, w, list(funcs), engine=eng, labels=labels)
           for name, ev, eng, w in (("disc", ev_disc, eng_disc, 0.3), ("annulus", ev_ann, eng_ann, W_ANN))}
    ok = all(r.passed for r in out.values())
    record("6", ok, ", ".join(f"{k} worst rel diff {r.residual:.2e}" for k, r in out.items()) + " (tol 1e-2)")
    assert ok


def test_7_capacity_limit(ev_disc, eng_disc, ev_ann, eng_ann):
    out = {"disc": check_capacity_limit(ev_disc, 40, 0.3, engine=eng_disc),
           "annulus": check_capacity_limit(ev_ann, 40, W_ANN, engine=eng_ann)}
    ok = all(r.passed for r in out.values())
    record("7", ok, ", ".join(f"{k} rel diff {r.residual:.2e}" for k, r in out.items()) + " (tol 2e-2)")
    assert ok


def test_8_cross_validation(ev_disc, disc, ev_ann, ann):
    diag = 0.0
    for ev, dom, series in ((ev_disc, disc, lambda w: disc_bergman(w, w)),
                            (ev_ann, ann, lambda w: annulus_bergman_series(0.5, w, w))):
        for w in random_interior(dom, 10, seed=8):
            diag = max(diag, abs(bergman_via_green(ev, w, w).real / np.real(series(w)) - 1))
    f = bergman_minimizer(ev_ann, default_basis(ann, 40, W_ANN), W_ANN, 256)
    bww = bergman_via_green(ev_ann, W_ANN, W_ANN)
    zs = random_interior(ann, 20, seed=18)
    kern = np.array([bergman_via_green(ev_ann, z, W_ANN) for z in zs]) / bww
    mini = np.max(np.abs(f(zs) - kern))
    ok = diag <= 1e-3 and mini <= 1e-4
    record("8", ok, f"Bergman diagonal vs series max rel {diag:.2e} (tol 1e-3); "
           f"minimizer vs B(z,w)/B(w,w) max abs {mini:.2e} (tol 1e-4)")
    assert ok


def test_9_convergence(ev_ann, eng_disc):
    deltas = {}
    for w in DISC_POINTS:
        d = eng_disc.doubling_delta(w)
        deltas[f"disc {w}"] = max(d.values())
    for w in ANN_POINTS:
        row, _ = annulus_row(ev_ann, w)
        deltas[f"annulus {row['point']}"] = max(row["bergman_doubling_delta"], row["hardy_doubling_delta"])
    worst = max(deltas.values())
    ok = worst < 1e-6
    record("9", ok, f"max relative change on doubling degree and resolution {worst:.2e} (tol 1e-6)")
    assert ok


def test_10_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        cmd = [sys.executable, "-m", "planar_kernels", "verify", "--domain", "annulus", "--q", "0.5",
               "--point", "0.7", "--point", "0.6+0.3i", "--checks", "suita,saitoh", "--out", str(path)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    json.loads(outs[0])
    ok = outs[0] == outs[1]
    record("10", ok, f"two subprocess runs, {len(outs[0])} bytes, identical={ok}")
    assert ok
