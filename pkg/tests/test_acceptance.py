"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the lines are
repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from chordflow.dynamics import (
    central_action,
    center_shoot,
    chord_action,
    chord_shoot,
    cayley_from_central,
    cayley_from_chord,
    finite_difference_hessian,
    flow,
    flow_many,
    get_model,
    symplectic_defect,
)
from chordflow.leaf import find_chords, make_circle_leaf
from chordflow.oracle import (
    GridWavefunction,
    MoyalLattice,
    displaced_fock,
    exact_evolve,
    fock_wigner,
    gaussian_wigner_grid,
    moyal_product_numeric,
    poisson_evolution_check,
    WignerGrid,
    wigner_transform,
)
from chordflow.propagation import (
    leaf_evolution_engine,
    propagate_point,
    reconstructed_action,
    stationary_residual,
    tips_flow,
)
from chordflow.studies import OracleState, caustic_free_specs, compare_engines, rect_points, run_bench, scaling_study
from chordflow.wigner import evaluate

from conftest import report


@pytest.fixture(scope="module")
def specs():
    return caustic_free_specs(1000, seed=12345)


@pytest.fixture(scope="module")
def bench_printed(specs):
    t0 = time.perf_counter()
    checks = run_bench(specs, form="printed")
    return checks, time.perf_counter() - t0


def test_criterion_01_quartic_phase_closed_form(bench_printed):
    checks, elapsed = bench_printed
    errs = np.array([c.abs_err for c in checks if not c.flagged])
    bad = int((errs > 1e-6).sum())
    ok = bad == 0 and elapsed < 60
    report(1, ok, f"max |phase_transport - dS| = {errs.max():.3e} over {len(errs)} specs, "
                  f"{bad} above 1e-6, {elapsed:.1f} s")
    assert ok


def test_criterion_02_quartic_new_center(bench_printed):
    checks, _ = bench_printed
    errs = np.array([c.center_err for c in checks if not c.flagged])
    ok = errs.max() <= 1e-8
    report(2, ok, f"max |x_tilde - closed form| = {errs.max():.3e} over {len(errs)} specs")
    assert ok


def test_criterion_03_scaling_exponent():
    slope, _, _ = scaling_study(t=0.05, lo=0.1, hi=0.8, count=8)
    ok = abs(slope - 3.0) <= 0.2
    report(3, ok, f"fitted exponent {slope:.4f} (t = 0.05, r+ - r- in [0.1, 0.8])")
    assert ok


def _quadratic_case(name, rng):
    model = get_model(name)
    hbar, t = 0.1, 0.7
    center = np.array([0.5, 0.3])
    leaf = make_circle_leaf(center, None, quantum_number=3, hbar=hbar)
    R = math.sqrt(leaf.area / math.pi)
    rad = 0.9 * R * np.sqrt(rng.uniform(0, 1, 200))
    ang = rng.uniform(0, 2 * math.pi, 200)
    pts = center + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)

    # exact reference: coherent state at the leaf centre, evolved and Wigner transformed
    psi0 = GridWavefunction.from_function(lambda q: displaced_fock(0, hbar, center, q), -7, 7, 1024, hbar)
    psi_t = exact_evolve(name, psi0, t, n_max=80)
    Wt = wigner_transform(psi_t, check=False)
    # crop to the support before building the cubic interpolator
    ip = np.abs(Wt.p - center[0]) < 2.0
    iq = np.abs(Wt.q - center[1]) < 2.5
    Wt = WignerGrid(Wt.p[ip], Wt.q[iq], Wt.values[np.ix_(ip, iq)], hbar).interpolator("cubic")
    W0 = lambda x: fock_wigner(0, hbar, x, center=center)

    sc_gap = center_gap = oracle_tips = oracle_liou = 0.0
    for x0 in pts:
        branches = propagate_point(leaf, hbar, x0, model, t)
        _, X, _, _ = flow_many(model, x0[None, :], t)
        for b in branches:
            xt = b.x_tilde
            center_gap = max(center_gap, float(np.max(np.abs(xt - X[-1, 0]))))
            _, Xb, _, _ = flow_many(model, xt[None, :], -t)
            liou = evaluate(leaf, hbar, Xb[-1, 0]).value
            sc_gap = max(sc_gap, abs(b.value(hbar) - liou))
            oracle_tips = max(oracle_tips, abs(float(Wt(xt[None])[0]) - float(W0(x0))))
            oracle_liou = max(oracle_liou, abs(float(Wt(xt[None])[0]) - float(W0(Xb[-1, 0]))))
    return sc_gap, center_gap, oracle_tips, oracle_liou


def test_criterion_04_quadratic_coincidence():
    rng = np.random.default_rng(4)
    lines, ok = [], True
    for name in ("harmonic", "shear"):
        sc_gap, cgap, o_tips, o_liou = _quadratic_case(name, rng)
        good = sc_gap <= 1e-8 and cgap <= 1e-8 and o_tips <= 1e-4 and o_liou <= 1e-4
        ok &= good
        lines.append(f"{name}: engines {sc_gap:.1e}, centres {cgap:.1e}, oracle {o_tips:.1e}/{o_liou:.1e}")
    report(4, ok, "; ".join(lines))
    assert ok


def test_criterion_05_on_leaf_coincidence():
    tol = 1e-12
    model = get_model("quartic")
    leaf = make_circle_leaf([0.8, 0.0], 1.0, n_samples=256)
    worst = 0.0
    for t in (0.3, 1.0, -0.7):
        for x0 in leaf.points[::16]:
            (b,) = propagate_point(leaf, 0.05, x0, model, t, tol=tol)
            _, X, _, _ = flow_many(model, x0[None, :], t, tol=tol)
            worst = max(worst, float(np.linalg.norm(b.x_tilde - X[-1, 0])))
    ok = worst <= 10 * tol
    report(5, ok, f"max |x_tilde - x_t| = {worst:.2e} (bound {10 * tol:.0e})")
    assert ok


def test_criterion_06_engine_equivalence():
    model = get_model("quartic")
    leaf = make_circle_leaf([0.8, 0.0], None, quantum_number=20, hbar=1 / 41)
    rng = np.random.default_rng(6)
    pts = np.array([0.8, 0.0]) + rng.uniform(-0.95, 0.95, (80, 2))
    pts = pts[np.linalg.norm(pts - [0.8, 0.0], axis=1) < 0.95]
    worst, n = 0.0, 0
    for t in (0.25, 0.5, 1.0):
        leaf_t = leaf_evolution_engine(leaf, model, t)
        for x0 in pts:
            for b in propagate_point(leaf, 1 / 41, x0, model, t):
                if b.flagged:
                    continue
                S = reconstructed_action(leaf_t, b)
                worst = max(worst, abs(S - b.action_t) / (1 + abs(S)))
                n += 1
    ok = worst <= 1e-5 and n > 0
    report(6, ok, f"max relative phase gap {worst:.2e} over {n} branches, t in {{0.25, 0.5, 1}}")
    assert ok


def test_criterion_07_structural_invariants():
    rng = np.random.default_rng(7)
    sym = 0.0
    for name in ("harmonic", "quartic", "shear"):
        X0 = rng.uniform(-1.5, 1.5, (50, 2))
        _, _, M, _ = flow_many(get_model(name), X0, 1.3)
        sym = max(sym, symplectic_defect(M))

    cay = 0.0
    for name, x0, t in (("harmonic", [0.6, 0.5], 0.7), ("quartic", [0.6, 0.5], 0.7), ("quartic", [0.2, -0.9], 0.4)):
        model = get_model(name)
        seg = flow(model, x0, t)
        M = seg.final_monodromy
        S = lambda y: central_action(center_shoot(model, y, t, guess=x0))
        cay = max(cay, float(np.max(np.abs(cayley_from_central(finite_difference_hessian(S, seg.center)) - M))))
        St = lambda z: chord_action(chord_shoot(model, z, t, guess=x0))
        cay = max(cay, float(np.max(np.abs(cayley_from_chord(finite_difference_hessian(St, seg.chord)) - M))))

    area = 0.0
    for name in ("harmonic", "quartic", "shear"):
        leaf = make_circle_leaf([0.8, 0.0], 1.0)
        for t in (-2.0, 1.0, 2.0):
            leaf_t = leaf_evolution_engine(leaf, get_model(name), t)
            area = max(area, abs(leaf_t.enclosed_area / leaf.enclosed_area - 1))
    ok = sym <= 1e-8 and cay <= 1e-5 and area <= 1e-6
    report(7, ok, f"symplectic defect {sym:.1e}, Cayley vs monodromy {cay:.1e}, area drift {area:.1e}")
    assert ok


def test_criterion_08_oracle_superiority():
    t0 = time.perf_counter()
    n, hbar, c = 20, 1 / 41, np.array([0.8, 0.0])
    model = get_model("quartic")
    leaf = make_circle_leaf(c, None, quantum_number=n, hbar=hbar)
    oracle = OracleState(n=n, hbar=hbar, center=c, model_name="quartic")
    _, _, pts = rect_points(-0.2, 1.8, -1.0, 1.0, 25)
    cmp = compare_engines(leaf, hbar, model, 0.3, pts, oracle, annulus=(0.3, 0.8))
    sc, lv = cmp.l2("semiclassical"), cmp.l2("liouville")
    elapsed = time.perf_counter() - t0
    ok = sc < lv and elapsed < 300
    report(8, ok, f"L2 semiclassical {sc:.4f} vs Liouville {lv:.4f} (rms exact {cmp.scale:.3f}, "
                  f"{int(cmp.in_region.sum())} points, {elapsed:.1f} s)")
    assert ok


def test_criterion_09_moyal_poisson():
    lat = MoyalLattice(61, 0.2)
    B = lat.sample(lambda p, q: np.exp(-(p * p + q * q)) * (1 + 0.3 * p - 0.2 * q * q))
    ident = float(np.max(np.abs(moyal_product_numeric(np.ones((61, 61)), B, lat) - B)))

    quartic = get_model("quartic")
    axis = np.linspace(-4, 4, 256)
    smooth = [poisson_evolution_check(quartic, gaussian_wigner_grid(axis, axis, h, 0.5, (0.5, 0.3)))
              for h in (0.02, 0.01)]
    factor = smooth[0] / smooth[1]

    osc = []
    for n in (10, 20):
        h = 1.0 / (2 * n + 1)
        ax = np.linspace(-2.5, 2.5, 512)
        P, Q = np.meshgrid(ax, ax, indexing="ij")
        W = WignerGrid(ax, ax, fock_wigner(n, h, np.stack([P, Q], -1), center=(0.6, 0.0)), h)
        osc.append(poisson_evolution_check(quartic, W))
    ok = ident < 1e-10 and abs(factor - 4) <= 0.5 and min(osc) > 0.1 and osc[1] > 0.5 * osc[0]
    report(9, ok, f"|1*B - B| = {ident:.1e}; Richardson factor {factor:.3f}; "
                  f"oscillatory discrepancy {osc[0]:.3f} -> {osc[1]:.3f} under hbar halving")
    assert ok


def test_criterion_10_stationary_residual():
    leaf = make_circle_leaf([0.5, 0.2], 1.0)
    x0 = np.array([0.7, 0.5])
    lines, ok = [], True
    for name in ("harmonic", "quartic"):
        model = get_model(name)
        cfg = tips_flow(model, find_chords(leaf, x0)[0], 0.7)
        r0 = stationary_residual(cfg, leaf, model)
        r1 = min(stationary_residual(cfg, leaf, model, perturb=d) for d in ([1e-2, 0], [0, 1e-2]))
        good = r0 < 1e-5 and r1 >= 10 * r0
        ok &= good
        lines.append(f"{name}: matched {r0:.1e}, perturbed {r1:.1e}")
    report(10, ok, "; ".join(lines))
    assert ok
