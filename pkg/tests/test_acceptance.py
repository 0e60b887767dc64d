"""Acceptance gate: one test per numbered criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -s` to see the PASS/FAIL lines as
they complete.  The full gate takes on the order of ten minutes, nearly all
of it in the clustering ensemble of criterion 7.
"""

import math
import subprocess
import sys
from time import perf_counter

import numpy as np

from chemosim import (CellIndex, Domain, Field, FieldParams, Grid, Kernel,
                      MotionParams, Realisation, SimConfig, Species,
                      build_operators, deposit, discrete_mass, em_step,
                      field_at, gradient, interpolate, resolve_hard_sphere,
                      run_ensemble, run_realisation, step_field, tamed_step)
from conftest import brute_neighbors, make_pop


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num:2d} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num}: {detail}"


def _fit_line(x, y):
    a = np.vstack([np.asarray(x), np.ones(len(x))]).T
    slope, intercept = np.linalg.lstsq(a, np.asarray(y), rcond=None)[0]
    return slope, intercept


def test_criterion_01_neighbor_queries_match_brute_force():
    rng = np.random.default_rng(20260819)
    start = perf_counter()
    mismatches = 0
    for case in range(1000):
        n = int(rng.integers(1, 201))
        periodic = bool(case % 2)
        size = float(rng.uniform(0.5, 2.0))
        domain = Domain.square(size, periodic=periodic)
        positions = rng.uniform(-size / 2, size / 2, (n, 2))
        cell_side = float(rng.uniform(0.04, 0.5)) * size
        index = CellIndex.build(positions, domain, cell_side)
        for _ in range(2):
            point = rng.uniform(-size / 2, size / 2, 2)
            radius = float(rng.uniform(0.01, 0.6)) * size
            found = {nb.id for nb in index.query(point, radius)}
            ids, _, _ = brute_neighbors(positions, domain, point, radius)
            if found != set(ids.tolist()):
                mismatches += 1
    elapsed = perf_counter() - start
    ok = mismatches == 0 and elapsed < 30.0
    _report(1, ok, f"1000 randomized configs, 2000 queries, "
                   f"{mismatches} mismatches, {elapsed:.1f} s (< 30 s)")


def test_criterion_02_pure_diffusion_msd_slope():
    start = perf_counter()
    config = SimConfig.preset("msd1", t_final=0.05, dt=5e-4,
                              output_every=1, samples=200)
    result = run_ensemble(config)
    slope, _ = _fit_line(result.times, result.msd_mean)
    elapsed = perf_counter() - start
    rel = abs(slope - 4.0) / 4.0
    ok = rel < 0.05 and elapsed < 120.0
    _report(2, ok, f"msd slope {slope:.4f} vs 4 (rel {rel:.3%}, "
                   f"tol 5%), {elapsed:.1f} s (< 2 min)")


def test_criterion_03_drift_msd_quadratic_growth():
    start = perf_counter()
    config = SimConfig.preset("msd2", samples=100)
    result = run_ensemble(config)
    t = result.times[1:]
    model = 4.0 * t + t ** 2
    rel = float(np.max(np.abs(result.msd_mean[1:] - model) / model))
    late = t >= 10.0
    slope, _ = _fit_line(np.log(t[late]), np.log(result.msd_mean[1:][late]))
    elapsed = perf_counter() - start
    ok = rel < 0.05 and 1.5 <= slope <= 2.0 and elapsed < 120.0
    _report(3, ok, f"max rel residual {rel:.3%} vs 4t + t^2 (tol 5%), "
                   f"late log-log slope {slope:.3f} in [1.5, 2], "
                   f"{elapsed:.1f} s (< 2 min)")


def test_criterion_04_reaction_decay_and_conservation():
    start = perf_counter()
    samples = 200
    config = SimConfig.preset("counts", samples=samples)
    stack = np.stack([run_realisation(config, s).counts
                      for s in range(samples)])          # (S, T, 2)
    conserved = bool(np.all(stack.sum(axis=2) == 200))
    mean = stack[:, :, 0].mean(axis=0)
    se = stack[:, :, 0].std(axis=0, ddof=1) / math.sqrt(samples)
    ratio = mean[-1] / mean[0]
    ratio_se = se[-1] / mean[0]
    target = math.exp(-0.5)
    decay_ok = abs(ratio - target) <= 3.0 * ratio_se

    event = run_ensemble(SimConfig.preset("counts", samples=samples,
                                          scheduler="gillespie"))
    gap = abs(mean[-1] - event.counts_mean[-1, 0])
    band = 3.0 * math.hypot(se[-1], event.counts_se[-1, 0])
    schedulers_ok = gap <= band
    elapsed = perf_counter() - start
    ok = conserved and decay_ok and schedulers_ok and elapsed < 180.0
    _report(4, ok,
            f"survival {ratio:.4f} vs {target:.4f} (3 SE = {3 * ratio_se:.4f}), "
            f"counts sum to 200 at every time: {conserved}, "
            f"fixed vs event-driven gap {gap:.3f} <= {band:.3f}, "
            f"{elapsed:.1f} s (< 3 min)")


def test_criterion_05_field_solver_properties():
    failures = []

    # (a) a uniform profile is a fixed point of pure diffusion
    for boundary in ("neumann", "periodic"):
        g = Grid.square(26, 1.0, boundary)
        ops = build_operators(g, FieldParams(d_c=1.0), 1e-3)
        f = Field.zeros(g)
        f.c[:] = 0.7
        for _ in range(25):
            step_field(f, ops, FieldParams(d_c=1.0), 1e-3)
        err = float(np.max(np.abs(f.c - 0.7)))
        if err > 1e-12:
            failures.append(f"constant drift {err:.2e} ({boundary})")

    # (b) sealed-box diffusion conserves mass step by step
    g = Grid.square(52, 1.0, "neumann")
    params = FieldParams(d_c=1.0)
    ops = build_operators(g, params, 1e-3)
    f = Field.zeros(g)
    f.c = np.random.default_rng(5).random(52 * 52) + 0.5
    mass = discrete_mass(f.c, g)
    worst = 0.0
    for _ in range(1000):
        step_field(f, ops, params, 1e-3)
        new_mass = discrete_mass(f.c, g)
        worst = max(worst, abs(new_mass - mass))
        mass = new_mass
    if worst > 1e-10 * mass:
        failures.append(f"mass drift {worst / mass:.2e} per step")

    # (c) decay-only update multiplies by exactly (1 - gamma dt)
    g = Grid.square(26, 1.0, "neumann")
    params = FieldParams(d_c=0.0, k_alpha=0.0, k_beta=0.0, gamma=0.35)
    ops = build_operators(g, params, 0.02)
    f = Field.zeros(g)
    f.c = np.random.default_rng(6).random(26 * 26)
    expect = f.c.copy()
    for _ in range(10):
        step_field(f, ops, params, 0.02)
        expect = expect * (1.0 - 0.35 * 0.02)
        err = float(np.max(np.abs(f.c - expect) / np.abs(expect)))
        if err > 1e-12:
            failures.append(f"decay factor off by {err:.2e}")
            break

    # (d) gradient converges at second order on a smooth profile
    for boundary in ("neumann", "periodic"):
        errs, hs = [], []
        for n_c in (26, 52, 104):
            g = Grid.square(n_c, 1.0, boundary)
            nodes = g.node_positions()
            f = Field.zeros(g)
            f.c = np.sin(2 * np.pi * nodes[:, 0]) * np.cos(2 * np.pi * nodes[:, 1])
            ops = build_operators(g, FieldParams(), 1e-3)
            gradient(f, ops)
            gx = 2 * np.pi * np.cos(2 * np.pi * nodes[:, 0]) * np.cos(2 * np.pi * nodes[:, 1])
            gy = -2 * np.pi * np.sin(2 * np.pi * nodes[:, 0]) * np.sin(2 * np.pi * nodes[:, 1])
            errs.append(max(np.max(np.abs(f.grad[:, 0] - gx)),
                            np.max(np.abs(f.grad[:, 1] - gy))))
            hs.append(g.spacing[0])
        order, _ = _fit_line(np.log(hs), np.log(errs))
        if order < 1.9:
            failures.append(f"gradient order {order:.2f} ({boundary})")

    _report(5, not failures,
            "constant fixed point 1e-12, mass conservation 1e-10/step, "
            "exact decay factor, gradient order >= 1.9"
            + (f"; FAILED: {'; '.join(failures)}" if failures else ""))


def test_criterion_06_coupling_exactness():
    failures = []

    # affine profile through the gradient and sampling chain
    g = Grid.square(52, 1.0, "neumann")
    ops = build_operators(g, FieldParams(), 1e-4)
    nodes = g.node_positions()
    f = Field.zeros(g)
    a, b, c = 0.4, -1.1, 0.6
    f.c = a + b * nodes[:, 0] + c * nodes[:, 1]
    gradient(f, ops)
    pts = np.random.default_rng(7).uniform(-0.5, 0.5, (1000, 2))
    conc, grad = field_at(f, g, pts)
    err = max(np.max(np.abs(conc - (a + b * pts[:, 0] + c * pts[:, 1]))),
              np.max(np.abs(grad[:, 0] - b)), np.max(np.abs(grad[:, 1] - c)))
    if err > 1e-10:
        failures.append(f"affine chain error {err:.2e}")

    # cloud-in-cell deposits conserve mass exactly
    rng = np.random.default_rng(8)
    g = Grid.square(26, 1.0, "periodic")
    pop = make_pop(rng.uniform(-0.5, 0.5, (500, 2)),
                   species=rng.integers(0, 2, 500))
    kernel = Kernel(kind="cic")
    total = discrete_mass(deposit(pop, g, kernel, Species.ALPHA)
                          + deposit(pop, g, kernel, Species.BETA), g)
    if abs(total - 500.0) > 1e-12 * 500.0:
        failures.append(f"cic mass error {abs(total - 500.0):.2e}")

    # truncated smoothing kernel integrates to about unit mass
    g = Grid.square(52, 1.0, "neumann")
    kernel = Kernel(kind="gaussian", h=0.02, cutoff=0.06)
    mass = discrete_mass(deposit(make_pop([[0.0123, -0.0456]]), g, kernel,
                                 Species.ALPHA), g)
    if abs(mass - 1.0) > 0.015:
        failures.append(f"gaussian deposit mass {mass:.4f}")

    _report(6, not failures,
            "affine chain 1e-10 at 1000 points, cic mass exact, "
            "gaussian deposit within 1.5% of unit mass"
            + (f"; FAILED: {'; '.join(failures)}" if failures else ""))


def _beta_mean_radii(config: SimConfig, samples: int):
    """Per-sample mean distance from the origin of the Beta population,
    measured over whichever particles are Beta at t = 0 and again over
    whichever particles are Beta at the final time."""
    r0 = np.empty(samples)
    r_final = np.empty(samples)
    for s in range(samples):
        sim = Realisation(config, s)
        beta = sim.pop.species == Species.BETA
        r0[s] = float(np.linalg.norm(sim.pop.positions[beta],
                                     axis=1).mean())
        for _ in range(sim.n_steps):
            sim.step()
        beta = sim.pop.species == Species.BETA
        r_final[s] = float(np.linalg.norm(sim.pop.positions[beta],
                                          axis=1).mean())
    return r0, r_final


def test_criterion_07_chemotactic_contraction():
    print("\ncriterion  7 running 150 clustering realisations "
          "(several minutes) ...", flush=True)
    start = perf_counter()
    r0, r_final = _beta_mean_radii(SimConfig.preset("fig1"), 100)
    shrink = r0 - r_final
    margin = shrink.mean() / (shrink.std(ddof=1) / math.sqrt(len(shrink)))

    ctrl0, ctrl_final = _beta_mean_radii(SimConfig.preset("fig1", chi=0.0),
                                         50)
    ctrl = ctrl0 - ctrl_final
    ctrl_margin = ctrl.mean() / (ctrl.std(ddof=1) / math.sqrt(len(ctrl)))
    elapsed = perf_counter() - start
    ok = margin > 3.0 and ctrl_margin <= 3.0 and elapsed < 900.0
    _report(7, ok,
            f"mean Beta radius shrink {shrink.mean():.4f} "
            f"({margin:.1f} SE, need > 3); "
            f"zero-sensitivity control {ctrl.mean():+.4f} "
            f"({ctrl_margin:.1f} SE, need <= 3); "
            f"{elapsed:.0f} s (< 15 min)")


def test_criterion_08_overlap_resolution_geometry():
    rng = np.random.default_rng(9)
    eps = 0.02
    domain = Domain.square(1.0, periodic=False)
    failures = 0
    worst = 0.0
    for case in range(200):
        d = float(rng.uniform(0.05, 0.95)) * eps
        centre = rng.uniform(-0.3, 0.3, 2)
        theta = rng.uniform(0.0, 2 * np.pi)
        offset = 0.5 * d * np.array([np.cos(theta), np.sin(theta)])
        d_i, d_j = (0.0, float(rng.uniform(0.1, 2.0))) if case % 4 == 0 \
            else (float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.1, 2.0)))
        params = MotionParams(d_alpha=d_i, d_beta=d_j, chi=0.0, epsilon=eps,
                              dt=1e-6, interaction="hard")
        pop = make_pop([centre - offset, centre + offset], species=[0, 1])
        before = pop.next_positions.copy()
        resolve_hard_sphere(pop, domain, params)  # acts on the proposed step
        after = pop.next_positions
        gap = eps - d
        sep = float(np.linalg.norm(after[1] - after[0]))
        move_i = float(np.linalg.norm(after[0] - before[0]))
        move_j = float(np.linalg.norm(after[1] - before[1]))
        errs = [abs(sep - (eps + gap))]
        if d_i == 0.0:  # immobile obstacle: the mobile particle takes it all
            errs.append(move_i)
            errs.append(abs(move_j - 2.0 * gap))
        else:
            errs.append(abs(move_i - 2.0 * gap * d_i / (d_i + d_j)))
            errs.append(abs(move_j - 2.0 * gap * d_j / (d_i + d_j)))
        worst = max(worst, max(errs))
        if max(errs) > 1e-12:
            failures += 1
    _report(8, failures == 0,
            f"200 randomized overlaps: separation eps + gap and "
            f"mobility-split displacements exact to 1e-12 "
            f"(worst {worst:.1e}), {failures} failures")


def test_criterion_09_tamed_integrator_consistency():
    rng = np.random.default_rng(10)
    n = 100_000
    dt = 4.0
    a = 10.0 ** rng.uniform(-6.0, -3.0, n)      # a = |f| dt <= 1e-3
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    force = (a / dt)[:, None] * np.column_stack([np.cos(theta),
                                                 np.sin(theta)])
    pos = np.zeros((n, 2))
    still = np.zeros(n)
    no_drift = np.zeros((n, 2))
    plain = em_step(pos, still, no_drift, force, dt,
                    np.random.default_rng(0))
    tamed = tamed_step(pos, still, no_drift, force, dt,
                       np.random.default_rng(0))
    diff = np.linalg.norm(plain - tamed, axis=1)
    bound = a * a * dt
    consistent = bool(np.all(diff <= bound))

    bounded = True
    for exponent in range(0, 13):
        f = np.array([[10.0 ** exponent, 0.0]])
        step = tamed_step(np.zeros((1, 2)), np.zeros(1), np.zeros((1, 2)),
                          f, 1.0, np.random.default_rng(0))
        bounded &= bool(np.linalg.norm(step) < 1.0)
    _report(9, consistent and bounded,
            f"step gap <= (|f| dt)^2 dt across {n} cases "
            f"(max gap/bound {np.max(diff / bound):.3f}); "
            f"tamed increment < 1 up to |f| = 1e12: {bounded}")


def test_criterion_10_byte_identical_reruns(tmp_path):
    dirs = [tmp_path / "run_a", tmp_path / "run_b"]
    for out in dirs:
        proc = subprocess.run(
            [sys.executable, "-m", "chemosim", "--experiment", "fig1",
             "--samples", "2", "--output-dir", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    identical = bool(names) and all(
        (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
        for name in names)
    _report(10, identical,
            f"two clustering ensemble runs, {len(names)} CSV files "
            f"byte-identical: {identical}")
