"""Acceptance suite: correctness properties and qualitative reproductions
of the comparative convergence studies, one criterion per test with one
pass/fail line each.
"""

import numpy as np
import pytest

from aatransport.accel import (AccelConfig, adapt_damping, adapt_depth,
                               fixed_point_step, solve)
from aatransport.flux import steady_state_oracle
from aatransport.problem import (ExperimentConfig, ProblemConfig, build_map,
                                 run_experiment, with_accel_overrides)
from aatransport.qrls import QrFactor, RankDeficiencyError
from aatransport.transport import Grid, grad, split_flux
from aatransport.tune import default_space, run_sweep, tune
from conftest import make_config


def check(num: int, desc: str, ok: bool) -> None:
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}: {desc}")
    assert ok, f"criterion {num:02d} failed: {desc}"


def _solve_iters(config) -> int:
    """Iterations to tolerance, or -1 for a non-convergent run."""
    rep = run_experiment(config)
    return rep.iterations if rep.converged else -1


# --------------------------------------------------------------------------
# correctness properties


def test_criterion_01_depth_zero_bitwise_equivalence():
    """m_max = 0 reproduces the damped fixed-point trajectory exactly."""
    beta = 0.3
    cfg = make_config(beta=beta, m=0, tol=1e-300, k_max=50)
    rep = solve(*build_map(cfg), cfg.accel)

    map_g, p = build_map(cfg)
    manual = []
    for _ in range(50):
        g = map_g(p)
        p = fixed_point_step(g, p, beta)
        manual.append(p.copy())

    ok = (len(rep.trace) == 51
          and np.array_equal(rep.final_iterate, manual[-1]))
    # every recorded residual matches the manual trajectory bitwise
    for k, t in enumerate(rep.trace[1:], start=1):
        prev = manual[k - 2] if k >= 2 else build_map(cfg)[1]
        expected = (np.linalg.norm(manual[k - 1] - prev)
                    / np.linalg.norm(manual[k - 1]))
        ok = ok and t.residual_norm == expected
    check(1, "depth-zero solve equals damped fixed-point trajectory "
          "bitwise over 50 iterations", ok)


def test_criterion_02_incremental_qr_vs_fresh():
    """1000 random append/pop sequences agree with from-scratch least
    squares to 1e-10 relative."""
    ok = True
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n_rows = int(rng.integers(12, 40))
        max_cols = int(rng.integers(2, 8))
        f = QrFactor(n_rows, max_cols)
        cols = []
        for _ in range(int(rng.integers(4, 25))):
            if cols and (f.n_cols == max_cols or rng.random() < 0.3):
                f.pop_front()
                cols.pop(0)
            else:
                c = rng.standard_normal(n_rows)
                f.append(c)
                cols.append(c)
        if not cols:
            continue
        rhs = rng.standard_normal(n_rows)
        try:
            got = f.solve_lsq(rhs)
        except RankDeficiencyError:
            continue
        want, *_ = np.linalg.lstsq(np.column_stack(cols), rhs, rcond=None)
        scale = max(1.0, float(np.linalg.norm(want)))
        ok = ok and np.linalg.norm(got - want) <= 1e-10 * scale
        if not ok:
            break
    check(2, "incremental QR least-squares matches fresh factorization "
          "to 1e-10 over 1000 random append/pop sequences", ok)


def _gmres_residuals(mat, rhs, x0, maxdim):
    """GMRES residual norms for Krylov dims 1..maxdim (Arnoldi basis)."""
    r0 = rhs - mat @ x0
    v = [r0 / np.linalg.norm(r0)]
    out = []
    for j in range(1, maxdim + 1):
        w = mat @ v[-1]
        for u in v:
            w -= (u @ w) * u
        for u in v:
            w -= (u @ w) * u
        nw = np.linalg.norm(w)
        basis = np.column_stack(v)
        y, *_ = np.linalg.lstsq(mat @ basis, r0, rcond=None)
        out.append(float(np.linalg.norm(r0 - mat @ (basis @ y))))
        if nw < 1e-14:
            out.extend([out[-1]] * (maxdim - j))
            break
        v.append(w / nw)
    return out


def test_criterion_03_gmres_correspondence():
    """Undamped full-depth acceleration on linear problems produces the
    GMRES residual sequence."""
    rng = np.random.default_rng(0)
    ok = True
    compared = 0
    for _ in range(20):
        n = 10
        a = rng.standard_normal((n, n))
        a *= 0.9 / np.linalg.norm(a, 2)
        b = rng.standard_normal(n)
        p0 = rng.standard_normal(n)
        rep = solve(lambda p: a @ p + b, p0,
                    AccelConfig(m_max=n, beta=1.0, delay=0, tol=1e-15,
                                k_max=14))
        gm = _gmres_residuals(np.eye(n) - a, b, p0, 12)
        for k in range(1, min(len(rep.lsq_residuals), 12)):
            aa_res, gm_res = rep.lsq_residuals[k], gm[k - 1]
            if (not np.isfinite(aa_res) or aa_res < 1e-10
                    or gm_res < 1e-10):
                break
            ok = ok and abs(aa_res - gm_res) <= 1e-8 * gm_res
            compared += 1
    ok = ok and compared >= 100
    check(3, "full-depth undamped acceleration matches the GMRES residual "
          "sequence to 1e-8 relative on 20 random contractions", ok)


def test_criterion_04_flux_split_reconstruction():
    """-D dp/dx + c p == q at every defined node; theta in [0, 1]."""
    rng = np.random.default_rng(11)
    g = Grid.uniform(300)
    ok = True
    for _ in range(50):
        coef = rng.normal(0.0, 0.4, 5)
        p = 2.0 + sum(c * np.cos((i + 1) * np.pi * g.x)
                      for i, c in enumerate(coef))
        p = np.maximum(p, 0.05)
        q = rng.normal(0.0, 2.0, g.n_points)
        split = split_flux(p, q, g.dx)
        ok = ok and np.all((split.theta >= 0.0) & (split.theta <= 1.0))
        gp = grad(p, g.dx)
        defined = np.abs(gp) >= 1e-10
        recon = -split.d_coef * gp + split.c_coef * p
        scale = np.maximum(np.abs(q[defined]), 1.0)
        ok = ok and np.all(np.abs(recon[defined] - q[defined])
                           <= 1e-12 * scale)
    check(4, "diffusive/convective split reconstructs the flux to 1e-12 "
          "at defined nodes with theta in [0, 1]", ok)


def test_criterion_05_steady_state_oracle():
    """Converged profile matches the closed-form steady state; error is
    grid-convergent at the expected rate."""
    # absolute accuracy at the working resolution
    cfg = make_config(beta=0.4, m=0, tol=1e-13, k_max=500, n_points=500)
    rep = run_experiment(cfg)
    oracle = steady_state_oracle(2.0, Grid.uniform(500))
    err500 = float(np.max(np.abs(rep.final_iterate - oracle) / oracle))
    ok = rep.converged and err500 < 1e-2

    # grid-refinement ratio, measured where the solution is smooth: the
    # profile has a p' ~ x^(1/3) singularity at the left wall (node-0
    # error decays as dx^(4/3)) and the step size bounds accuracy unless
    # effectively infinite, so the ratio uses x > 0.02, edge-aligned
    # grids, and a large implicit step
    def interior_err(n):
        c = make_config(beta=0.4, m=0, tol=1e-13, k_max=500, n_points=n,
                        h_step=1e8)
        r = run_experiment(c)
        assert r.converged
        g = Grid.uniform(n)
        o = steady_state_oracle(2.0, g)
        sel = g.x > 0.02
        return float(np.max(np.abs(r.final_iterate[sel] - o[sel])
                            / o[sel]))
    ratio = interior_err(501) / interior_err(1001)
    ok = ok and 3.0 <= ratio <= 5.0
    check(5, f"steady state matches oracle (max rel err {err500:.2e} "
          f"< 1e-2 at N=500) and halving dx cuts the smooth-region error "
          f"by {ratio:.2f} (in [3, 5])", ok)


def test_criterion_06_adaptive_formulas_and_invariants():
    """Hand-computed damping/depth tables; trace invariants on full
    adaptive solves."""
    ok = adapt_damping(0.0, 0.5, 0.01) == 0.9
    ok = ok and adapt_damping(1.0, 0.5, 0.01) == pytest.approx(0.4)
    ok = ok and adapt_damping(1.0, 0.89, 0.01) == pytest.approx(0.01)
    ok = ok and adapt_depth(1.0, 0, 1.0, 10) == 0
    ok = ok and adapt_depth(1e-4, 1, 1.0, 10) == 2
    ok = ok and adapt_depth(1e-4, 5, 10.0, 10) == 3

    for damping_mode in ("fixed", "adaptive"):
        cfg = make_config(beta=0.5, m=10, tol=1e-11, k_max=300)
        cfg = with_accel_overrides(cfg, depth_mode="adaptive",
                                   damping_mode=damping_mode)
        rep = run_experiment(cfg)
        ok = ok and rep.converged
        ms = [t.m_k for t in rep.trace]
        bs = [t.beta_k for t in rep.trace]
        ok = ok and all(ms[i] <= ms[i - 1] + 1 for i in range(1, len(ms)))
        ok = ok and all(0.01 <= b <= 0.9 for b in bs)
    check(6, "adaptive damping/depth formulas match hand-computed tables; "
          "beta_k and m_k invariants hold over full traces", ok)


# --------------------------------------------------------------------------
# qualitative reproductions

BETA_GRID = [round(0.05 * i, 2) for i in range(1, 21)]


def _stiff_sweep_sets():
    cfg = make_config(beta=0.3, tol=1e-11, k_max=2000)
    rows = {}
    for m in (0, 2, 4, 6, 8, 10):
        d = 0 if m == 0 else 1
        recs = run_sweep({"beta": BETA_GRID, "m": [m], "d": [d]}, cfg)
        rows[m] = {r.params["beta"]: (int(r.objective) if r.converged
                                      else None) for r in recs}
    return rows


@pytest.fixture(scope="module")
def stiff_rows():
    return _stiff_sweep_sets()


def test_criterion_07_stiff_sweep(stiff_rows):
    """Damping band, set inclusion under acceleration, and best-cell
    iteration gain on the stiff problem."""
    m0 = stiff_rows[0]
    conv0 = {b for b, it in m0.items() if it is not None}
    # (a) bounded band failing near beta = 1
    ok = bool(conv0) and max(conv0) < 0.95 and m0[1.0] is None
    # (b) strict superset of convergent beta values for every m >= 2
    for m in (2, 4, 6, 8, 10):
        conv_m = {b for b, it in stiff_rows[m].items() if it is not None}
        ok = ok and conv0 < conv_m
    # (c) best accelerated cell at least 10% cheaper
    best0 = min(it for it in m0.values() if it is not None)
    best_aa = min(it for m in (2, 4, 6, 8, 10)
                  for it in stiff_rows[m].values() if it is not None)
    gain = 1.0 - best_aa / best0
    ok = ok and gain >= 0.10
    check(7, f"stiff sweep: m=0 band bounded (fails near beta=1), "
          f"acceleration strictly widens the band, best cell {best_aa} vs "
          f"{best0} ({100*gain:.0f}% fewer, need >=10%)", ok)


def test_criterion_08_optimized_damping(stiff_rows):
    """Tuned fixed damping beats the 0.6/r default by >= 10%."""
    m0 = stiff_rows[0]
    default_iters = m0[0.3]   # beta = 0.6/r at r = 2
    best = min(it for it in m0.values() if it is not None)
    gain = 1.0 - best / default_iters
    ok = default_iters is not None and gain >= 0.10
    check(8, f"optimized damping: best m=0 cell {best} vs default {default_iters} "
          f"({100*gain:.0f}% fewer, need >=10%)", ok)


def test_criterion_09_very_stiff():
    """r = 10: the small default damping converges; tuned acceleration
    beats tuned plain damping by >= 15%."""
    def r10_config(beta, m=0, d=0, k_max=3000):
        return make_config(r=10.0, beta=beta, m=m, d=d, tol=1e-11,
                           k_max=k_max, initial_profile="steady_plus")

    default_iters = _solve_iters(r10_config(0.06))
    ok = default_iters > 0

    plain = {b: _solve_iters(r10_config(b))
             for b in [round(0.05 * i, 2) for i in range(1, 20)]}
    best_plain = min(it for it in plain.values() if it > 0)

    aa_candidates = [(0.10, 3, 0), (0.12, 4, 0), (0.14, 3, 0),
                     (0.14, 4, 0), (0.16, 4, 0), (0.14, 4, 1)]
    best_aa = min(it for it in
                  (_solve_iters(r10_config(b, m, d, k_max=500))
                   for b, m, d in aa_candidates) if it > 0)
    gain = 1.0 - best_aa / best_plain
    ok = ok and gain >= 0.15
    check(9, f"very stiff case: default damping converges "
          f"({default_iters} iters); best accelerated {best_aa} vs tuned "
          f"plain {best_plain} ({100*gain:.0f}% fewer, need >=15%)", ok)


def test_criterion_10_adaptive_depth_delay():
    """Adaptive depth leaves an automatic delay: depth stays 0 for an
    initial span before growing."""
    cfg = make_config(beta=0.5, m=10, tol=1e-11, k_max=300)
    cfg = with_accel_overrides(cfg, depth_mode="adaptive")
    rep = run_experiment(cfg)
    ms = [t.m_k for t in rep.trace]
    first_nz = next((k for k, m in enumerate(ms) if m > 0), None)
    ok = rep.converged and first_nz is not None and first_nz >= 2
    check(10, f"adaptive depth: first nonzero depth at iteration "
          f"{first_nz} (need >= 2), converged in {rep.iterations}", ok)


def test_criterion_11_noise_floor():
    """Noisy fluxes: residual floor, no-gain at optimal damping, and
    robustness at non-optimal damping."""
    seeds = (3, 7, 11)

    # (a) stagnation: with noise large enough that the floor sits above
    # the 1e-4 tolerance, 300-iteration traces level off
    ok = True
    for seed in seeds[:2]:
        cfg = make_config(beta=0.4, m=0, tol=1e-4, k_max=300,
                          noise_amplitude=0.01, noise_seed=seed)
        rep = run_experiment(cfg)
        res = np.array([t.residual_norm for t in rep.trace])
        ok = ok and not rep.converged and len(res) >= 300
        ok = ok and np.min(res[:101]) <= 10.0 * np.min(res)

    # (b)/(c) iteration counts at the default (smaller) amplitude, where
    # the floor sits below the 1e-4 tolerance
    def counts(beta, m, d):
        out = []
        for seed in seeds:
            it = _solve_iters(make_config(beta=beta, m=m, d=d, tol=1e-4,
                                          k_max=300, noise_amplitude=0.001,
                                          noise_seed=seed))
            out.append(it)
        return out

    plain = {b: counts(b, 0, 2)
             for b in (0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50)}
    means = {b: np.mean(c) for b, c in plain.items()
             if all(i > 0 for i in c)}
    best_beta = min(means, key=means.get)
    aa_best = counts(best_beta, 3, 2)
    ok = ok and all(i > 0 for i in aa_best)
    rel = abs(np.mean(aa_best) - means[best_beta]) / means[best_beta]
    ok = ok and rel <= 0.25

    robust = 0
    for b in (0.65, 0.75, 0.85):
        p = counts(b, 0, 2)
        a = counts(b, 3, 2)
        if all(i > 0 for i in a):
            if any(i < 0 for i in p):
                robust += 1
            elif np.mean(p) >= 1.2 * np.mean(a):
                robust += 1
    ok = ok and robust >= 3
    check(11, f"noise: floor stagnates over 300 iterations; at best "
          f"beta={best_beta} acceleration within {100*rel:.0f}% of plain "
          f"(need <=25%); {robust} non-optimal beta values rescued "
          f"(need >= 3)", ok)


def test_criterion_12_tuner_vs_exhaustive():
    """Budget-(10, 50) tuning with the default seeded never loses to the
    default and lands within 15% of the exhaustive optimum."""
    cfg = make_config(beta=0.3, tol=1e-11, k_max=300)
    grid = {"beta": BETA_GRID, "m": list(range(11)),
            "d": list(range(21))}
    recs = run_sweep(grid, cfg, jobs=4)
    sweep_best = min(r.objective for r in recs if r.converged)

    default_params = {"beta": 0.3, "m": 0, "d": 0}
    ok = True
    for seed in (0, 1, 2):
        res = tune(default_space(), cfg, 10, 50, seed=seed,
                   include_default=default_params)
        ok = ok and res.best.objective <= res.history[0].objective
        ok = ok and res.best.objective <= 1.15 * sweep_best
    check(12, f"tuner: best trials never exceed the seeded default and "
          f"fall within 15% of the exhaustive optimum ({sweep_best:.0f})",
          ok)
