"""Acceptance criteria, one test per clause, each printing a verdict line.

Criteria 5 and 8 are split into their independent clauses so that a failing
clause pinpoints exactly what missed.  Two clauses are expected to fail for
reasons intrinsic to the pinned parameter formulas (see the measured analyses in
the README's known-shortfalls section): the approximate-mode escape distance in criterion
5, and the realized-iteration ratio window in criterion 8.
"""

import time

import numpy as np
import pytest

from iptr.cli import main as cli_main
from iptr.finite_diff import fd_gradient
from iptr.kkt import check_kkt2
from iptr.lazyupdate import tracker_advance, tracker_init
from iptr.linalg import build_inverse_cache, woodbury_update
from iptr.negcurve import find_negative_curvature
from iptr.problems import (builtin_fig1, builtin_fig2, gen_concave,
                           gen_quartic)
from iptr.solver_first import SolverConfig, solve_first_order
from iptr.solver_second import SecondOrderConfig, solve_second_order

SADDLE = np.array([0.5, 0.25, 0.25])
W = np.sqrt(0.125) / 2.0
MINIMA = (np.array([0.5, 0.25 + W, 0.25 - W]),
          np.array([0.5, 0.25 - W, 0.25 + W]))


# -- criterion 1 -----------------------------------------------------------

def test_c01_projector_error_bound(verdict):
    t0 = time.time()
    worst = 0.0
    for delta in (0.001, 0.01, 0.05):
        rng = np.random.default_rng(int(delta * 1e6))
        for _ in range(200):
            n = int(rng.integers(4, 51))
            m = int(rng.integers(1, min(26, n // 2 + 1)))
            A = rng.standard_normal((m, n))
            x = rng.uniform(0.2, 2.0, n)
            xbar = x * np.exp(rng.uniform(-delta, delta, n))
            B = A * x
            P = np.eye(n) - (x[:, None] * A.T) @ np.linalg.solve(B @ B.T, B)
            xbsq = xbar ** 2
            R = np.eye(n) - ((xbsq / x)[:, None] * A.T) @ np.linalg.solve(
                (A * xbsq) @ A.T, A * x)
            ratio = np.linalg.norm(R - P, 2) / (46.0 * delta)
            worst = max(worst, ratio)
    elapsed = time.time() - t0
    ok = worst <= 1.0 and elapsed < 30.0
    assert verdict("criterion 1", ok,
                   f"worst ||R-P|| at {worst:.3f} of the 46*delta bound, "
                   f"{elapsed:.1f}s")


# -- criterion 2 -----------------------------------------------------------

def test_c02_woodbury_oracle_equivalence(verdict):
    t0 = time.time()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(4, 24))
        m = int(rng.integers(1, n))
        A = rng.standard_normal((m, n))
        xbar = rng.uniform(0.2, 2.0, n)
        cache = build_inverse_cache(A, xbar)
        for _ in range(8):
            q = int(rng.integers(0, n + 1))
            idx = rng.choice(n, size=q, replace=False)
            vals = rng.uniform(0.3, 2.5, q)
            xbar[idx] = vals
            cache = woodbury_update(cache, A, idx, vals)
            direct = np.linalg.inv((A * xbar ** 2) @ A.T)
            err = np.linalg.norm(cache.kinv - direct) / np.linalg.norm(direct)
            worst = max(worst, err)
    elapsed = time.time() - t0
    ok = worst <= 1e-8 and elapsed < 60.0
    assert verdict("criterion 2", ok,
                   f"worst relative Frobenius error {worst:.2e}, {elapsed:.1f}s")


# -- criterion 3 -----------------------------------------------------------

def test_c03_lazy_tracker_contract(verdict):
    t0 = time.time()
    slack = 400.0
    ok = True
    details = []
    for n in (16, 256):
        for ratio in (2.0, 10.0):
            delta = 0.01
            beta = ratio * delta / 2.0
            # random drift stream with per-step l2 change exactly 2 beta
            rng = np.random.default_rng(n * 10 + int(ratio))
            tr = tracker_init(np.ones(n), delta)
            ln_x = np.zeros(n)
            total = 0
            for _ in range(2048):
                d = rng.standard_normal(n)
                d *= 2.0 * beta / np.linalg.norm(d)
                ln_x = ln_x + d
                x = np.exp(ln_x)
                total += len(tracker_advance(tr, x))
                if np.max(np.abs(tr.ln_xbar - ln_x)) > delta:
                    ok = False
            bound = slack * (2 * beta / delta) ** 2 * np.log2(n) ** 2
            mean = total / 2048.0
            if mean > bound:
                ok = False
            details.append(f"n={n} r={ratio:g} mean_refresh={mean:.1f}")
            # adversarial stream: all drift on one rotating coordinate
            tr = tracker_init(np.ones(n), delta)
            x = np.ones(n)
            for t in range(2048):
                x = x.copy()
                x[t % n] *= np.exp((-1) ** t * 2.0 * beta)
                tracker_advance(tr, x)
                if np.max(np.abs(tr.ln_xbar - np.log(x))) > delta:
                    ok = False
    elapsed = time.time() - t0
    ok = ok and elapsed < 60.0
    assert verdict("criterion 3", ok, "; ".join(details) + f", {elapsed:.1f}s")


# -- criterion 4 -----------------------------------------------------------

def test_c04_potential_descent(verdict):
    t0 = time.time()
    eps = 0.1
    ok = True
    margins = []
    for seed in range(5):
        inst = gen_quartic(64, 32, 1.0, seed)
        thr = eps * eps / (2.0 * inst.constants.l + 4.0 * eps + 4.0)
        cfg = SolverConfig(epsilon=eps, mode="approximate", max_iters=6000)
        out = solve_first_order(inst, cfg)
        deltas = [r.potential_delta for r in out.trace
                  if r.event != "certified" and r.step_norm > 0]
        worst = max(deltas)
        margins.append(-worst / thr)
        if worst > -thr:
            ok = False
    elapsed = time.time() - t0
    ok = ok and elapsed < 120.0
    assert verdict("criterion 4", ok,
                   f"min decrease/threshold margin {min(margins):.2f}x, "
                   f"{elapsed:.1f}s")


# -- criterion 5 (three clauses) + criterion 7 ------------------------------

@pytest.fixture(scope="module")
def escape_runs():
    """All criterion-5 solves, shared with criterion 7."""
    inst = builtin_fig2()
    runs = {}
    t0 = time.time()
    for mode in ("exact", "approximate"):
        outs = []
        for seed in range(20):
            cfg = SecondOrderConfig(base=SolverConfig(
                epsilon=0.04, mode=mode, seed=seed))
            outs.append(solve_second_order(inst, cfg))
        runs[mode] = outs
    runs["elapsed"] = time.time() - t0
    runs["instance"] = inst
    return runs


def _dist_to_minima(x):
    return min(np.max(np.abs(x - m)) for m in MINIMA)


def test_c05a_exact1_stalls_at_saddle(verdict):
    inst = builtin_fig2()
    t0 = time.time()
    out = solve_first_order(inst, SolverConfig(epsilon=0.04, mode="exact"))
    report = check_kkt2(inst, out.x_final, 0.04)
    dist = np.max(np.abs(out.x_final - SADDLE))
    ok = (out.status == "kkt1-certified" and dist <= 1e-2
          and report.projected_min_eig < -np.sqrt(0.04))
    assert verdict("criterion 5a", ok,
                   f"saddle distance {dist:.4f}, projected min-eig "
                   f"{report.projected_min_eig:.3f}, {time.time()-t0:.1f}s")


def test_c05b_ncf_escapes_to_minimum(escape_runs, verdict):
    outs = escape_runs["exact"]
    good = sum(1 for o in outs
               if o.status == "kkt2-certified"
               and _dist_to_minima(o.x_final) <= 1e-2)
    ok = good >= 19 and escape_runs["elapsed"] < 120.0
    assert verdict("criterion 5b", ok,
                   f"{good}/20 certified within 1e-2 (max-norm), "
                   f"runs took {escape_runs['elapsed']:.0f}s")


def test_c05c_approx_ncf_escapes_to_minimum(escape_runs, verdict):
    outs = escape_runs["approximate"]
    good = sum(1 for o in outs
               if o.status == "kkt2-certified"
               and _dist_to_minima(o.x_final) <= 1e-2)
    dists = sorted(round(float(_dist_to_minima(o.x_final)), 5) for o in outs)
    ok = good >= 19
    # Known shortfall: the approximate stopping rule stalls at twice the
    # exact mode's stationarity level, which places its terminal point
    # ~1.04e-2 from the pinned minimum at eps=0.04 (see README); certification
    # itself succeeds in every run.
    assert verdict("criterion 5c", ok,
                   f"{good}/20 within 1e-2; terminal distances {dists[:3]}..."), \
        "approximate-mode terminal point stalls outside the 1e-2 ball " \
        "(intrinsic to the pinned threshold formulas; see README)"


def test_c07_curvature_step_decrease(escape_runs, verdict):
    inst = escape_runs["instance"]
    rho = inst.constants.rho
    quantum = 9.0 * 0.04 ** 1.5 / (1024.0 * rho * rho)
    checked = 0
    ok = True
    for mode in ("exact", "approximate"):
        for out in escape_runs[mode]:
            f_prev = None
            for rec in out.trace:
                if rec.event.startswith("ncf-step:") and f_prev is not None:
                    checked += 1
                    if rec.f > f_prev - quantum + 1e-15:
                        ok = False
                f_prev = rec.f
    ok = ok and checked > 0
    assert verdict("criterion 7", ok,
                   f"{checked} accepted curvature steps all decreased f by "
                   f">= {quantum:.2e}")


# -- criterion 6 -----------------------------------------------------------

def test_c06_negative_curvature_quality(verdict):
    t0 = time.time()
    results = []

    def oracle_rayleigh(inst, x, v):
        H = inst.oracle.hess(x)
        return float(v @ ((H * x) * x[:, None] @ v))

    inst = builtin_fig2()
    eps = 0.04
    good = 0
    for seed in range(20):
        res = find_negative_curvature(inst, SADDLE, eps, seed=seed)
        if res.found and oracle_rayleigh(inst, SADDLE, res.e_hat) \
                <= -np.sqrt(eps) / 4.0 + 1e-3:
            good += 1
    results.append(("fig2-saddle", good))

    eps = 0.25
    for iseed in range(5):
        qinst = gen_quartic(24, 8, 1.0, 100 + iseed)
        good = 0
        for seed in range(20):
            res = find_negative_curvature(qinst, qinst.x0, eps, seed=seed)
            if res.found and oracle_rayleigh(qinst, qinst.x0, res.e_hat) \
                    <= -np.sqrt(eps) / 4.0 + 1e-3:
                good += 1
        results.append((f"planted-{iseed}", good))

    elapsed = time.time() - t0
    ok = all(g >= 19 for _, g in results) and elapsed < 120.0
    assert verdict("criterion 6", ok,
                   " ".join(f"{name}:{g}/20" for name, g in results)
                   + f", {elapsed:.1f}s")


# -- criterion 8 (two clauses) ----------------------------------------------

def test_c08a_concave_iteration_scaling(verdict):
    t0 = time.time()
    inst = gen_concave(32, 16, 3)
    counts = {}
    for eps in (0.2, 0.1, 0.05):
        out = solve_first_order(inst, SolverConfig(
            epsilon=eps, mode="exact", objective_shape="concave"))
        counts[eps] = out.iters
    r1 = counts[0.1] / counts[0.2]
    r2 = counts[0.05] / counts[0.1]
    ok = 1.5 <= r1 <= 2.7 and 1.5 <= r2 <= 2.7
    # Known shortfall: certification exits through the boundary-
    # complementarity route, whose realized iteration count grows
    # logarithmically in 1/eps, not linearly (see README).
    assert verdict("criterion 8a", ok,
                   f"counts {counts} ratios {r1:.2f},{r2:.2f}, "
                   f"{time.time()-t0:.1f}s"), \
        "realized iteration ratios fall below the [1.5, 2.7] window " \
        "(intrinsic to the boundary geometry of concave instances; " \
        "see README)"


def test_c08b_approx_concave_certifies(verdict):
    from iptr.kkt import check_kkt1
    t0 = time.time()
    inst = gen_concave(32, 16, 3)
    ok = True
    resids = []
    for eps in (0.2, 0.1, 0.05):
        out = solve_first_order(inst, SolverConfig(
            epsilon=eps, mode="approximate", objective_shape="concave"))
        rep = check_kkt1(inst, out.x_final, eps)
        resids.append(rep.stationarity_inf / (2 * eps))
        if out.status != "kkt1-certified" or not rep.kkt1_certified:
            ok = False
    elapsed = time.time() - t0
    ok = ok and elapsed < 120.0
    assert verdict("criterion 8b", ok,
                   f"stationarity at {max(resids):.2f} of the 2-eps level, "
                   f"{elapsed:.1f}s")


# -- criterion 9 -----------------------------------------------------------

def test_c09_speedup_trend(tmp_path, capsys, verdict):
    import json
    t0 = time.time()
    out1 = tmp_path / "b1000.json"
    rc = cli_main(["bench", "--n", "1000", "--m", "500", "--sigma", "1.0",
                   "--seed", "0", "--iters", "2000", "--repeats", "5",
                   "--out", str(out1)])
    assert rc == 0
    d1 = json.loads(out1.read_text())
    out2 = tmp_path / "b2000.json"
    rc = cli_main(["bench", "--n", "2000", "--m", "1500", "--sigma", "1.0",
                   "--seed", "0", "--iters", "48", "--repeats", "5",
                   "--out", str(out2)])
    assert rc == 0
    d2 = json.loads(out2.read_text())
    capsys.readouterr()
    elapsed = time.time() - t0
    s1, s2 = d1["speedup"], d2["speedup"]
    ok = s1 >= 1.0 and s2 > s1 and elapsed < 900.0
    assert verdict("criterion 9", ok,
                   f"speedup {s1:.2f}x at (1000,500), {s2:.2f}x at "
                   f"(2000,1500), {elapsed:.0f}s")


# -- criterion 10 ------------------------------------------------------------

def test_c10_exact_approx_agreement(verdict):
    t0 = time.time()
    inst = gen_quartic(64, 32, 1.0, 7)
    eps = 0.05
    beta = eps / (inst.constants.l + 2.0 * eps + 2.0)
    base = dict(epsilon=eps, beta=beta, max_iters=500, ignore_stopping=True,
                record_iterates=True)
    oe = solve_first_order(inst, SolverConfig(mode="exact", **base))
    oa = solve_first_order(inst, SolverConfig(mode="approximate", delta=0.0,
                                              **base))
    worst = max(np.max(np.abs(xe - xa))
                for xe, xa in zip(oe.iterates, oa.iterates))
    elapsed = time.time() - t0
    ok = (len(oe.iterates) == len(oa.iterates) == 500
          and worst <= 1e-9 and elapsed < 60.0)
    assert verdict("criterion 10", ok,
                   f"max per-step deviation {worst:.2e} over 500 steps, "
                   f"{elapsed:.1f}s")


# -- criterion 11 ------------------------------------------------------------

def test_c11_gradient_fd_consistency(verdict):
    t0 = time.time()
    instances = [builtin_fig1(), builtin_fig2(),
                 gen_quartic(32, 12, 1.0, 1), gen_concave(24, 9, 2)]
    worst = 0.0
    for inst in instances:
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = inst.x0 * (1.0 + rng.uniform(-0.3, 0.3, inst.n))
            g = inst.oracle.grad(x)
            g_fd = fd_gradient(inst.oracle.eval, x)
            rel = np.linalg.norm(g - g_fd) / (1.0 + np.linalg.norm(g))
            worst = max(worst, rel)
    elapsed = time.time() - t0
    ok = worst <= 1e-5 and elapsed < 30.0
    assert verdict("criterion 11", ok,
                   f"worst relative deviation {worst:.2e}, {elapsed:.1f}s")
