"""Release acceptance checklist.

Each test exercises one numbered criterion of the package's acceptance
gate end to end — solver oracles, retraction properties, spectral and
reuse trends, the factorization-free and reduced-precision modes, QPS
ingestion, and the linear-algebra kernels — and records a one-line
PASS/FAIL verdict that the terminal summary echoes after the run.

The verdict line is recorded *before* the assertions so a failing
criterion still reports its measured numbers.
"""

from __future__ import annotations

import math
import statistics
import time
from pathlib import Path

import numpy as np

from conftest import quasi_definite
from ipqp import builtin_problem
from ipqp._common import convergence_measures
from ipqp.config import LinearStrategy, SolverConfig
from ipqp.explicit import solve_explicit
from ipqp.implicit import solve_implicit
from ipqp.inexact import solve_implicit_inexact
from ipqp.linalg import dense_symmetric_eigenvalues, ldlt_factor, ldlt_solve, minres
from ipqp.qps import load_problem, parse_qps, to_qp_problem
from ipqp.retraction import exponential_map, softplus, softplus_derivative

DATA = Path(__file__).resolve().parents[1] / "src" / "ipqp" / "data" / "maros_meszaros"


def _mm(name: str):
    return load_problem(str(DATA / f"{name}.qps"))


# ----------------------------------------------------------- criterion 1


def test_criterion_1_synthetic_oracle(acceptance, synthetic2d):
    # Hand oracle: the objective is the squared distance from the origin,
    # the binding constraint is x1 + x2 >= 0.65, so the solution is the
    # projection (0.325, 0.325) with multiplier 0.325 on that row alone.
    target_x = np.array([0.325, 0.325])
    target_lam = np.array([0.325, 0.0, 0.0, 0.0])
    runs = {}
    for label, solver in (("explicit", solve_explicit), ("implicit", solve_implicit)):
        start = time.perf_counter()
        z, trace = solver(synthetic2d, SolverConfig(tol=1e-9))
        runs[label] = (z, trace, time.perf_counter() - start)

    ok = all(
        trace.status == "converged"
        and float(np.max(np.abs(z.x - target_x))) <= 1e-6
        and float(np.max(np.abs(z.lam - target_lam))) <= 1e-5
        and trace.iterations <= 50
        and seconds < 1.0
        for z, trace, seconds in runs.values()
    )
    detail = ", ".join(
        f"{label} {trace.iterations} iters in {seconds * 1e3:.0f} ms"
        for label, (_, trace, seconds) in runs.items()
    )
    acceptance(1, ok, f"both solvers hit the projection oracle (0.325, 0.325): {detail}")

    for z, trace, seconds in runs.values():
        assert trace.status == "converged"
        np.testing.assert_allclose(z.x, target_x, atol=1e-6)
        np.testing.assert_allclose(z.lam, target_lam, atol=1e-5)
        assert trace.iterations <= 50
        assert seconds < 1.0


# ----------------------------------------------------------- criterion 2


def test_criterion_2_retraction_property_suite(acceptance):
    start = time.perf_counter()
    v64 = np.concatenate([-np.logspace(-6, 1.3, 50)[::-1], np.logspace(-6, 1.3, 50)])
    mus = np.logspace(-3.0, 1.0, 100)  # 100 x 100 = 1e4 grid points

    identity_failures = []
    for precision, rel in (("f64", 1e-10), ("f32", 1e-4)):
        dtype = np.float64 if precision == "f64" else np.float32
        v = v64.astype(dtype)
        for mu in mus:
            mu = float(mu)
            plus, minus = softplus(v, mu), softplus(-v, mu)
            dplus, dminus = softplus_derivative(v, mu), softplus_derivative(-v, mu)
            scale = np.maximum(np.abs(v64), math.sqrt(mu))
            checks = (
                np.all(np.abs(plus.astype(np.float64) * minus - mu) <= rel * mu),
                np.all(np.abs(dplus.astype(np.float64) + dminus - 1.0) <= rel),
                np.all((dplus > 0.0) & (dplus < 1.0)),
                np.all(np.abs(plus.astype(np.float64) - minus - v64) <= rel * scale),
            )
            if not all(checks):
                identity_failures.append((precision, mu, checks))

    # barrier update mu -> sigma*mu: the inactive side lands in
    # (0, sigma*mu/|v|] and both sides move by at most (1-sigma)*mu/|v|
    bound_failures = []
    w = np.abs(v64)
    for sigma in (0.1, 0.5):
        for mu in mus:
            mu = float(mu)
            inact, inact_plus = softplus(-w, mu), softplus(-w, sigma * mu)
            drop = inact - inact_plus
            held = (
                np.all(inact_plus > 0.0)
                and np.all(inact_plus <= (sigma * mu / w) * (1.0 + 1e-12))
                and np.all(drop >= 0.0)
                and np.all(drop <= ((1.0 - sigma) * mu / w) * (1.0 + 1e-12) + 5e-324)
            )
            if not held:
                bound_failures.append((sigma, mu))

    ratios = [
        exponential_map(v64, sigma * mu) / exponential_map(v64, mu)
        for mu in (1e-3, 1.0, 10.0)
        for sigma in (0.1, 0.5)
    ]
    rescale_err = max(
        float(np.max(np.abs(r / math.sqrt(s) - 1.0)))
        for r, s in zip(ratios, [0.1, 0.5] * 3)
    )
    elapsed = time.perf_counter() - start

    ok = not identity_failures and not bound_failures and rescale_err <= 1e-14 and elapsed < 5.0
    acceptance(
        2,
        ok,
        "identities at rel 1e-10 (binary64) / 1e-4 (binary32), barrier-update "
        f"bounds, and sqrt-sigma rescaling on a 10^4-point grid in {elapsed:.2f} s",
    )
    assert not identity_failures
    assert not bound_failures
    assert rescale_err <= 1e-14
    assert elapsed < 5.0


# ----------------------------------------------------------- criterion 3


def test_criterion_3_spectral_boundedness(acceptance, synthetic2d):
    config = SolverConfig(tol=1e-9, trace_level="spectrum")
    z_exp, tr_exp = solve_explicit(synthetic2d, config)
    z_imp, tr_imp = solve_implicit(synthetic2d, config)
    gap_exp = convergence_measures(synthetic2d, z_exp.x, z_exp.lam, z_exp.gamma, z_exp.s)[2]
    gap_imp = convergence_measures(synthetic2d, z_imp.x, z_imp.lam, z_imp.gamma, z_imp.s)[2]

    imp_eig = [r.eig_max for r in tr_imp.records if r.eig_max is not None]
    eig_ratio = max(imp_eig) / min(imp_eig)
    exp_cond = [r.cond for r in tr_exp.records if r.cond is not None]
    final_cond = max(exp_cond[-2:])
    deltas = [r.matrix_delta for r in tr_imp.records if r.matrix_delta is not None]
    tail_delta = max(deltas[-5:])
    peak_delta = max(deltas)

    ok = (
        gap_exp <= 1e-9
        and gap_imp <= 1e-9
        and eig_ratio <= 10.0
        and final_cond > 1e8
        and tail_delta <= 1e-2 * peak_delta
    )
    acceptance(
        3,
        ok,
        f"implicit max|eig| varies {eig_ratio:.2f}x (<=10x) and its diagonal "
        f"freezes (tail delta {tail_delta:.1e} vs peak {peak_delta:.1e}) while "
        f"explicit cond reaches {final_cond:.1e} (>1e8)",
    )
    assert gap_exp <= 1e-9 and gap_imp <= 1e-9
    assert eig_ratio <= 10.0
    assert final_cond > 1e8
    assert tail_delta <= 1e-2 * peak_delta


# ----------------------------------------------------------- criterion 4


def test_criterion_4_factorization_reuse(acceptance, synthetic2d):
    z_exact, tr_exact = solve_implicit(synthetic2d, SolverConfig(tol=1e-9))
    z_half, tr_half = solve_implicit_inexact(synthetic2d, SolverConfig(tol=1e-9, theta=0.5))
    fac_half = tr_half.factorizations()

    sweep_thetas = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9)
    sweep = []
    for theta in sweep_thetas:
        _, tr = solve_implicit_inexact(synthetic2d, SolverConfig(tol=1e-9, theta=theta))
        assert tr.status == "converged"
        sweep.append(tr.factorizations())
    inversions = sum(later > earlier for earlier, later in zip(sweep, sweep[1:]))

    # On the bundled small instances a slower barrier schedule (sigma=0.5)
    # gives the reuse rule room to act; theta=0 refactors every step.
    reductions = {}
    for name in ("hs35", "hs76", "tame"):
        problem = _mm(name)
        assert problem.n + problem.m <= 1000
        _, tr_always = solve_implicit_inexact(problem, SolverConfig(tol=1e-9, sigma=0.5, theta=0.0))
        _, tr_reuse = solve_implicit_inexact(problem, SolverConfig(tol=1e-9, sigma=0.5, theta=0.5))
        assert tr_always.status == "converged" and tr_reuse.status == "converged"
        reductions[name] = 1.0 - tr_reuse.factorizations() / tr_always.factorizations()

    ok = (
        tr_half.status == "converged"
        and fac_half <= 8
        and float(np.max(np.abs(z_half.x - z_exact.x))) <= 1e-8
        and inversions <= 1
        and all(r >= 0.30 for r in reductions.values())
    )
    red_txt = ", ".join(f"{k} {v:.0%}" for k, v in reductions.items())
    acceptance(
        4,
        ok,
        f"theta=0.5 converges with {fac_half} factorizations (<=8, exact Newton "
        f"{tr_exact.factorizations()}); sweep {list(sweep)} has {inversions} "
        f"inversion(s); reuse cuts factorizations by {red_txt} (>=30%)",
    )
    assert tr_half.status == "converged"
    assert fac_half <= 8
    np.testing.assert_allclose(z_half.x, z_exact.x, atol=1e-8)
    assert inversions <= 1
    for name, reduction in reductions.items():
        assert reduction >= 0.30, f"{name}: only {reduction:.0%} reduction"


# ----------------------------------------------------------- criterion 5


def test_criterion_5_factorization_free_mode(acceptance, synthetic2d):
    config = SolverConfig(
        tol=1e-9, linear=LinearStrategy(kind="minres", rtol=1e-10, atol=1e-10)
    )
    instances = [
        ("synthetic2d", synthetic2d),
        ("qptest", _mm("qptest")),
        ("hs76", _mm("hs76")),
    ]
    per_instance = {}
    for name, problem in instances:
        z_e, tr_e = solve_explicit(problem, config)
        z_i, tr_i = solve_implicit(problem, config)
        gap_e = convergence_measures(problem, z_e.x, z_e.lam, z_e.gamma, z_e.s)[2]
        gap_i = convergence_measures(problem, z_i.x, z_i.lam, z_i.gamma, z_i.s)[2]
        counts_e = [r.krylov_iters for r in tr_e.records if r.krylov_iters]
        counts_i = [r.krylov_iters for r in tr_i.records if r.krylov_iters]
        per_instance[name] = {
            "gaps": (gap_e, gap_i),
            "implicit_spread": max(counts_i) / (3.0 * statistics.median(counts_i)),
            "explicit_growth": max(counts_e[-3:]) / (3.0 * counts_e[0]),
            "totals": (sum(counts_i), sum(counts_e)),
        }

    gaps_ok = all(max(m["gaps"]) <= 1e-8 for m in per_instance.values())
    spread_ok = all(m["implicit_spread"] <= 1.0 for m in per_instance.values())
    growth_hits = [n for n, m in per_instance.items() if m["explicit_growth"] >= 1.0]
    totals_ok = all(m["totals"][0] < m["totals"][1] for m in per_instance.values())
    ok = gaps_ok and spread_ok and bool(growth_hits) and totals_ok

    totals_txt = ", ".join(
        f"{n} {m['totals'][0]}<{m['totals'][1]}" for n, m in per_instance.items()
    )
    acceptance(
        5,
        ok,
        f"block-Jacobi MINRES converges all 3 instances to gap<=1e-8; implicit "
        f"Krylov counts within 3x of their median; explicit final-iteration "
        f"counts grow >=3x on {growth_hits or 'none'}; implicit totals lower "
        f"everywhere ({totals_txt})",
    )
    assert gaps_ok
    assert spread_ok
    assert growth_hits, "no instance showed 3x explicit Krylov growth"
    assert totals_ok


# ----------------------------------------------------------- criterion 6


def test_criterion_6_reduced_precision_floors(acceptance, synthetic2d):
    # Single-precision linear solves under the double-precision outer
    # iteration; the residual floor is the smallest unrelaxed KKT norm
    # seen along the run.
    problems = [("synthetic2d", synthetic2d), ("hs35", _mm("hs35"))]
    floors = {}
    for name, problem in problems:
        for method, solver in (("explicit", solve_explicit), ("implicit", solve_implicit)):
            for precision in ("f64", "f32"):
                config = SolverConfig(
                    tol=1e-12, max_iters=80, linear=LinearStrategy(precision=precision)
                )
                _, trace = solver(problem, config)
                floors[(name, method, precision)] = min(r.r_inf for r in trace.records)

    imp32_ok = all(floors[(n, "implicit", "f32")] <= 1e-10 for n, _ in problems)
    f64_ok = all(
        floors[(n, m, "f64")] <= 1e-12 for n, _ in problems for m in ("explicit", "implicit")
    )
    exp32_stalls = all(floors[(n, "explicit", "f32")] >= 1e-6 for n, _ in problems)
    ok = imp32_ok and f64_ok and exp32_stalls

    exp32_txt = ", ".join(f"{n} {floors[(n, 'explicit', 'f32')]:.1e}" for n, _ in problems)
    imp32_txt = ", ".join(f"{n} {floors[(n, 'implicit', 'f32')]:.1e}" for n, _ in problems)
    acceptance(
        6,
        ok,
        f"binary32 floors: implicit ({imp32_txt}) <=1e-10 and binary64 <=1e-12 "
        f"hold, but explicit-binary32 never stalls at >=1e-6 (floors {exp32_txt}) "
        f"- its factorization is componentwise stable on every bundled instance",
    )
    assert imp32_ok
    assert f64_ok
    assert exp32_stalls, (
        f"explicit binary32 floors {exp32_txt}: the expected stall above 1e-6 "
        f"does not occur on any bundled instance"
    )


# ----------------------------------------------------------- criterion 7


_LISTED_DIMENSIONS = {
    # name: (n, m, p) after conversion to  min 1/2 x'Qx + q'x
    #                                      s.t. Ax >= b, Cx = d
    "hs21": (2, 5, 0),
    "hs268": (5, 5, 0),
    "hs35": (3, 4, 0),
    "hs51": (5, 0, 3),
    "hs52": (5, 0, 3),
    "hs53": (5, 10, 3),
    "hs76": (4, 7, 0),
    "qptest": (2, 5, 0),
    "tame": (2, 2, 1),
}


def _row_intervals(qps):
    """Feasible interval [lo, hi] per constraint row, from the row sense."""
    lows, highs = [], []
    for row in qps.row_order:
        h = qps.rhs.get(row, 0.0)
        sense = qps.row_types[row]
        if row in qps.ranges:
            r = qps.ranges[row]
            if sense == "G":
                lo, hi = h, h + abs(r)
            elif sense == "L":
                lo, hi = h - abs(r), h
            else:
                lo, hi = (h, h + r) if r >= 0 else (h + r, h)
        elif sense == "G":
            lo, hi = h, math.inf
        elif sense == "L":
            lo, hi = -math.inf, h
        else:
            lo, hi = h, h
        lows.append(lo)
        highs.append(hi)
    return np.array(lows), np.array(highs)


def test_criterion_7_qps_ingestion(acceptance):
    tol = 1e-9
    points = 1000
    dims_ok, agree_ok = [], []
    for name in sorted(_LISTED_DIMENSIONS):
        qps = parse_qps((DATA / f"{name}.qps").read_text())
        problem = to_qp_problem(qps)
        dims_ok.append((problem.n, problem.m, problem.p) == _LISTED_DIMENSIONS[name])

        # original-form verdict: every row activity inside its interval
        # and every variable inside its bounds
        cols = {c: i for i, c in enumerate(qps.column_order)}
        coeffs = np.zeros((len(qps.row_order), problem.n))
        for col, entries in qps.columns.items():
            for row, value in entries.items():
                if row in qps.row_types and qps.row_types[row] != "N":
                    coeffs[qps.row_order.index(row), cols[col]] = value
        row_lo, row_hi = _row_intervals(qps)
        bound_lo = np.array([qps.bounds.get(c, (0.0, math.inf))[0] for c in qps.column_order])
        bound_hi = np.array([qps.bounds.get(c, (0.0, math.inf))[1] for c in qps.column_order])

        rng = np.random.default_rng(hash(name) % 2**32)
        X = rng.uniform(-12.0, 12.0, size=(points, problem.n))
        activity = X @ coeffs.T
        original = (
            np.all((activity >= row_lo - tol) & (activity <= row_hi + tol), axis=1)
            & np.all((X >= bound_lo - tol) & (X <= bound_hi + tol), axis=1)
        )
        converted = np.ones(points, dtype=bool)
        if problem.m:
            converted &= np.all(X @ problem.A.toarray().T - problem.b >= -tol, axis=1)
        if problem.p:
            converted &= np.all(np.abs(X @ problem.C.toarray().T - problem.d) <= tol, axis=1)
        agree_ok.append(bool(np.array_equal(original, converted)))

    ok = all(dims_ok) and all(agree_ok) and len(_LISTED_DIMENSIONS) >= 5
    acceptance(
        7,
        ok,
        f"{len(_LISTED_DIMENSIONS)} Hock-Schittkowski/Maros-Meszaros instances "
        f"parse, converted dimensions match the dataset listing, and original "
        f"vs converted feasibility verdicts agree on {points} random points each",
    )
    assert len(_LISTED_DIMENSIONS) >= 5
    assert all(dims_ok)
    assert all(agree_ok)


# ----------------------------------------------------------- criterion 8


def _reassemble(factor) -> np.ndarray:
    D = np.diag(factor.d_diag.astype(np.float64))
    for i, v in enumerate(factor.d_sub):
        if v != 0.0:
            D[i, i + 1] = D[i + 1, i] = v
    L = factor.L.astype(np.float64)
    M = L @ D @ L.T
    out = np.empty_like(M)
    out[np.ix_(factor.perm, factor.perm)] = M
    return out


def test_criterion_8_linear_algebra_suite(acceptance):
    rng = np.random.default_rng(808)
    round_trip, matches = [], []
    for n1, n2 in ((3, 2), (30, 20), (120, 80)):
        S = quasi_definite(n1, n2, seed=7000 + n1)
        dense = S.to_dense().astype(np.float64)
        factor = ldlt_factor(S)
        rel = np.linalg.norm(_reassemble(factor) - dense) / np.linalg.norm(dense)
        round_trip.append(rel)

        rhs = rng.standard_normal(n1 + n2)
        direct = ldlt_solve(factor, rhs)
        iterative, report = minres(dense, rhs, rtol=1e-12, atol=0.0)
        matches.append(
            np.linalg.norm(iterative - direct) / max(np.linalg.norm(direct), 1.0)
        )

    eig_errors = []
    for n1, n2 in ((3, 2), (30, 20)):
        dense = quasi_definite(n1, n2, seed=9000 + n1).to_dense().astype(np.float64)
        eigs = dense_symmetric_eigenvalues(dense)
        trace_rel = abs(np.sum(eigs) - np.trace(dense)) / abs(np.trace(dense))
        sign_ref, logdet_ref = np.linalg.slogdet(dense)
        logdet_rel = abs(np.sum(np.log(np.abs(eigs))) - logdet_ref) / abs(logdet_ref)
        sign_ok = math.copysign(1.0, float(np.prod(np.sign(eigs)))) == sign_ref
        eig_errors.append(max(trace_rel, logdet_rel) if sign_ok else math.inf)

    ok = (
        max(round_trip) <= 1e-9
        and max(matches) <= 1e-8
        and max(eig_errors) <= 1e-9
    )
    acceptance(
        8,
        ok,
        f"factorization round-trip rel err <= {max(round_trip):.1e} (sizes "
        f"5/50/200), MINRES-vs-direct <= {max(matches):.1e}, eigenvalue "
        f"trace/determinant checks <= {max(eig_errors):.1e}",
    )
    assert max(round_trip) <= 1e-9
    assert max(matches) <= 1e-8
    assert max(eig_errors) <= 1e-9
