"""QPS ingestion: parsing, conversion rules, bundled-instance fidelity.

Bundled instances come from the Maros-Meszaros collection (QPTEST and the
Hock-Schittkowski subset HS21/HS35/HS51/HS52/HS53/HS76/HS268, plus TAME).
Dimension and optimal-value oracles are the collection's published
listing; the objective values below are the published optima.
"""

import math
import textwrap

import numpy as np
import pytest

from ipqp import (
    QpProblem,
    SolverConfig,
    builtin_problem,
    bundled_instances,
    load_bundled,
    load_problem,
    solve_implicit,
)
from ipqp.qps import QpsParseError, parse_qps, read_solution, to_qp_problem, write_solution

# published QPS listing (constraint rows, columns) and the converted
# canonical dimensions (n, m, p) after bounds become inequality rows
PUBLISHED = {
    "hs21": ((1, 2), (2, 5, 0), -99.96),
    "hs268": ((5, 5), (5, 5, 0), 0.0),
    "hs35": ((1, 3), (3, 4, 0), 0.111111111),
    "hs51": ((3, 5), (5, 0, 3), 0.0),
    "hs52": ((3, 5), (5, 0, 3), 5.326647564),
    "hs53": ((3, 5), (5, 10, 3), 4.093023256),
    "hs76": ((3, 4), (4, 7, 0), -4.681818182),
    "qptest": ((2, 2), (2, 5, 0), 4.371875),
    "tame": ((1, 2), (2, 2, 1), 0.0),
}

_MINI = textwrap.dedent(
    """\
    NAME          MINI
    ROWS
     N  COST
     G  LIM1
     L  LIM2
     E  FIX
    COLUMNS
        X1        COST      1.0        LIM1      2.0
        X1        LIM2      1.0        FIX       1.0
        X2        COST     -1.0        LIM1      1.0
        X2        FIX       1.0
    RHS
        RHS       LIM1      2.0        LIM2      6.0
        RHS       COST     -3.5        FIX       1.0
    BOUNDS
     UP BND       X1        4.0
     FR BND       X2
    QUADOBJ
        X1        X1        8.0
        X1        X2        2.0
        X2        X2        10.0
    ENDATA
    """
)


def test_parse_sections():
    qps = parse_qps(_MINI)
    assert qps.name == "MINI"
    assert qps.objective_row == "COST"
    assert qps.row_types == {"LIM1": "G", "LIM2": "L", "FIX": "E"}
    assert qps.column_order == ["X1", "X2"]
    assert qps.columns["X1"]["LIM1"] == 2.0
    assert qps.rhs["LIM2"] == 6.0
    # RHS on the objective row encodes minus the constant
    assert qps.objective_constant == 3.5
    assert qps.bounds["X1"] == (0.0, 4.0)
    assert qps.bounds["X2"] == (-math.inf, math.inf)
    assert qps.quad_kind == "QUADOBJ"
    assert qps.quad[("X1", "X2")] == 2.0


def test_conversion_shapes_and_signs():
    prob = to_qp_problem(parse_qps(_MINI))
    # QUADOBJ stores the lower triangle once; conversion mirrors it
    np.testing.assert_array_equal(prob.Q.toarray(), [[8.0, 2.0], [2.0, 10.0]])
    np.testing.assert_array_equal(prob.q, [1.0, -1.0])
    assert prob.objective_constant == 3.5
    # rows: LIM1 as-is, LIM2 negated, X1 lower bound 0, X1 upper bound
    np.testing.assert_array_equal(
        prob.A.toarray(), [[2.0, 1.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]
    )
    np.testing.assert_array_equal(prob.b, [2.0, -6.0, 0.0, -4.0])
    np.testing.assert_array_equal(prob.C.toarray(), [[1.0, 1.0]])
    np.testing.assert_array_equal(prob.d, [1.0])


def test_qmatrix_is_symmetrized():
    text = _MINI.replace("QUADOBJ", "QMATRIX").replace(
        "    X1        X2        2.0\n", "    X1        X2        2.0\n    X2        X1        2.0\n"
    )
    prob = to_qp_problem(parse_qps(text))
    np.testing.assert_array_equal(prob.Q.toarray(), [[8.0, 2.0], [2.0, 10.0]])


def test_ranged_row_membership():
    text = _MINI.replace("BOUNDS", "RANGES\n    RNG       LIM1      3.0\nBOUNDS")
    qps = parse_qps(text)
    assert qps.ranges["LIM1"] == 3.0
    prob = to_qp_problem(qps)
    # G row with range r becomes the pair h <= a'x <= h + |r|
    rows = prob.A.toarray()
    np.testing.assert_array_equal(rows[0], [2.0, 1.0])
    np.testing.assert_array_equal(rows[1], [-2.0, -1.0])
    assert prob.b[0] == 2.0 and prob.b[1] == -5.0


def test_fixed_bound_becomes_equality():
    text = _MINI.replace(" UP BND       X1        4.0", " FX BND       X1        0.75")
    prob = to_qp_problem(parse_qps(text))
    np.testing.assert_array_equal(prob.C.toarray(), [[1.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(prob.d, [1.0, 0.75])


def test_infeasible_bounds_raise():
    text = _MINI.replace(
        " UP BND       X1        4.0", " LO BND       X1        9.0\n UP BND       X1        4.0"
    )
    with pytest.raises(QpsParseError, match="bounds"):
        to_qp_problem(parse_qps(text))


def test_parse_errors_name_the_line():
    with pytest.raises(QpsParseError):
        parse_qps("NAME X\nROWS\n N COST\nCOLUMNS\n    X1 COST notanumber\nENDATA\n")
    with pytest.raises(QpsParseError):
        parse_qps("NAME X\nNOSUCHSECTION\nENDATA\n")


def test_second_free_row_warns_and_is_ignored():
    text = _MINI.replace(" N  COST\n", " N  COST\n N  COST2\n")
    qps = parse_qps(text)
    assert qps.objective_row == "COST"
    assert any("COST2" in w for w in qps.warnings)
    prob = to_qp_problem(qps)
    assert prob.A.shape[0] == 4  # free row contributes no constraint


def test_negative_upper_bound_frees_default_lower():
    # a negative UP bound with the default 0 lower is taken as freeing
    # the lower bound, with a warning, per long-standing MPS practice
    text = _MINI.replace(" UP BND       X1        4.0", " UP BND       X1       -1.0")
    qps = parse_qps(text)
    assert any("lower" in w.lower() for w in qps.warnings)
    assert qps.bounds["X1"] == (-math.inf, -1.0)


def test_builtin_synthetic2d_frozen_data():
    prob = builtin_problem("synthetic2d")
    np.testing.assert_array_equal(prob.Q.toarray(), np.eye(2))
    np.testing.assert_array_equal(prob.q, [0.0, 0.0])
    np.testing.assert_array_equal(
        prob.A.toarray(), [[1.0, 1.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    )
    np.testing.assert_array_equal(prob.b, [0.65, -0.1, -0.85, -0.8])
    assert prob.p == 0
    with pytest.raises(ValueError):
        builtin_problem("nope")


def test_bundled_listing_complete():
    assert bundled_instances() == tuple(sorted(PUBLISHED))


@pytest.mark.parametrize("name", sorted(PUBLISHED))
def test_bundled_dimensions_match_published_listing(name):
    (rows, cols), (n, m, p), _ = PUBLISHED[name]
    prob = load_bundled(name)
    assert (prob.n, prob.m, prob.p) == (n, m, p)
    assert prob.n == cols
    # constraint rows survive conversion: each G/L/E row contributes one
    # inequality or equality (ranged rows two); the rest are bound rows
    from ipqp.qps import _bundled_root
    qps = parse_qps((_bundled_root() / f"{name}.qps").read_text())
    assert len(qps.row_order) == rows
    assert len(qps.column_order) == cols


@pytest.mark.parametrize("name", sorted(PUBLISHED))
def test_bundled_feasibility_preserved_on_random_points(name):
    # verdict of the original row/bound description must match the
    # converted (A, b, C, d) verdict on 1000 sampled points
    from ipqp.qps import _bundled_root, _ranged_interval

    qps = parse_qps((_bundled_root() / f"{name}.qps").read_text())
    prob = to_qp_problem(qps)
    col_index = {c: i for i, c in enumerate(qps.column_order)}
    tol = 1e-9

    def original_feasible(x) -> bool:
        for row in qps.row_order:
            act = sum(entries[row] * x[col_index[col]]
                      for col, entries in qps.columns.items() if row in entries)
            h = qps.rhs.get(row, 0.0)
            rtype = qps.row_types[row]
            if row in qps.ranges:
                lo, hi = _ranged_interval(rtype, h, qps.ranges[row])
                if act < lo - tol or act > hi + tol:
                    return False
            elif rtype == "G" and act < h - tol:
                return False
            elif rtype == "L" and act > h + tol:
                return False
            elif rtype == "E" and abs(act - h) > tol:
                return False
        for col in qps.column_order:
            lo, up = qps.bounds.get(col, (0.0, math.inf))
            xi = x[col_index[col]]
            if xi < lo - tol or xi > up + tol:
                return False
        return True

    def converted_feasible(x) -> bool:
        if prob.m and np.min(prob.A @ x - prob.b) < -tol:
            return False
        if prob.p and np.max(np.abs(prob.C @ x - prob.d)) > tol:
            return False
        return True

    rng = np.random.default_rng(hash(name) % 2**32)
    agree = 0
    for _ in range(1000):
        x = rng.uniform(-12.0, 12.0, size=prob.n)
        assert original_feasible(x) == converted_feasible(x)
        agree += 1
    assert agree == 1000


@pytest.mark.parametrize("name", sorted(PUBLISHED))
def test_bundled_objective_preserved(name):
    # the converted quadratic reproduces the QPS objective at random points
    from ipqp.qps import _bundled_root

    qps = parse_qps((_bundled_root() / f"{name}.qps").read_text())
    prob = to_qp_problem(qps)
    col_index = {c: i for i, c in enumerate(qps.column_order)}
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.uniform(-3.0, 3.0, size=prob.n)
        linear = sum(entries.get(qps.objective_row, 0.0) * x[col_index[col]]
                     for col, entries in qps.columns.items())
        quad = 0.0
        for (c1, c2), val in qps.quad.items():
            i, j = col_index[c1], col_index[c2]
            quad += val * x[i] * x[j] * (0.5 if i == j else 1.0)
        expect = quad + linear + qps.objective_constant
        np.testing.assert_allclose(prob.objective(x), expect, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", sorted(PUBLISHED))
def test_bundled_solves_to_published_optimum(name):
    _, _, published = PUBLISHED[name]
    prob = load_bundled(name)
    z, trace = solve_implicit(prob, SolverConfig(tol=1e-9, max_iters=100))
    assert trace.status == "converged"
    np.testing.assert_allclose(
        prob.objective(z.x), published, atol=1e-6 * max(1.0, abs(published))
    )


def test_hs268_recovers_integer_solution():
    # the unconstrained minimizer (1, 2, -1, 3, -4) is feasible, with the
    # fifth constraint weakly active; the solver must land on it
    prob = load_bundled("hs268")
    z, trace = solve_implicit(prob, SolverConfig(tol=1e-9))
    assert trace.status == "converged"
    np.testing.assert_allclose(z.x, [1.0, 2.0, -1.0, 3.0, -4.0], atol=1e-5)


def test_load_problem_dispatch(tmp_path):
    assert load_problem("builtin:synthetic2d").name == "synthetic2d"
    path = tmp_path / "mini.qps"
    path.write_text(_MINI)
    prob = load_problem(str(path))
    assert prob.name == "MINI" and prob.n == 2
    with pytest.raises(QpsParseError, match="cannot read"):
        load_problem(str(tmp_path / "missing.qps"))
    with pytest.raises(ValueError):
        load_bundled("nope")


def test_solution_round_trip(tmp_path, synthetic2d):
    z, trace = solve_implicit(synthetic2d, SolverConfig(tol=1e-9))
    path = tmp_path / "sol.json"
    write_solution(z, synthetic2d, str(path), trace.status)
    back = read_solution(str(path))
    assert back["status"] == "converged"
    assert back["problem"] == "synthetic2d"
    np.testing.assert_allclose(back["x"], z.x, rtol=0)
    np.testing.assert_allclose(back["lam"], z.lam, rtol=0)
    np.testing.assert_allclose(back["objective"], synthetic2d.objective(z.x), rtol=1e-15)
