from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import QQ, Poly

from engine.cumulant_core import (
    JointCumulantTable,
    cumulants_of_law,
    exact_combination_cumulants,
    from_sympy,
    gaussian_cumulants,
    linear_transform,
    multi_indices,
    product_law,
    project,
    to_sympy,
    univariate_table,
)
from engine.errors import BoundedInputError, InputError, NondegeneracyError
from engine.formats import load_scenario
from engine.samples import SampleMatrix
from engine.symbolic import (
    CharacterizationReport,
    ScenarioSpec,
    Verdict,
    Violation,
    characterize,
    characterize_prop2,
    characterize_vector,
    expand_hk_single,
    expand_statistic,
    is_radial,
    normalize_combination,
    quadratic_reduction_check,
)

AB = ("a", "b")
a, b, u = sympy.symbols("a b u")


def table(labels, order, **nonzero):
    entries = {alpha: Fraction(0) for alpha in multi_indices(len(labels), order)}
    for key, value in nonzero.items():
        entries[tuple(int(c) for c in key.split("_"))] = Fraction(value)
    return JointCumulantTable(tuple(labels), order, entries)


def scenario(fixtures_dir, name, order=None):
    return load_scenario(fixtures_dir / name).to_spec(order)


def radial_rebuild(representation: Poly) -> Poly:
    return Poly(representation.as_expr().subs(u, a ** 2 + b ** 2), a, b, domain=QQ)


# ── expansion ────────────────────────────────────────────────────────────────

def test_independent_skewed_side_expands_to_a_cubed():
    s = univariate_table(gaussian_cumulants(0, 1, 3), "S")
    entries = dict(s.entries)
    entries[(3,)] = Fraction(1)
    s = JointCumulantTable(("S",), 3, entries)
    y = univariate_table(gaussian_cumulants(2, 5, 3), "Y")
    jc = product_law([s, y])
    assert expand_hk_single(3, jc) == Poly(a ** 3, a, domain=QQ)


def test_expansion_uses_binomial_weights():
    jc = table(("S", "Y"), 4, **{"2_0": 1, "1_1": 2, "1_3": 3, "2_2": 5})
    p = expand_hk_single(4, jc)
    assert p.as_dict() == {(1,): 4 * 3, (2,): 6 * 5}
    assert expand_hk_single(2, jc).as_dict() == {(1,): 4, (2,): 1}
    assert p.domain == QQ


def test_constant_y_role():
    jc = univariate_table(gaussian_cumulants(1, 2, 4), "S")
    assert expand_hk_single(2, jc).as_dict() == {(2,): 2}
    assert expand_hk_single(1, jc).as_dict() == {(1,): 1}


def test_statistic_is_separable_and_restricts_to_each_side(fixtures_dir):
    spec = scenario(fixtures_dir, "discrete_product.json")
    for k in range(1, spec.order + 1):
        h = expand_statistic(spec, k)
        assert all(e[0] == 0 or e[1] == 0 for e in h.monoms())
        assert h.as_expr().subs(b, 0) == expand_hk_single(k, spec.left, "a").as_expr()
        assert h.as_expr().subs(a, 0) == expand_hk_single(k, spec.right, "b").as_expr()


def test_expansion_bounds():
    jc = table(("S", "Y"), 3, **{"2_0": 1})
    with pytest.raises(BoundedInputError):
        expand_hk_single(4, jc)
    with pytest.raises(InputError):
        expand_hk_single(2, table(("S", "Y", "W"), 2, **{"2_0_0": 1}))


@st.composite
def finite_laws(draw, dim):
    size = draw(st.integers(min_value=1, max_value=4))
    atoms = [[draw(st.integers(min_value=-3, max_value=3)) for _ in range(dim)] for _ in range(size)]
    weights = [draw(st.integers(min_value=1, max_value=5)) for _ in range(size)]
    return atoms, [Fraction(w, sum(weights)) for w in weights]


POINTS = [Fraction(-2), Fraction(-1), Fraction(-1, 2), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3), Fraction(5)]


def _s_and_y(jc: JointCumulantTable) -> JointCumulantTable:
    """S = X0 and Y = X1 + ... + X_{d-1}; S alone when d = 1."""
    if jc.dim == 1:
        return project(jc, ["X0"])
    return linear_transform(jc, {"S": {"X0": 1}, "Y": {name: 1 for name in jc.labels[1:]}})


@pytest.mark.parametrize("dim", [1, 2, 3])
@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_expansion_matches_the_law_of_the_combination(dim, data):
    atoms, probs = data.draw(finite_laws(dim))
    jc = _s_and_y(cumulants_of_law(atoms, probs, tuple(f"X{i}" for i in range(dim)), 6))
    for point in POINTS:
        direct = exact_combination_cumulants([point] + [1] * (dim - 1), atoms, probs, 6)
        for k in range(1, 7):
            r_y = jc.cumulant(k, "Y") if dim > 1 else 0
            assert from_sympy(expand_hk_single(k, jc).eval(to_sympy(point))) + r_y == direct.r(k)


# ── radial decision ──────────────────────────────────────────────────────────

def ab(expr) -> Poly:
    return Poly(expr, a, b, domain=QQ)


def test_radial_representation():
    p = ab(3 * (a ** 2 + b ** 2) ** 2 - (a ** 2 + b ** 2))
    result = is_radial(p)
    assert result.radial
    assert result.representation.as_dict() == {(2,): 3, (1,): -1}
    assert radial_rebuild(result.representation) == p
    assert is_radial(ab(0)).radial


def test_radial_witnesses():
    result = is_radial(ab(a ** 2 + 2 * b ** 2))
    assert not result.radial
    # the multiple comes from b^2, so the a-side carries Var(S1) - Var(S2)
    assert result.witness == ((2, 0), -1)
    assert is_radial(ab(a + b)).witness == ((1, 0), 1)
    assert is_radial(ab(a ** 3 + a ** 2 + b ** 2)).witness == ((3, 0), 1)
    assert is_radial(ab(b ** 4)).witness == ((4, 0), -1)
    with pytest.raises(InputError):
        is_radial(Poly(a ** 2, a, domain=QQ))


def test_pure_a_power_is_its_own_witness():
    assert is_radial(ab(7 * a ** 4)).witness == ((4, 0), 7)
    left = table(("S1", "Y"), 4, **{"2_0": 1, "0_2": 1, "4_0": 1})
    right = table(("S2", "Z"), 4, **{"2_0": 1, "0_2": 1})
    report = characterize(ScenarioSpec(left, right, 4))
    assert [(v.order, v.witness(), v.coefficient) for v in report.violations] == [(4, "a^4", 1)]


def test_float_tables_expand_over_the_reals():
    left = JointCumulantTable(("S1",), 3, {(1,): 0.0, (2,): 1.0, (3,): 0.25})
    p = expand_hk_single(3, left)
    assert p.domain.is_RR
    result = is_radial(expand_statistic(ScenarioSpec(left, univariate_table(gaussian_cumulants(0, 1, 3), "S2"), 3), 3))
    assert result.witness[0] == (3, 0)
    assert result.witness[1] == pytest.approx(0.25)


# ── two-sided characterization ───────────────────────────────────────────────

def test_gaussian_fixture_is_characterized(fixtures_dir):
    report = characterize(scenario(fixtures_dir, "gaussian.json"))
    assert report.verdict == Verdict.CHARACTERIZED
    assert report.violations == []
    assert report.order == 8
    for symbol in ("E(S1)", "E(S2)", "cov(S1,Y)", "cov(S2,Z)", "r_3(S1)", "r_8(S2)", "Var(S1)-Var(S2)"):
        assert report.constraint(symbol).holds
    assert any("normal up to order 8" in note for note in report.notes)


def test_skewed_fixture_fails_at_order_three(fixtures_dir):
    report = characterize(scenario(fixtures_dir, "skewed.json"))
    assert report.verdict == Verdict.VIOLATED
    assert report.violations == [Violation(3, (3, 0), Fraction(1), "", AB)]
    assert report.violations[0].witness() == "a^3"
    assert not report.constraint("r_3(S1)").holds


def test_covariance_fixture_fails_at_order_two(fixtures_dir):
    report = characterize(scenario(fixtures_dir, "covariance.json"))
    assert [(v.order, v.witness(), v.coefficient) for v in report.violations] == [(2, "a", 1)]
    assert report.constraint("cov(S1,Y)").value == Fraction(1, 2)


def test_unequal_variances_are_caught():
    left = table(("S1", "Y"), 4, **{"2_0": 1, "0_2": 1})
    right = table(("S2", "Z"), 4, **{"2_0": 2, "0_2": 1})
    report = characterize(ScenarioSpec(left, right, 4))
    assert [(v.order, v.monomial, v.coefficient) for v in report.violations] == [(2, (2, 0), -1)]
    assert report.constraint("Var(S1)-Var(S2)").value == -1


def test_coupling_entries_must_match_across_sides():
    left = table(("S1", "Y"), 3, **{"2_0": 1, "0_2": 1, "2_1": 1})
    same = table(("S2", "Z"), 3, **{"2_0": 1, "0_2": 1, "2_1": 1})
    other = table(("S2", "Z"), 3, **{"2_0": 1, "0_2": 1, "2_1": 2})
    passing = characterize(ScenarioSpec(left, same, 3))
    assert passing.characterized
    coupling = passing.constraint("r_3(S1,S1,Y)-r_3(S2,S2,Z)")
    assert coupling.kind == "coupling" and coupling.holds
    failing = characterize(ScenarioSpec(left, other, 3))
    assert [(v.order, v.monomial, v.coefficient) for v in failing.violations] == [(3, (2, 0), -3)]


def test_custom_coefficient_names():
    left = table(("S1", "Y"), 3, **{"2_0": 1, "1_1": 1})
    right = table(("S2", "Z"), 3, **{"2_0": 1})
    report = characterize(ScenarioSpec(left, right, 3), vars=("s", "t"))
    assert report.violations[0].witness() == "s"


def test_order_and_nondegeneracy_preconditions(fixtures_dir):
    with pytest.raises(BoundedInputError):
        characterize(scenario(fixtures_dir, "gaussian.json", order=2))
    with pytest.raises(NondegeneracyError, match="nondegeneracy violated"):
        characterize(scenario(fixtures_dir, "degenerate.json"))


def test_characterized_tables_are_gaussian_on_the_s_marginals(fixtures_dir):
    spec = scenario(fixtures_dir, "gaussian.json")
    report = characterize(spec)
    assert report.characterized
    variance = spec.left.cumulant(2, "S1")
    swapped = {}
    for side, table_ in (("left", spec.left), ("right", spec.right)):
        entries = dict(table_.entries)
        gauss = gaussian_cumulants(0, variance, spec.order)
        for k in range(1, spec.order + 1):
            entries[(k, 0)] = gauss.r(k)
        swapped[side] = JointCumulantTable(table_.labels, table_.order, entries)
    rebuilt = ScenarioSpec(swapped["left"], swapped["right"], spec.order)
    for k in range(1, spec.order + 1):
        assert expand_statistic(rebuilt, k) == expand_statistic(spec, k)


def test_scenario_spec_validation():
    left = table(("S", "Y"), 3, **{"2_0": 1})
    with pytest.raises(InputError):
        ScenarioSpec(left, table(("S", "Z"), 3, **{"2_0": 1}), 3)
    with pytest.raises(BoundedInputError):
        ScenarioSpec(left, table(("S2", "Z"), 3, **{"2_0": 1}), 4)


def test_report_round_trip(fixtures_dir):
    report = characterize(scenario(fixtures_dir, "skewed.json"))
    again = CharacterizationReport.from_dict(report.to_dict())
    assert again.to_dict() == report.to_dict()
    assert again.violations == report.violations
    with pytest.raises(InputError):
        CharacterizationReport(Verdict.CHARACTERIZED, 3, violations=report.violations)


# ── normalized combinations and the vector case ──────────────────────────────

def test_three_four_combination_has_unit_variance():
    jc = product_law([univariate_table(gaussian_cumulants(0, 1, 4), "X1"), univariate_table(gaussian_cumulants(0, 1, 4), "X2")])
    normed, scale = normalize_combination([3, 4], jc)
    assert scale == 25
    assert normed.labels == ("S", "X1", "X2")
    assert normed.cumulant(2, "S") == 1
    assert normed.joint("S", "X1") == Fraction(3, 5)


def test_irrational_scale_is_carried_exactly():
    jc = product_law([univariate_table(gaussian_cumulants(0, 1, 4), "X1"), univariate_table(gaussian_cumulants(0, 1, 4), "X2")])
    normed, scale = normalize_combination([1, 1], jc)
    assert scale == 2
    assert normed.labels == ("S", "X1", "X2")
    assert normed.joint("S", "X1") == sympy.sqrt(2) / 2
    assert normed.cumulant(2, "S") == 1
    assert normed.cumulant(4, "S") == 0
    assert normed.joint("S", "S", "X1") == 0
    alone, _ = normalize_combination([1, 1], jc, keep=[])
    assert alone.labels == ("S",)
    with pytest.raises(InputError):
        normalize_combination([0, 0], jc)


def test_irrational_scale_with_a_shifted_mean():
    y = univariate_table(gaussian_cumulants(0, 1, 4), "Y")
    shifted = product_law([univariate_table(gaussian_cumulants(1, 1, 4), "X1"), univariate_table(gaussian_cumulants(0, 1, 4), "X2"), y])
    left, _ = normalize_combination({"X1": 1, "X2": 1}, shifted, label="S1", keep=["Y"])
    assert left.cumulant(1, "S1") == sympy.sqrt(2) / 2
    right = product_law([univariate_table(gaussian_cumulants(0, 1, 4), "S2"), univariate_table(gaussian_cumulants(0, 1, 4), "Z")])
    report = characterize(ScenarioSpec(left, right, 4))
    assert [(v.order, v.witness(), v.coefficient) for v in report.violations] == [(1, "a", sympy.sqrt(2) / 2)]
    assert report.to_dict()["violations"][0]["coefficient"] == "sqrt(2)/2"
    assert CharacterizationReport.from_dict(report.to_dict()).violations == report.violations


def test_vector_gaussian_is_characterized(fixtures_dir):
    report = characterize_vector(scenario(fixtures_dir, "vector_gaussian.json"))
    assert report.characterized
    assert len(report.runs) == 4
    assert all(run["verdict"] == "Characterized" for run in report.runs)
    assert report.constraint("cov(X1,X2)").holds
    assert set(report.per_variable) == {"X1", "X2", "X3"}
    assert any("independence" in note for note in report.notes)


def test_vector_correlated_pair_is_violated():
    left = table(("X1", "X2", "Y"), 4, **{"2_0_0": 1, "0_2_0": 1, "1_1_0": Fraction(1, 2), "0_0_2": 1})
    right = table(("X3", "Z"), 4, **{"2_0": 1, "0_2": 1})
    report = characterize_vector(ScenarioSpec(left, right, 4))
    assert report.verdict == Verdict.VIOLATED
    assert report.constraint("cov(X1,X2)").value == Fraction(1, 2)
    assert any(v.context == "cov(X1,X2)" for v in report.violations)


def test_vector_joint_cumulants_must_vanish():
    left = table(("X1", "X2", "Y"), 4, **{"2_0_0": 1, "0_2_0": 1, "2_2_0": 1, "0_0_2": 1})
    right = table(("X3", "Z"), 4, **{"2_0": 1})
    report = characterize_vector(ScenarioSpec(left, right, 4))
    assert not report.characterized
    assert report.constraint("r_4(X1,X1,X2,X2)").value == 1


def test_vector_fourth_cumulant_of_one_variable():
    left = table(("X1", "X2", "Y"), 4, **{"2_0_0": 1, "0_2_0": 1, "4_0_0": 1, "0_0_2": 1})
    right = table(("X3", "Z"), 4, **{"2_0": 1, "0_2": 1})
    report = characterize_vector(ScenarioSpec(left, right, 4))
    assert not report.characterized
    unit = [v for v in report.violations if v.context == "S1=X1 | S2=X3"]
    assert [(v.order, v.witness(), v.coefficient) for v in unit] == [(4, "a^4", 1)]
    # (3*X1 + 4*X2)/5 inherits 81/625 of r_4(X1)
    mixed = [v for v in report.violations if v.context == "S1=(3*X1+4*X2)/5 | S2=X3"]
    assert [(v.order, v.witness(), v.coefficient) for v in mixed] == [(4, "a^4", Fraction(81, 625))]
    assert report.constraint("r_4(X1)").value == 1
    assert any(v.context == "r_4(X1)" and v.order == 4 for v in report.violations)


# ── two-statistic variant ────────────────────────────────────────────────────

def test_prop2_gaussian(fixtures_dir):
    report = characterize_prop2(scenario(fixtures_dir, "prop2_gaussian.json"))
    assert report.characterized
    assert [run["verdict"] for run in report.runs] == ["Characterized", "Characterized"]
    assert report.constraint("Var(X)-Var(Z)").holds
    assert report.constraint("Var(Y)-Var(T)").holds
    assert report.constraint("r_4(X,X,Y,Y)").kind == "unconstrained"


def test_prop2_needs_both_statistics(fixtures_dir):
    xxy = characterize_prop2(scenario(fixtures_dir, "prop2_xxy.json"))
    assert [run["verdict"] for run in xxy.runs] == ["Characterized", "Violated"]
    assert xxy.constraint("r_3(X,X,Y)").value == 1
    xyy = characterize_prop2(scenario(fixtures_dir, "prop2_xyy.json"))
    assert [run["verdict"] for run in xyy.runs] == ["Violated", "Characterized"]
    assert not xyy.characterized


def test_prop2_correlated_pair():
    left = table(("X", "Y"), 3, **{"2_0": 1, "0_2": 1, "1_1": Fraction(1, 2)})
    right = table(("Z", "T"), 3, **{"2_0": 1, "0_2": 1})
    report = characterize_prop2(ScenarioSpec(left, right, 3))
    assert report.runs[0]["verdict"] == "Violated"
    assert report.constraint("r_2(X,Y)").value == Fraction(1, 2)


def test_prop2_middle_entry_escapes_both_statistics():
    left = table(("X", "Y"), 4, **{"2_0": 1, "0_2": 1, "2_2": 1})
    right = table(("Z", "T"), 4, **{"2_0": 1, "0_2": 1, "2_2": 1})
    report = characterize_prop2(ScenarioSpec(left, right, 4))
    assert [run["verdict"] for run in report.runs] == ["Characterized", "Characterized"]
    assert report.verdict == Verdict.CHARACTERIZED
    assert report.violations == []
    assert report.failed_constraints() == []
    middle = report.constraint("r_4(X,X,Y,Y)")
    assert middle.kind == "unconstrained" and not middle.holds
    assert any("independence is not established: r_4(X,X,Y,Y) = 1" in note for note in report.notes)
    assert any("reported for information" in note for note in report.notes)


# ── quadratic reduction ──────────────────────────────────────────────────────

def test_quadratic_reduction_floating():
    rng = np.random.default_rng(7)
    samples = SampleMatrix(rng.standard_normal((10_000, 5)), tuple(f"X{i}" for i in range(1, 6)))
    a = rng.uniform(-2, 2, 5).tolist()
    assert quadratic_reduction_check(a, samples) < 1e-12
    assert quadratic_reduction_check(a, samples, split=1) < 1e-12


def test_quadratic_reduction_exact():
    rng = np.random.default_rng(11)
    samples = SampleMatrix(rng.standard_normal((100, 5)), tuple(f"X{i}" for i in range(1, 6)))
    assert quadratic_reduction_check(["1/2", -3, 2, "7/3", 0], samples, exact=True) == 0
    assert quadratic_reduction_check([0] * 5, samples, exact=True) == 0


def test_quadratic_reduction_shape_errors():
    samples = SampleMatrix(np.ones((4, 3)), ("X1", "X2", "X3"))
    with pytest.raises(InputError):
        quadratic_reduction_check([1, 2], samples)
    with pytest.raises(InputError):
        quadratic_reduction_check([1, 2, 3], samples, split=4)
