"""
Symbolic side of the characterization: cumulants of a*S1 + Y + b*S2 + Z expanded
as exact sympy polynomials in formal (a, b), and the radial test "depends on
a^2 + b^2 only" decided by graded coefficient matching.

Continuity arguments are replaced by exact polynomial identity, so every verdict
comes with a certificate: the representation Q with p = Q(a^2 + b^2), or the first
offending monomial in graded-lex order. Verdicts are "normal up to order K"; only
finitely many cumulants are ever inspected.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np  # type: ignore
import sympy  # type: ignore
from sympy import Poly  # type: ignore

from .cumulant_core import (
    MAX_ORDER,
    JointCumulantTable,
    Number,
    as_scalar,
    coefficient_vector,
    exact_sqrt,
    format_scalar,
    from_sympy,
    linear_transform,
    multi_indices,
    parse_scalar,
    poly_domain,
    project,
    to_sympy,
)
from .errors import BoundedInputError, InputError, NondegeneracyError
from .samples import SampleMatrix

logger = logging.getLogger(__name__)

DEFAULT_VARS = ("a", "b")
# reported next to the verdict, never counted as violations
INFORMATIONAL_KINDS = ("coupling", "unconstrained")

# Exact polynomials are sympy Polys over QQ (RR for estimated tables, EX when a
# normalized table carries surds).
CoeffPolynomial = Poly


def format_monomial(vars: Sequence[str], exponent: Sequence[int]) -> str:
    """("a", "b"), (3, 1) -> "a^3*b"; the empty monomial is "1"."""
    parts = []
    for name, e in zip(vars, exponent):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) or "1"


def _poly(terms: Mapping[Tuple[int, ...], Number], vars: Sequence[str]) -> Poly:
    gens = [sympy.Symbol(v) for v in vars]
    return Poly.from_dict({m: to_sympy(c) for m, c in terms.items()}, *gens, domain=poly_domain(terms.values()))


class Verdict(str, Enum):
    CHARACTERIZED = "Characterized"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class Constraint:
    """``symbol`` must equal zero; ``value`` is what the input tables give."""
    symbol: str
    value: Number
    kind: str = "derived"

    @property
    def holds(self) -> bool:
        return self.value == 0

    def to_dict(self) -> Dict[str, Any]:
        return {"symbol": self.symbol, "value": format_scalar(self.value), "kind": self.kind, "holds": self.holds}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Constraint":
        return cls(data["symbol"], parse_scalar(data["value"]), data.get("kind", "derived"))


@dataclass(frozen=True)
class Violation:
    """
    Polynomial witness (``monomial`` over ``vars``) of a failed radial check at
    order ``order``, or a failed constraint when ``monomial`` is None.
    """
    order: int
    monomial: Optional[Tuple[int, ...]]
    coefficient: Number
    context: str = ""
    vars: Tuple[str, ...] = DEFAULT_VARS

    def witness(self) -> str:
        if self.monomial is None:
            return self.context
        return format_monomial(self.vars, self.monomial)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "monomial": list(self.monomial) if self.monomial is not None else None,
            "witness": self.witness(),
            "coefficient": format_scalar(self.coefficient),
            "context": self.context,
            "vars": list(self.vars),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Violation":
        monomial = data.get("monomial")
        return cls(
            order=int(data["order"]),
            monomial=tuple(monomial) if monomial is not None else None,
            coefficient=parse_scalar(data["coefficient"]),
            context=data.get("context", ""),
            vars=tuple(data.get("vars", DEFAULT_VARS)),
        )


@dataclass
class CharacterizationReport:
    verdict: Verdict
    order: int
    constraints: List[Constraint] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    runs: List[Dict[str, str]] = field(default_factory=list)
    per_variable: Dict[str, List[Constraint]] = field(default_factory=dict)

    def __post_init__(self):
        self.verdict = Verdict(self.verdict)
        if (self.verdict == Verdict.CHARACTERIZED) != (not self.violations):
            raise InputError("Verdict must be Characterized exactly when there are no violations.")

    @property
    def characterized(self) -> bool:
        return self.verdict == Verdict.CHARACTERIZED

    def constraint(self, symbol: str) -> Constraint:
        for c in self.all_constraints():
            if c.symbol == symbol:
                return c
        raise KeyError(symbol)

    def all_constraints(self) -> List[Constraint]:
        found = list(self.constraints)
        for items in self.per_variable.values():
            found.extend(items)
        return found

    def failed_constraints(self) -> List[Constraint]:
        return [c for c in self.all_constraints() if not c.holds and c.kind not in INFORMATIONAL_KINDS]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "order": self.order,
            "constraints": [c.to_dict() for c in self.constraints],
            "violations": [v.to_dict() for v in self.violations],
            "notes": list(self.notes),
            "runs": [dict(r) for r in self.runs],
            "per_variable": {k: [c.to_dict() for c in v] for k, v in self.per_variable.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CharacterizationReport":
        return cls(
            verdict=Verdict(data["verdict"]),
            order=int(data["order"]),
            constraints=[Constraint.from_dict(c) for c in data.get("constraints", [])],
            violations=[Violation.from_dict(v) for v in data.get("violations", [])],
            notes=list(data.get("notes", [])),
            runs=[dict(r) for r in data.get("runs", [])],
            per_variable={k: [Constraint.from_dict(c) for c in v] for k, v in data.get("per_variable", {}).items()},
        )


@dataclass(frozen=True)
class ScenarioSpec:
    """
    Two independent sides. Each table is over (S, Y) in that label order, or over
    (S,) alone when the Y-role variable is the constant 0. No joint cumulant
    couples the sides, which is how their independence is encoded.
    """
    left: JointCumulantTable
    right: JointCumulantTable
    order: int

    def __post_init__(self):
        if self.order < 1 or self.order > MAX_ORDER:
            raise BoundedInputError(f"Scenario order must be in [1, {MAX_ORDER}], got {self.order}")
        for side, table in (("left", self.left), ("right", self.right)):
            if table.complete_order < self.order:
                raise BoundedInputError(f"{side} table only reaches order {table.complete_order} < {self.order}")
        shared = set(self.left.labels) & set(self.right.labels)
        if shared:
            raise InputError(f"Sides must use disjoint labels, both use {sorted(shared)}")


@dataclass(frozen=True)
class RadialResult:
    radial: bool
    representation: Optional[CoeffPolynomial] = None
    witness: Optional[Tuple[Tuple[int, ...], Number]] = None


def _roles(jc: JointCumulantTable) -> Tuple[str, Optional[str]]:
    if jc.dim == 1:
        return jc.labels[0], None
    if jc.dim == 2:
        return jc.labels[0], jc.labels[1]
    raise InputError(f"Label mismatch: expected a table over (S, Y), got labels {jc.labels}")


def _mixed(jc: JointCumulantTable, s: str, y: Optional[str], i: int, j: int) -> Number:
    """r(i copies of S, j copies of Y); zero when Y is the constant 0 and j > 0."""
    if y is None:
        return jc.cumulant(i, s) if j == 0 else Fraction(0)
    return jc.joint(*([s] * i + [y] * j))


def _symbol(head: str, names: Sequence[str]) -> str:
    return f"{head}({','.join(names)})"


def expand_hk_single(k: int, jc: JointCumulantTable, var: str = "a") -> CoeffPolynomial:
    """
    r_k(aS + Y) - r_k(Y) = sum_{i=1}^{k} a^i C(k, i) r(S^i, Y^(k-i)).
    The constant (i = 0) term is excluded.
    """
    if k < 1 or k > jc.complete_order:
        raise BoundedInputError(f"Order {k} outside [1, {jc.complete_order}]")
    s, y = _roles(jc)
    terms = {(i,): comb(k, i) * _mixed(jc, s, y, i, k - i) for i in range(1, k + 1)}
    return _poly(terms, (var,))


def expand_statistic(spec: ScenarioSpec, k: int, vars: Sequence[str] = DEFAULT_VARS) -> CoeffPolynomial:
    """h_k for a*S1 + Y + b*S2 + Z: the left expansion in a plus the right one in b."""
    if k < 1 or k > spec.order:
        raise BoundedInputError(f"Order {k} outside [1, {spec.order}]")
    vars = tuple(vars)
    terms: Dict[Tuple[int, int], Number] = {}
    for (i,), coeff in expand_hk_single(k, spec.left, vars[0]).as_dict().items():
        terms[(i, 0)] = from_sympy(coeff)
    for (j,), coeff in expand_hk_single(k, spec.right, vars[1]).as_dict().items():
        terms[(0, j)] = from_sympy(coeff)
    return _poly(terms, vars)


def is_radial(p: CoeffPolynomial) -> RadialResult:
    """
    Decide p = Q(a^2 + b^2). Each homogeneous component of degree 2d must be a
    multiple of (a^2 + b^2)^d and odd-degree components must vanish.

    The multiple is read off the b^(2d) coefficient, so a component that is not
    radial first disagrees on the a-side monomials, a^(2d) leading.
    """
    if len(p.gens) != 2:
        raise InputError(f"is_radial needs a polynomial in two variables, got {p.gens}")
    coeffs = p.as_dict()
    q_terms: Dict[Tuple[int], Number] = {}
    for degree in sorted({sum(m) for m in coeffs}):
        residual = {m: c for m, c in coeffs.items() if sum(m) == degree}
        if degree % 2 == 0:
            d = degree // 2
            lead = residual.get((0, degree), sympy.Integer(0))
            for j in range(d + 1):
                m = (2 * (d - j), 2 * j)
                residual[m] = residual.get(m, sympy.Integer(0)) - lead * comb(d, j)
            q_terms[(d,)] = from_sympy(lead)
        left = Poly.from_dict(residual, *p.gens, domain=p.domain)
        if not left.is_zero:
            monomial, coeff = left.terms(order="grlex")[0]
            return RadialResult(False, None, (monomial, from_sympy(coeff)))
    return RadialResult(True, _poly(q_terms, ("u",)), None)


def _require_nondegenerate(jc: JointCumulantTable, label: str):
    var = jc.cumulant(2, label)
    if var == 0:
        raise NondegeneracyError(f"nondegeneracy violated: Var({label}) = 0")
    if var < 0:
        raise InputError(f"Negative variance for {label}: {var}")


def _side_constraints(jc: JointCumulantTable, s: str, y: Optional[str], order: int) -> List[Constraint]:
    found = [Constraint(_symbol("E", [s]), jc.cumulant(1, s))]
    if y is not None:
        found.append(Constraint(_symbol("cov", [s, y]), jc.joint(s, y)))
    for k in range(3, order + 1):
        found.append(Constraint(f"r_{k}({s})", jc.cumulant(k, s)))
    return found


def characterize(spec: ScenarioSpec, context: str = "", vars: Sequence[str] = DEFAULT_VARS) -> CharacterizationReport:
    """
    Radial check of every h_k, k <= K, plus the constraint list: zero means, zero
    covariances with the Y/Z roles, vanishing cumulants of order >= 3 and a common
    variance, each read back from the input tables.
    """
    K = spec.order
    vars = tuple(vars)
    if K < 3:
        raise BoundedInputError(f"characterize needs order K >= 3, got {K}")
    s1, y = _roles(spec.left)
    s2, z = _roles(spec.right)
    _require_nondegenerate(spec.left, s1)
    _require_nondegenerate(spec.right, s2)

    violations: List[Violation] = []
    for k in range(1, K + 1):
        poly = expand_statistic(spec, k, vars)
        result = is_radial(poly)
        if result.radial:
            logger.debug(f"[{context or 'characterize'}] h_{k} = {result.representation} at u = {vars[0]}^2+{vars[1]}^2")
            continue
        monomial, coeff = result.witness
        logger.debug(f"[{context or 'characterize'}] h_{k} not radial, witness {format_monomial(vars, monomial)} ({coeff})")
        violations.append(Violation(k, monomial, coeff, context, vars))

    constraints = _side_constraints(spec.left, s1, y, K) + _side_constraints(spec.right, s2, z, K)
    var1, var2 = spec.left.cumulant(2, s1), spec.right.cumulant(2, s2)
    constraints.append(Constraint(f"Var({s1})-Var({s2})", var1 - var2))
    if y is not None or z is not None:
        for k in range(3, K + 1):
            left = _mixed(spec.left, s1, y, 2, k - 2)
            right = _mixed(spec.right, s2, z, 2, k - 2)
            name_l = [s1, s1] + [y or "0"] * (k - 2)
            name_r = [s2, s2] + [z or "0"] * (k - 2)
            constraints.append(Constraint(f"r_{k}({','.join(name_l)})-r_{k}({','.join(name_r)})", left - right, kind="coupling"))

    notes = []
    if not violations:
        notes.append(f"{s1} and {s2} are normal up to order {K} with zero mean and common variance {var1}")
    report = CharacterizationReport(
        verdict=Verdict.VIOLATED if violations else Verdict.CHARACTERIZED,
        order=K,
        constraints=constraints,
        violations=violations,
        notes=notes,
    )
    logger.info(f"characterize{f' [{context}]' if context else ''}: {report.verdict.value} at K={K} ({len(violations)} violations)")
    return report


def normalize_combination(
    coeffs: Union[Sequence, Mapping[str, object]],
    jc: JointCumulantTable,
    label: str = "S",
    keep: Optional[Sequence[str]] = None,
) -> Tuple[JointCumulantTable, Number]:
    """
    Table over S = sum c_i X_i / sqrt(sum c_i^2) followed by the ``keep`` labels
    (default: all of them); returns (table, scale) with scale = sum c_i^2.
    Entries with an even count of S only need the scale. Odd counts carry
    1/sqrt(scale), kept as an exact sympy surd when the root is irrational.
    """
    c = coefficient_vector(coeffs, jc.labels)
    if all(x == 0 for x in c):
        raise InputError("Cannot normalize an all-zero coefficient vector.")
    if label in jc.labels:
        raise InputError(f"Label '{label}' already used by the table {jc.labels}")
    scale = sum((x * x for x in c), Fraction(0))
    root = exact_sqrt(scale)
    combos: Dict[str, Any] = {label: c}
    combos.update({name: {name: 1} for name in (jc.labels if keep is None else keep)})
    if root is not None:
        combos[label] = [x / root for x in c]
        return linear_transform(jc, combos), scale

    surd = sympy.sqrt(to_sympy(scale))
    logger.debug(f"normalize_combination: carrying 1/{surd} symbolically for {label}")
    raw = linear_transform(jc, combos)
    entries = {}
    for alpha, value in raw.entries.items():
        i = alpha[0]
        value = value / scale ** (i // 2)
        if i % 2 and value != 0:
            value = float(value) / float(surd) if isinstance(value, float) else from_sympy(to_sympy(value) / surd)
        entries[alpha] = value
    return JointCumulantTable(raw.labels, raw.order, entries), scale


def _fresh_label(base: str, taken: Sequence[str]) -> str:
    label = base
    while label in taken:
        label += "'"
    return label


def _describe_combination(coeffs: Sequence[Number], names: Sequence[str]) -> str:
    used = [(c, n) for c, n in zip(coeffs, names) if c != 0]
    if len(used) == 1 and used[0][0] == 1:
        return used[0][1]
    scale = sum(c * c for c, _ in used)
    root = exact_sqrt(scale)
    body = "+".join(f"{c}*{n}" if c != 1 else n for c, n in used).replace("+-", "-")
    return f"({body})/{root if root is not None else f'sqrt({scale})'}"


def _coefficient_choices(m: int) -> List[List[Fraction]]:
    """Unit vectors plus (3, 4) on every pair; all have rational norms."""
    choices = []
    for i in range(m):
        vec = [Fraction(0)] * m
        vec[i] = Fraction(1)
        choices.append(vec)
    for i, j in combinations(range(m), 2):
        vec = [Fraction(0)] * m
        vec[i], vec[j] = Fraction(3), Fraction(4)
        choices.append(vec)
    return choices


def _normalized_side(table: JointCumulantTable, xs: Sequence[str], role: str, coeffs: Sequence[Fraction], base: str):
    name = _fresh_label(base, table.labels)
    full = dict(zip(xs, coeffs))
    normed, _ = normalize_combination(full, table, label=name, keep=[role])
    return normed


def _constraint_order(symbol: str) -> int:
    if symbol.startswith("r_"):
        return int(symbol[2:symbol.index("(")])
    return 1 if symbol.startswith("E(") else 2


def _violations_from(constraints: Sequence[Constraint]) -> List[Violation]:
    found = []
    for c in constraints:
        if c.holds or c.kind in INFORMATIONAL_KINDS:
            continue
        found.append(Violation(_constraint_order(c.symbol), None, c.value, c.symbol))
    return found


def characterize_vector(spec: ScenarioSpec, order: Optional[int] = None) -> CharacterizationReport:
    """
    Vector characterization: sides (X_1..X_m, Y) and (X_{m+1}..X_n, Z), the
    last label of each table playing the Y/Z role.

    (i) characterize on normalized combinations of each side's X's; (ii) pairwise
    runs with X_j + Y in the Y role to derive cov(X_i, X_j) = 0; (iii) every joint
    cumulant of order >= 3 among each side's X's vanishes (joint normality up to K).
    Independence then follows from joint normality and is reported as implied.
    """
    K = order or spec.order
    left, right = spec.left, spec.right
    if left.dim < 2 or right.dim < 2:
        raise InputError("Each side needs at least one X variable followed by its Y/Z role label.")
    if K < 3 or K > min(left.complete_order, right.complete_order):
        raise BoundedInputError(f"Order {K} outside [3, {min(left.complete_order, right.complete_order)}]")
    xs_left, y = list(left.labels[:-1]), left.labels[-1]
    xs_right, z = list(right.labels[:-1]), right.labels[-1]
    for table, xs in ((left, xs_left), (right, xs_right)):
        for x in xs:
            _require_nondegenerate(table, x)
    logger.info(f"characterize_vector: m={len(xs_left)}, n={len(xs_left) + len(xs_right)}, K={K}")

    runs: List[Dict[str, str]] = []
    violations: List[Violation] = []

    def run(lt: JointCumulantTable, rt: JointCumulantTable, context: str) -> CharacterizationReport:
        report = characterize(ScenarioSpec(lt, rt, K), context=context)
        runs.append({"context": context, "verdict": report.verdict.value})
        violations.extend(report.violations)
        return report

    # (i) normalized combinations, each side's choices against the other's first unit vector
    left_choices = _coefficient_choices(len(xs_left))
    right_choices = _coefficient_choices(len(xs_right))
    pairs = [(c, right_choices[0]) for c in left_choices] + [(left_choices[0], c) for c in right_choices[1:]]
    for c_left, c_right in pairs:
        lt = _normalized_side(left, xs_left, y, c_left, "S1")
        rt = _normalized_side(right, xs_right, z, c_right, "S2")
        context = f"S1={_describe_combination(c_left, xs_left)} | S2={_describe_combination(c_right, xs_right)}"
        run(lt, rt, context)

    # (ii) pairwise covariances through the Y role
    cross: List[Constraint] = []
    first_right = project(right, [xs_right[0], z])
    first_left = project(left, [xs_left[0], y])
    for table, xs, role, other, side in ((left, xs_left, y, first_right, "left"), (right, xs_right, z, first_left, "right")):
        for xi, xj in combinations(xs, 2):
            s_name = _fresh_label("S", table.labels)
            y_name = _fresh_label(f"{role}+{xj}", table.labels)
            shifted = linear_transform(table, {s_name: {xi: 1}, y_name: {xj: 1, role: 1}}, K)
            context = f"S={xi}, {role}-role={xj}+{role}"
            if side == "left":
                run(shifted, other, context)
            else:
                run(other, shifted, context)
            derived = shifted.joint(s_name, y_name) - table.joint(xi, role)
            cross.append(Constraint(_symbol("cov", [xi, xj]), derived))

    # (iii) joint normality of each side's X vector up to K
    for table, xs in ((left, xs_left), (right, xs_right)):
        sub = project(table, xs)
        for alpha in multi_indices(len(xs), K, min_order=3):
            if sum(1 for a in alpha if a) < 2:
                continue  # marginal entries are reported per variable
            names = [n for n, a in zip(xs, alpha) for _ in range(a)]
            cross.append(Constraint(f"r_{sum(alpha)}({','.join(names)})", sub[alpha], kind="joint"))

    per_variable: Dict[str, List[Constraint]] = {}
    reference = left.cumulant(2, xs_left[0])
    for table, xs, role in ((left, xs_left, y), (right, xs_right, z)):
        for x in xs:
            items = _side_constraints(table, x, role, K)
            if x != xs_left[0]:
                items.append(Constraint(f"Var({x})-Var({xs_left[0]})", table.cumulant(2, x) - reference))
            per_variable[x] = items

    report_constraints = cross
    all_constraints = cross + [c for items in per_variable.values() for c in items]
    violations.extend(_violations_from(all_constraints))
    notes = []
    if not violations:
        notes.append(
            f"{', '.join(xs_left + xs_right)} are jointly normal up to order {K}, pairwise uncorrelated, "
            f"zero mean, common variance {reference}, uncorrelated with {y} and {z}"
        )
        notes.append("independence of the X's is implied by joint normality with zero covariances (not re-derived)")
    return CharacterizationReport(
        verdict=Verdict.VIOLATED if violations else Verdict.CHARACTERIZED,
        order=K,
        constraints=report_constraints,
        violations=violations,
        notes=notes,
        runs=runs,
        per_variable=per_variable,
    )


def characterize_prop2(spec: ScenarioSpec, order: Optional[int] = None) -> CharacterizationReport:
    """
    Two statistics over (X, Y | Z, T): a*X + Y + b*Z + T and X + a*Y + Z + b*T.
    The first forces r(X^i, Y^l) = 0 for i != 2, the second for l != 2; the single
    mixed entry (2, 2) escapes both and is listed for information only.
    """
    K = order or spec.order
    if spec.left.dim != 2 or spec.right.dim != 2:
        raise InputError(f"Expected sides (X, Y) and (Z, T), got {spec.left.labels} and {spec.right.labels}")
    x, y = spec.left.labels
    z, t = spec.right.labels
    first = f"a*{x}+{y}+b*{z}+{t}"
    second = f"{x}+a*{y}+{z}+b*{t}"
    run1 = characterize(ScenarioSpec(spec.left, spec.right, K), context=first)
    run2 = characterize(ScenarioSpec(project(spec.left, [y, x]), project(spec.right, [t, z]), K), context=second)

    constraints: List[Constraint] = []
    for table, names in ((spec.left, (x, y)), (spec.right, (z, t))):
        for v in names:
            constraints.append(Constraint(_symbol("E", [v]), table.cumulant(1, v)))
            for k in range(3, K + 1):
                constraints.append(Constraint(f"r_{k}({v})", table.cumulant(k, v)))
    constraints.append(Constraint(f"Var({x})-Var({z})", spec.left.cumulant(2, x) - spec.right.cumulant(2, z)))
    constraints.append(Constraint(f"Var({y})-Var({t})", spec.left.cumulant(2, y) - spec.right.cumulant(2, t)))
    for table, (u, v) in ((spec.left, (x, y)), (spec.right, (z, t))):
        for k in range(2, K + 1):
            for i in range(1, k):
                l = k - i
                names = [u] * i + [v] * l
                kind = "unconstrained" if (i == 2 and l == 2) else "mixed"
                constraints.append(Constraint(f"r_{k}({','.join(names)})", table.joint(*names), kind=kind))

    violations = list(run1.violations) + list(run2.violations) + _violations_from(constraints)
    free = [c for c in constraints if c.kind == "unconstrained"]
    notes = []
    if not violations:
        notes.append(f"{x}, {y}, {z}, {t} are normal up to order {K} with zero means, Var({x})=Var({z}), Var({y})=Var({t})")
        if all(c.holds for c in free):
            notes.append(f"all mixed cumulants of ({x},{y}) and ({z},{t}) vanish up to order {K}: independent up to order {K}")
        else:
            nonzero = ", ".join(f"{c.symbol} = {c.value}" for c in free if not c.holds)
            notes.append(f"independence is not established: {nonzero}")
    if free:
        notes.append(f"{' and '.join(c.symbol for c in free)} are not constrained by either statistic; reported for information, not part of the verdict")
    return CharacterizationReport(
        verdict=Verdict.VIOLATED if violations else Verdict.CHARACTERIZED,
        order=K,
        constraints=constraints,
        violations=violations,
        notes=notes,
        runs=[
            {"context": first, "verdict": run1.verdict.value},
            {"context": second, "verdict": run2.verdict.value},
        ],
    )


def quadratic_reduction_check(
    a: Sequence[object],
    samples: SampleMatrix,
    split: Optional[int] = None,
    exact: bool = False,
) -> Number:
    """
    Max over rows of |sum a_i X_i + Y + Z - (sum (X_i + a_i/2)^2 - sum a_i^2 / 4)|
    with Y = sum_{i<=m} X_i^2 and Z = sum_{i>m} X_i^2. An algebraic identity: zero
    exactly under ``exact=True`` (rational evaluation of the binary floats).
    """
    n = samples.n_cols
    if len(a) != n:
        raise InputError(f"{len(a)} coefficients for {n} sample columns")
    m = split if split is not None else max(1, n // 2)
    if m < 1 or m > n:
        raise InputError(f"Split m={m} outside [1, {n}]")
    if exact:
        coeffs = [as_scalar(c) if not isinstance(c, float) else Fraction(c) for c in a]
        worst = Fraction(0)
        shift = sum((c * c for c in coeffs), Fraction(0)) / 4
        for row in samples.data:
            xs = [Fraction(float(v)) for v in row]
            y = sum((x * x for x in xs[:m]), Fraction(0))
            zz = sum((x * x for x in xs[m:]), Fraction(0))
            lhs = sum((c * x for c, x in zip(coeffs, xs)), Fraction(0)) + y + zz
            rhs = sum(((x + c / 2) ** 2 for c, x in zip(coeffs, xs)), Fraction(0)) - shift
            worst = max(worst, abs(lhs - rhs))
        return worst
    coeffs = np.array([float(as_scalar(c)) for c in a])
    X = samples.data
    y = np.sum(X[:, :m] ** 2, axis=1)
    zz = np.sum(X[:, m:] ** 2, axis=1)
    lhs = X @ coeffs + y + zz
    rhs = np.sum((X + coeffs / 2) ** 2, axis=1) - np.sum(coeffs ** 2) / 4
    return float(np.max(np.abs(lhs - rhs)))
