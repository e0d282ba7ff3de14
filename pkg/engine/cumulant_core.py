"""
Exact moment/cumulant algebra for random variables and random vectors.

Convention: r_2 is the variance (m_2 - m_1^2), never the standard deviation.

Univariate conversion uses the binomial recurrence
    m_n = sum_{k=1}^{n} C(n-1, k-1) r_k m_{n-k},
multivariate conversion uses Möbius inversion over set partitions. Generating
functions are never materialised. Tables hold exact ``Fraction`` values; the
estimation module feeds the same code with floats, and normalized combinations
may carry exact irrational sympy numbers such as sqrt(2)/2.
"""
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product
from math import comb, factorial, isqrt
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy  # type: ignore
from sympy import QQ, RR, Poly  # type: ignore

from .errors import BoundedInputError, InputError
from .partitions import MAX_PARTITION_SIZE, block_profiles, moebius_weight_for

logger = logging.getLogger(__name__)

Scalar = Fraction
Number = Union[Fraction, float, sympy.Expr]
MultiIndex = Tuple[int, ...]

MAX_ORDER = MAX_PARTITION_SIZE

_SURD = re.compile(r"^[0-9sqrt()*/+\- ]+$")


def to_sympy(value) -> sympy.Expr:
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        return sympy.Float(value)
    return sympy.sympify(value)


def from_sympy(value) -> Number:
    """Rationals come back as Fraction, floats as float, anything else stays symbolic."""
    value = sympy.sympify(value)
    if value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    if value.is_Float:
        return float(value)
    return value


def as_scalar(value) -> Number:
    """Coerce ints, strings and Fractions to Fraction; floats pass through."""
    if isinstance(value, float):
        return value
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sympy.Basic):
        if not (value.is_number and value.is_real):
            raise InputError(f"Not a real number: {value}")
        return from_sympy(value)
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"Not a rational number: {value!r}") from e


def format_scalar(value: Number):
    """Exact values serialise as "p/q" (or "sqrt(2)/2") strings, floats stay JSON numbers."""
    if isinstance(value, (Fraction, int, sympy.Basic)):
        return str(value)
    return float(value)


def parse_scalar(value) -> Number:
    """Inverse of ``format_scalar``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value if isinstance(value, float) else Fraction(value)
    text = str(value).strip()
    if "sqrt" in text and _SURD.match(text):
        try:
            return as_scalar(sympy.sympify(text, rational=True))
        except sympy.SympifyError as e:
            raise InputError(f"Not a real number: {text!r}") from e
    return as_scalar(text)


def exact_sqrt(value: Number) -> Optional[Number]:
    """Square root when it is rational (or the float root for floats), else None."""
    if isinstance(value, float):
        return value ** 0.5 if value >= 0 else None
    q = Fraction(value)
    if q < 0:
        return None
    num, den = isqrt(q.numerator), isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def _check_order(order: int, what: str = "order"):
    if not isinstance(order, int) or order < 1 or order > MAX_ORDER:
        raise BoundedInputError(f"{what} must be in [1, {MAX_ORDER}], got {order}.")


def multi_indices(dim: int, max_order: int, min_order: int = 1) -> List[MultiIndex]:
    """Every multi-index of ``dim`` counts with total in [min_order, max_order], graded."""
    result = []
    for total in range(min_order, max_order + 1):
        result.extend(_compositions(total, dim))
    return result


def _compositions(total: int, parts: int) -> List[MultiIndex]:
    """Weak compositions of ``total`` into ``parts`` counts, first count largest first."""
    if parts == 1:
        return [(total,)]
    result = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            result.append((first,) + rest)
    return result


def multinomial(counts: Sequence[int]) -> int:
    value = factorial(sum(counts))
    for c in counts:
        value //= factorial(c)
    return value


# ── Univariate sequences ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class MomentSequence:
    """Raw moments m_0..m_K with m_0 = 1."""
    moments: Tuple[Number, ...]

    def __post_init__(self):
        values = tuple(as_scalar(v) for v in self.moments)
        object.__setattr__(self, "moments", values)
        if len(values) < 2:
            raise InputError("A moment sequence needs at least m_0 and m_1.")
        if values[0] != 1:
            raise InputError(f"m_0 must be 1, got {values[0]}")
        _check_order(len(values) - 1)

    @classmethod
    def of(cls, values: Iterable) -> "MomentSequence":
        """Build from m_1..m_K (m_0 = 1 is implied)."""
        return cls((Fraction(1),) + tuple(values))

    @property
    def order(self) -> int:
        return len(self.moments) - 1

    def __getitem__(self, i: int) -> Number:
        return self.moments[i]

    def tail(self) -> Tuple[Number, ...]:
        """m_1..m_K"""
        return self.moments[1:]


@dataclass(frozen=True)
class CumulantSequence:
    """Cumulants r_1..r_K."""
    cumulants: Tuple[Number, ...]

    def __post_init__(self):
        values = tuple(as_scalar(v) for v in self.cumulants)
        object.__setattr__(self, "cumulants", values)
        _check_order(len(values))

    @property
    def order(self) -> int:
        return len(self.cumulants)

    def r(self, k: int) -> Number:
        """1-based access, r(1) is the mean."""
        if k < 1 or k > self.order:
            raise BoundedInputError(f"Cumulant order {k} outside [1, {self.order}]")
        return self.cumulants[k - 1]

    @property
    def mean(self) -> Number:
        return self.cumulants[0]

    @property
    def variance(self) -> Number:
        if self.order < 2:
            raise BoundedInputError("Variance needs order >= 2.")
        return self.cumulants[1]


def moments_to_cumulants(m: MomentSequence) -> CumulantSequence:
    """Invert m_n = sum_k C(n-1,k-1) r_k m_{n-k} for r_1..r_K."""
    moments = m.moments
    r: List[Number] = []
    for n in range(1, m.order + 1):
        acc = moments[n]
        for k in range(1, n):
            acc = acc - comb(n - 1, k - 1) * r[k - 1] * moments[n - k]
        r.append(acc)
    return CumulantSequence(tuple(r))


def cumulants_to_moments(r: CumulantSequence) -> MomentSequence:
    zero_like = r.cumulants[0] * 0
    moments: List[Number] = [zero_like + 1]
    for n in range(1, r.order + 1):
        acc = zero_like
        for k in range(1, n + 1):
            acc = acc + comb(n - 1, k - 1) * r.cumulants[k - 1] * moments[n - k]
        moments.append(acc)
    return MomentSequence(tuple(moments))


def gaussian_cumulants(mu, variance, order: int) -> CumulantSequence:
    """(mu, sigma^2, 0, 0, ...)"""
    _check_order(order)
    values = [as_scalar(mu), as_scalar(variance)] + [Fraction(0)] * (order - 2)
    return CumulantSequence(tuple(values[:order]))


def poisson_cumulants(lam, order: int) -> CumulantSequence:
    """Every cumulant of Poisson(lambda) equals lambda."""
    _check_order(order)
    return CumulantSequence(tuple([as_scalar(lam)] * order))


def central_moments(m: MomentSequence) -> Tuple[Number, ...]:
    """mu_0..mu_K about the mean."""
    mean = m.moments[1]
    result = []
    for n in range(m.order + 1):
        acc = m.moments[0] * 0
        for j in range(n + 1):
            acc = acc + comb(n, j) * m.moments[j] * (-mean) ** (n - j)
        result.append(acc)
    return tuple(result)


def standardized_cumulants(r: CumulantSequence) -> Tuple[float, ...]:
    """r_k / r_2^(k/2) for k = 3..K, as floats (the square root is irrational in general)."""
    var = float(r.variance)
    if var <= 0:
        raise InputError("Standardization needs positive variance.")
    return tuple(float(r.r(k)) / var ** (k / 2) for k in range(3, r.order + 1))


# ── Joint tables ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _JointTable:
    labels: Tuple[str, ...]
    order: int
    entries: Dict[MultiIndex, Number] = field(default_factory=dict)

    _min_order = 1

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise InputError("A joint table needs at least one variable.")
        if len(set(labels)) != len(labels):
            raise InputError(f"Duplicate labels: {labels}")
        _check_order(self.order)
        d = len(labels)
        cleaned: Dict[MultiIndex, Number] = {}
        for key, value in self.entries.items():
            key = tuple(int(c) for c in key)
            if len(key) != d:
                raise InputError(f"Multi-index {key} does not match {d} labels {labels}")
            if any(c < 0 for c in key):
                raise InputError(f"Negative count in multi-index {key}")
            total = sum(key)
            if total < self._min_order or total > self.order:
                raise BoundedInputError(f"Multi-index {key} has total order {total} outside [{self._min_order}, {self.order}]")
            cleaned[key] = as_scalar(value)
        object.__setattr__(self, "entries", cleaned)
        self._check_closure()

    def _check_closure(self):
        top = max((sum(k) for k in self.entries), default=0)
        for alpha in multi_indices(self.dim, top - 1, self._min_order):
            if alpha not in self.entries:
                raise InputError(f"Table is not downward closed: missing {alpha} below order {top}")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def complete_order(self) -> int:
        """Largest k such that every multi-index of total order <= k is present."""
        top = 0
        for k in range(self._min_order, self.order + 1):
            if all(a in self.entries for a in _compositions(k, self.dim)):
                top = k
            else:
                break
        return top

    def __getitem__(self, alpha: Sequence[int]) -> Number:
        key = tuple(alpha)
        try:
            return self.entries[key]
        except KeyError:
            raise BoundedInputError(f"No entry for multi-index {key} in table over {self.labels}") from None

    def index_of(self, *labels: str) -> MultiIndex:
        """Multi-index counting each label occurrence, e.g. ("S", "S", "Y") -> (2, 1)."""
        counts = [0] * self.dim
        for name in labels:
            if name not in self.labels:
                raise InputError(f"Unknown label '{name}' (have {self.labels})")
            counts[self.labels.index(name)] += 1
        return tuple(counts)

    def joint(self, *labels: str) -> Number:
        """Entry addressed by labels: ``table.joint("S", "Y")`` is cov(S, Y) for cumulants."""
        return self[self.index_of(*labels)]

    def is_exact(self) -> bool:
        return not any(isinstance(v, float) for v in self.entries.values())


@dataclass(frozen=True)
class JointCumulantTable(_JointTable):
    """Joint cumulants r(X_1^{i_1}, ..., X_d^{i_d}) indexed by counts per variable."""

    def cumulant(self, k: int, label: str) -> Number:
        return self.joint(*([label] * k))

    def marginal(self, label: str) -> CumulantSequence:
        order = self.complete_order
        return CumulantSequence(tuple(self.cumulant(k, label) for k in range(1, order + 1)))


@dataclass(frozen=True)
class JointMomentTable(_JointTable):
    """Raw mixed moments E[prod X_j^{i_j}]; the order-0 entry is 1."""
    _min_order = 0

    def __post_init__(self):
        entries = dict(self.entries)
        zero = tuple([0] * len(tuple(self.labels)))
        entries.setdefault(zero, Fraction(1))
        object.__setattr__(self, "entries", entries)
        super().__post_init__()
        if self.entries[zero] != 1:
            raise InputError(f"Order-0 moment must be 1, got {self.entries[zero]}")


def univariate_table(r: CumulantSequence, label: str = "X") -> JointCumulantTable:
    return JointCumulantTable((label,), r.order, {(k,): r.r(k) for k in range(1, r.order + 1)})


def _convert(source: _JointTable, target_cls, with_weights: bool):
    order = source.complete_order
    if order > MAX_ORDER:
        raise BoundedInputError(f"Total order {order} exceeds partition cap {MAX_ORDER}")
    top = max((sum(alpha) for alpha in source.entries), default=0)
    if top > order:
        raise InputError(
            f"Order {top} of the table over {source.labels} is only partly filled; "
            f"give every multi-index of total order {top} or drop that order"
        )
    entries: Dict[MultiIndex, Number] = {}
    for alpha in multi_indices(source.dim, order):
        acc = None
        for vectors, blocks, mult in block_profiles(alpha):
            weight = mult * moebius_weight_for(blocks) if with_weights else mult
            term = reduce(lambda x, y: x * y, (source.entries[v] for v in vectors))
            acc = weight * term if acc is None else acc + weight * term
        entries[alpha] = acc
    return target_cls(source.labels, max(order, 1), entries)


def joint_moments_to_joint_cumulants(jm: JointMomentTable) -> JointCumulantTable:
    """r(alpha) = sum_pi mu(pi) prod_B m(B) over partitions of the slot multiset."""
    logger.debug(f"Converting joint moments over {jm.labels} to cumulants (order {jm.complete_order})")
    return _convert(jm, JointCumulantTable, with_weights=True)


def joint_cumulants_to_joint_moments(jc: JointCumulantTable) -> JointMomentTable:
    """m(alpha) = sum_pi prod_B r(B)."""
    logger.debug(f"Converting joint cumulants over {jc.labels} to moments (order {jc.complete_order})")
    return _convert(jc, JointMomentTable, with_weights=False)


def coefficient_vector(coeffs: Union[Sequence, Mapping[str, object]], labels: Tuple[str, ...]) -> List[Number]:
    if isinstance(coeffs, Mapping):
        unknown = [k for k in coeffs if k not in labels]
        if unknown:
            raise InputError(f"Coefficients for unknown labels {unknown} (have {labels})")
        return [as_scalar(coeffs.get(name, 0)) for name in labels]
    values = [as_scalar(c) for c in coeffs]
    if len(values) != len(labels):
        raise InputError(f"Expected {len(labels)} coefficients for {labels}, got {len(values)}")
    return values


def cumulant_of_combination(coeffs: Union[Sequence, Mapping[str, object]], jc: JointCumulantTable, k: int) -> Number:
    """r_k(sum_j c_j X_j) = sum_{|alpha|=k} multinomial(k; alpha) c^alpha r(alpha)."""
    if k < 1 or k > jc.order:
        raise BoundedInputError(f"Order {k} exceeds table order {jc.order}")
    c = coefficient_vector(coeffs, jc.labels)
    total: Number = Fraction(0)
    for alpha in _compositions(k, jc.dim):
        weight = 1
        for cj, aj in zip(c, alpha):
            if aj:
                weight = weight * cj ** aj
        if weight == 0:
            continue
        total = total + multinomial(alpha) * weight * jc[alpha]
    return total


def poly_domain(values: Iterable[Number]):
    """QQ for exact rationals, RR once a float is present, sympy's EX for surds."""
    values = [from_sympy(v) if isinstance(v, sympy.Basic) else v for v in values]
    if all(isinstance(v, (Fraction, int)) for v in values):
        return QQ
    if any(isinstance(v, float) for v in values):
        return RR
    return sympy.EX


def linear_transform(
    jc: JointCumulantTable,
    combos: Mapping[str, Union[Sequence, Mapping[str, object]]],
    order: Optional[int] = None,
) -> JointCumulantTable:
    """
    Joint cumulants of new variables V_v = sum_j c_{vj} X_j.

    By multilinearity r(V_1^{b_1}, ..., V_q^{b_q}) is the sum over monomials x^alpha
    of prod_v L_v^{b_v} (L_v the linear form of V_v) of coefficient * r(alpha).
    """
    order = order or jc.complete_order
    if order > jc.complete_order:
        raise BoundedInputError(f"Requested order {order} exceeds table order {jc.complete_order}")
    new_labels = tuple(combos)
    gens = [sympy.Symbol(name) for name in jc.labels]
    vectors = [coefficient_vector(combos[v], jc.labels) for v in new_labels]
    domain = poly_domain(c for vec in vectors for c in vec)
    forms = [
        Poly.from_dict({tuple(int(i == j) for i in range(jc.dim)): to_sympy(c) for j, c in enumerate(vec)}, *gens, domain=domain)
        for vec in vectors
    ]
    powers: Dict[Tuple[int, int], Poly] = {}

    def power(v: int, e: int) -> Poly:
        if (v, e) not in powers:
            powers[(v, e)] = forms[v] ** e
        return powers[(v, e)]

    entries: Dict[MultiIndex, Number] = {}
    for beta in multi_indices(len(new_labels), order):
        poly = Poly(1, *gens, domain=domain)
        for v, e in enumerate(beta):
            if e:
                poly = poly * power(v, e)
        acc: Number = Fraction(0)
        for alpha, coeff in poly.as_dict().items():
            acc = acc + from_sympy(coeff) * jc[alpha]
        entries[beta] = acc
    return JointCumulantTable(new_labels, order, entries)


def project(jc: JointCumulantTable, labels: Sequence[str]) -> JointCumulantTable:
    """Sub-vector (possibly reordered) of a joint table."""
    labels = tuple(labels)
    positions = []
    for name in labels:
        if name not in jc.labels:
            raise InputError(f"Unknown label '{name}' (have {jc.labels})")
        positions.append(jc.labels.index(name))
    entries = {}
    for beta in multi_indices(len(labels), jc.complete_order):
        alpha = [0] * jc.dim
        for p, b in zip(positions, beta):
            alpha[p] = b
        entries[beta] = jc[tuple(alpha)]
    return JointCumulantTable(labels, jc.complete_order, entries)


def product_law(tables: Sequence[JointCumulantTable], order: Optional[int] = None) -> JointCumulantTable:
    """
    Joint table of independent blocks: entries supported inside one block copy that
    block's value, every mixed entry is zero.
    """
    if not tables:
        raise InputError("product_law needs at least one table.")
    order = order or min(t.complete_order for t in tables)
    labels: Tuple[str, ...] = ()
    offsets = []
    for t in tables:
        offsets.append(len(labels))
        labels += t.labels
    entries: Dict[MultiIndex, Number] = {}
    for alpha in multi_indices(len(labels), order):
        value: Number = Fraction(0)
        for t, start in zip(tables, offsets):
            inside = alpha[start:start + t.dim]
            if sum(inside) == sum(alpha):
                value = t[inside]
                break
        entries[alpha] = value
    return JointCumulantTable(labels, order, entries)


def discrete_joint_moments(
    atoms: Sequence[Sequence[object]],
    probabilities: Sequence[object],
    labels: Sequence[str],
    order: int,
) -> JointMomentTable:
    """Exact mixed moments of a finite joint law given as atoms (rows) with probabilities."""
    _check_order(order)
    labels = tuple(labels)
    probs = [as_scalar(p) for p in probabilities]
    rows = [tuple(as_scalar(x) for x in row) for row in atoms]
    if len(rows) != len(probs):
        raise InputError(f"{len(rows)} atoms but {len(probs)} probabilities")
    if any(len(row) != len(labels) for row in rows):
        raise InputError(f"Every atom needs {len(labels)} coordinates for {labels}")
    if any(p < 0 for p in probs) or sum(probs) != 1:
        raise InputError(f"Probabilities must be nonnegative and sum to 1, got sum {sum(probs)}")
    entries: Dict[MultiIndex, Number] = {}
    for alpha in multi_indices(len(labels), order, min_order=0):
        acc: Number = Fraction(0)
        for row, p in zip(rows, probs):
            term = p
            for x, a in zip(row, alpha):
                if a:
                    term = term * x ** a
            acc = acc + term
        entries[alpha] = acc
    return JointMomentTable(labels, order, entries)


def discrete_cumulants(atoms: Sequence[object], probabilities: Sequence[object], order: int) -> CumulantSequence:
    """Cumulants of a univariate finite law."""
    table = discrete_joint_moments([[x] for x in atoms], probabilities, ("X",), order)
    return moments_to_cumulants(MomentSequence(tuple(table[(k,)] for k in range(order + 1))))


def independence_violations(
    jc: JointCumulantTable,
    grouping: Sequence[Sequence[str]],
    order: Optional[int] = None,
    tolerance: float = 0.0,
) -> List[Tuple[MultiIndex, Number]]:
    """
    Nonzero entries whose support touches two or more groups. An empty result
    certifies independence of the groups up to ``order``.
    """
    order = order or jc.complete_order
    group_of: Dict[int, int] = {}
    for g, names in enumerate(grouping):
        for name in names:
            if name not in jc.labels:
                raise InputError(f"Unknown label '{name}' in grouping (have {jc.labels})")
            if jc.labels.index(name) in group_of:
                raise InputError(f"Label '{name}' appears in two groups")
            group_of[jc.labels.index(name)] = g
    if len(group_of) != jc.dim:
        missing = [jc.labels[i] for i in range(jc.dim) if i not in group_of]
        raise InputError(f"Grouping does not cover labels {missing}")
    found = []
    for alpha in multi_indices(jc.dim, min(order, jc.complete_order), min_order=2):
        touched = {group_of[i] for i, c in enumerate(alpha) if c}
        if len(touched) < 2:
            continue
        value = jc[alpha]
        if abs(value) > tolerance:
            found.append((alpha, value))
    return found


def cumulants_of_law(atoms, probabilities, labels, order: int) -> JointCumulantTable:
    """Shortcut: exact joint cumulants of a finite joint law."""
    return joint_moments_to_joint_cumulants(discrete_joint_moments(atoms, probabilities, labels, order))


def exact_combination_cumulants(
    coeffs: Sequence[object],
    atoms: Sequence[Sequence[object]],
    probabilities: Sequence[object],
    order: int,
) -> CumulantSequence:
    """Cumulants of sum_j c_j X_j computed directly from the law of the combination."""
    c = [as_scalar(x) for x in coeffs]
    values = [sum((cj * as_scalar(x) for cj, x in zip(c, row)), Fraction(0)) for row in atoms]
    return discrete_cumulants(values, probabilities, order)


def all_product_atoms(marginals: Sequence[Tuple[Sequence[object], Sequence[object]]]):
    """Atoms/probabilities of the product law of independent finite marginals."""
    atoms, probs = [], []
    for combo in product(*[list(zip(a, p)) for a, p in marginals]):
        atoms.append([x for x, _ in combo])
        prob = Fraction(1)
        for _, p in combo:
            prob *= as_scalar(p)
        probs.append(prob)
    return atoms, probs
