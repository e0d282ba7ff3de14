"""
File formats: plain sequence files, JSON scenario files, JSON report files and
generator side specs. Every parse failure surfaces as ``ParseError`` with a line
and column when one is known.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, model_validator  # type: ignore

from . import __version__
from .cumulant_core import (
    MAX_ORDER,
    JointCumulantTable,
    Number,
    all_product_atoms,
    as_scalar,
    cumulants_of_law,
    format_scalar,
    multi_indices,
)
from .errors import BoundedInputError, InputError, ParseError
from .generators import Family, GeneratorSpec, SideSpec
from .symbolic import ScenarioSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
RawNumber = Union[int, str]


# ── Sequence files ───────────────────────────────────────────────────────────

def parse_sequence(text: str, source: Optional[str] = None) -> List[Number]:
    """Comma- or newline-separated rationals ("3/4", "-2", "0.5"); ``#`` starts a comment."""
    values: List[Number] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        column = 1
        for token in line.split(","):
            stripped = token.strip()
            offset = column + (len(token) - len(token.lstrip()))
            column += len(token) + 1
            if not stripped:
                if line.strip():
                    raise ParseError("Empty entry", line=lineno, column=offset, source=source)
                continue
            try:
                values.append(as_scalar(stripped))
            except InputError:
                raise ParseError(f"Not a rational number: '{stripped}'", line=lineno, column=offset, source=source) from None
    if not values:
        raise ParseError("Empty sequence", line=1, column=1, source=source)
    return values


def read_sequence(path: PathLike) -> List[Number]:
    with open(path, "r") as f:
        return parse_sequence(f.read(), source=str(path))


def format_sequence(values) -> str:
    return ",".join(str(format_scalar(v)) for v in values) + "\n"


def write_sequence(path: PathLike, values):
    with open(path, "w") as f:
        f.write(format_sequence(values))
    logger.info(f"Wrote {len(values)} values to {path}")


# ── Scenario files ───────────────────────────────────────────────────────────

class DiscreteMarginal(BaseModel):
    atoms: List[RawNumber]
    probabilities: List[RawNumber]


class JointAtoms(BaseModel):
    atoms: List[List[RawNumber]]
    probabilities: List[RawNumber]


class ScenarioSide(BaseModel):
    """
    One side of a scenario. Either sparse joint ``cumulants`` keyed by
    comma-separated counts ("2,0": "1"; absent entries are zero), or a finite law:
    per-label ``discrete`` marginals (independent unless ``dependence`` gives the
    explicit joint atoms).
    """
    labels: List[str]
    cumulants: Optional[Dict[str, RawNumber]] = None
    discrete: Optional[Dict[str, DiscreteMarginal]] = None
    dependence: Optional[JointAtoms] = None

    @model_validator(mode="after")
    def _one_source(self):
        has_law = self.discrete is not None or self.dependence is not None
        if (self.cumulants is not None) == has_law:
            raise ValueError("give either 'cumulants' or 'discrete'/'dependence'")
        if not self.labels or len(set(self.labels)) != len(self.labels):
            raise ValueError(f"labels must be distinct and non-empty, got {self.labels}")
        if self.discrete is not None and self.dependence is None:
            missing = [name for name in self.labels if name not in self.discrete]
            if missing:
                raise ValueError(f"no discrete marginal for {missing}")
        return self

    def to_table(self, order: int) -> JointCumulantTable:
        labels = tuple(self.labels)
        if self.cumulants is not None:
            entries: Dict = {alpha: 0 for alpha in multi_indices(len(labels), order)}
            for key, value in self.cumulants.items():
                alpha = _parse_index(key, len(labels))
                if sum(alpha) > order:
                    continue
                if sum(alpha) == 0:
                    raise InputError(f"Multi-index '{key}' has total order 0")
                entries[alpha] = _exact(value, f"cumulant {key}")
            return JointCumulantTable(labels, order, entries)
        if self.dependence is not None:
            atoms = [[_exact(x, "atom") for x in row] for row in self.dependence.atoms]
            probs = [_exact(p, "probability") for p in self.dependence.probabilities]
        else:
            marginals = [
                ([_exact(x, "atom") for x in self.discrete[name].atoms],
                 [_exact(p, "probability") for p in self.discrete[name].probabilities])
                for name in labels
            ]
            atoms, probs = all_product_atoms(marginals)
        return cumulants_of_law(atoms, probs, labels, order)


def _exact(value, what: str):
    # decimal strings parse exactly ("0.1" is 1/10)
    try:
        return as_scalar(value.strip() if isinstance(value, str) else value)
    except InputError:
        raise InputError(f"{what} '{value}' is not a rational number") from None


def _parse_index(key: str, arity: int):
    try:
        counts = tuple(int(part) for part in key.split(","))
    except ValueError:
        raise InputError(f"Multi-index key '{key}' must be comma-separated counts") from None
    if len(counts) != arity:
        raise InputError(f"Multi-index key '{key}' has {len(counts)} counts for {arity} labels")
    if any(c < 0 for c in counts):
        raise InputError(f"Negative count in multi-index key '{key}'")
    return counts


class ScenarioFile(BaseModel):
    order: int = Field(ge=1, le=MAX_ORDER)
    left: ScenarioSide
    right: ScenarioSide
    coeff_vars: List[str] = Field(default_factory=lambda: ["a", "b"])

    @model_validator(mode="after")
    def _check(self):
        if len(self.coeff_vars) != 2 or len(set(self.coeff_vars)) != 2:
            raise ValueError("coeff_vars needs two distinct names")
        shared = set(self.left.labels) & set(self.right.labels)
        if shared:
            raise ValueError(f"left and right must use disjoint labels, both use {sorted(shared)}")
        return self

    def to_spec(self, order: Optional[int] = None) -> ScenarioSpec:
        order = order or self.order
        if order > self.order:
            raise BoundedInputError(f"Requested order {order} exceeds the scenario's order {self.order}")
        return ScenarioSpec(self.left.to_table(order), self.right.to_table(order), order)


def _load_json(path: PathLike) -> Any:
    try:
        with open(path, "r") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise ParseError(f"Not a text file: {e}", source=str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, column=e.colno, source=str(path)) from e


def _validation_message(e: ValidationError) -> str:
    first = e.errors()[0]
    where = ".".join(str(p) for p in first.get("loc", ()))
    return f"{where}: {first.get('msg')}" if where else str(first.get("msg"))


def load_scenario(path: PathLike) -> ScenarioFile:
    raw = _load_json(path)
    try:
        scenario = ScenarioFile.model_validate(raw)
    except ValidationError as e:
        raise ParseError(_validation_message(e), source=str(path)) from e
    logger.info(f"Loaded scenario {path}: {scenario.left.labels} | {scenario.right.labels}, K={scenario.order}")
    return scenario


def load_raw(path: PathLike) -> Any:
    """Parsed JSON for digesting."""
    return _load_json(path)


# ── Reports ──────────────────────────────────────────────────────────────────

def canonical_digest(payload: Any) -> str:
    """SHA-256 of the sorted-key compact JSON form."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReportFile(BaseModel):
    tool: str = "normchar"
    version: str = __version__
    kind: Literal["conversion", "characterization", "invariance", "reduction"]
    input_digest: str
    report: Dict[str, Any]


def write_report(path: PathLike, report: ReportFile):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote {report.kind} report to {path}")


def read_report(path: PathLike) -> ReportFile:
    raw = _load_json(path)
    try:
        return ReportFile.model_validate(raw)
    except ValidationError as e:
        raise ParseError(_validation_message(e), source=str(path)) from e


# ── Generator side specs ─────────────────────────────────────────────────────

def load_side_spec(value: str) -> SideSpec:
    """A family name (S from that family, Y = 0) or a path to a JSON side spec."""
    if value in {f.value for f in Family} and value != Family.DISCRETE.value:
        return SideSpec(s=GeneratorSpec(name=Family(value)))
    path = Path(value)
    if not path.exists():
        raise InputError(f"'{value}' is neither a family name nor an existing side spec file")
    raw = _load_json(path)
    try:
        return SideSpec.model_validate(raw)
    except ValidationError as e:
        raise ParseError(_validation_message(e), source=str(path)) from e
