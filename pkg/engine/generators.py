"""
Named sampling families with exact population cumulants, and the seed
substream scheme every simulation goes through.

Substreams: ``substream(seed, *key)`` is ``default_rng(SeedSequence(seed,
spawn_key=key))``. Distinct keys give statistically independent streams, so
left/right independence and per-angle independence hold by construction.
"""
import logging
from enum import Enum
from fractions import Fraction
from math import factorial
from typing import Any, List, Optional, Tuple, Union

import numpy as np  # type: ignore
from pydantic import BaseModel, Field, field_validator, model_validator  # type: ignore

from .cumulant_core import (
    CumulantSequence,
    JointCumulantTable,
    Number,
    as_scalar,
    discrete_cumulants,
    linear_transform,
    moments_to_cumulants,
    MomentSequence,
    product_law,
    univariate_table,
)
from .errors import InputError

logger = logging.getLogger(__name__)

RawNumber = Union[int, float, str]

# spawn_key layout: (stream kind, ...)
SAMPLE_STREAM = 0
PERMUTATION_STREAM = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    if seed is None or int(seed) < 0:
        raise InputError(f"Seeds must be explicit nonnegative integers, got {seed!r}")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))


class Family(str, Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"
    EXPONENTIAL_CENTERED = "exponential_centered"
    LAPLACE = "laplace"
    RADEMACHER = "rademacher"
    DISCRETE = "discrete"


class GeneratorSpec(BaseModel):
    """
    ``loc``/``scale`` mean: normal(mean, std), uniform on [loc - scale, loc + scale],
    scale * (Exp(1) - 1), laplace(loc, scale), +-scale with probability 1/2.
    ``discrete`` uses ``atoms``/``probabilities`` and ignores loc/scale.
    """
    name: Family
    loc: RawNumber = 0
    scale: RawNumber = 1
    atoms: List[RawNumber] = Field(default_factory=list)
    probabilities: List[RawNumber] = Field(default_factory=list)
    seed: Optional[int] = None
    label: str = "X"

    @field_validator("loc", "scale")
    @classmethod
    def _rational_or_float(cls, v):
        as_scalar(v)
        return v

    @model_validator(mode="after")
    def _check_domain(self):
        if self.name == Family.DISCRETE:
            if not self.atoms or len(self.atoms) != len(self.probabilities):
                raise ValueError("discrete needs atoms and probabilities of equal length")
            probs = [as_scalar(p) for p in self.probabilities]
            if any(p < 0 for p in probs):
                raise ValueError("probabilities must be nonnegative")
            if sum(probs) != 1:
                raise ValueError(f"probabilities must sum to 1, got {sum(probs)}")
        else:
            if self.name == Family.EXPONENTIAL_CENTERED and as_scalar(self.loc) != 0:
                raise ValueError("exponential_centered has no loc parameter")
            if as_scalar(self.scale) <= 0:
                raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.seed is not None and self.seed < 0:
            raise ValueError("seed must be nonnegative")
        return self

    @property
    def loc_value(self) -> Number:
        return as_scalar(self.loc)

    @property
    def scale_value(self) -> Number:
        return as_scalar(self.scale)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 1:
            raise InputError(f"Sample size must be >= 1, got {n}")
        loc, scale = float(self.loc_value), float(self.scale_value)
        if self.name == Family.NORMAL:
            return rng.normal(loc, scale, n)
        if self.name == Family.UNIFORM:
            return rng.uniform(loc - scale, loc + scale, n)
        if self.name == Family.EXPONENTIAL_CENTERED:
            return scale * (rng.exponential(1.0, n) - 1.0)
        if self.name == Family.LAPLACE:
            return rng.laplace(loc, scale, n)
        if self.name == Family.RADEMACHER:
            return scale * (2.0 * rng.integers(0, 2, n) - 1.0)
        atoms = np.array([float(as_scalar(x)) for x in self.atoms])
        probs = np.array([float(as_scalar(p)) for p in self.probabilities])
        return rng.choice(atoms, size=n, p=probs / probs.sum())

    def population_cumulants(self, order: int) -> CumulantSequence:
        """Exact r_1..r_K of the family (floats only when a parameter is a float)."""
        loc, s = self.loc_value, self.scale_value
        zero = Fraction(0)
        if self.name == Family.NORMAL:
            values = [loc, s * s] + [zero] * (order - 2)
            return CumulantSequence(tuple(values[:order]))
        if self.name == Family.EXPONENTIAL_CENTERED:
            return CumulantSequence(tuple([zero] + [factorial(k - 1) * s ** k for k in range(2, order + 1)])[:order])
        if self.name == Family.LAPLACE:
            values = [loc]
            for k in range(2, order + 1):
                values.append(2 * factorial(k - 1) * s ** k if k % 2 == 0 else zero)
            return CumulantSequence(tuple(values))
        if self.name == Family.UNIFORM:
            hi, lo = loc + s, loc - s
            moments = [(hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * 2 * s) for k in range(1, order + 1)]
            return moments_to_cumulants(MomentSequence.of(moments))
        if self.name == Family.RADEMACHER:
            return discrete_cumulants([-s, s], [Fraction(1, 2), Fraction(1, 2)], order)
        return discrete_cumulants(self.atoms, self.probabilities, order)

    def describe(self) -> str:
        if self.name == Family.DISCRETE:
            return f"discrete({len(self.atoms)} atoms)"
        return f"{self.name.value}(loc={self.loc}, scale={self.scale})"


class SideSpec(BaseModel):
    """
    One independent side of the statistic: S, and the Y-role variable
    Y = Y0 + y_loading * S with Y0 independent of S (Y0 = 0 when ``y`` is None).
    """
    s: GeneratorSpec
    y: Optional[GeneratorSpec] = None
    y_loading: float = 0.0

    def draw(self, seed: int, key: Tuple[int, ...], n: int) -> Tuple[np.ndarray, np.ndarray]:
        s = self.s.sample(substream(seed, SAMPLE_STREAM, *key, 0), n)
        y = self.y.sample(substream(seed, SAMPLE_STREAM, *key, 1), n) if self.y is not None else np.zeros(n)
        if self.y_loading:
            y = y + self.y_loading * s
        logger.debug(f"Drew side {key}: {self.describe()}, n={n}")
        return s, y

    def population_table(self, order: int, labels: Tuple[str, str] = ("S", "Y")) -> JointCumulantTable:
        """Exact joint cumulants of (S, Y) through the linear map (S, Y0) -> (S, Y0 + lambda*S)."""
        s_table = univariate_table(self.s.population_cumulants(order), "_S")
        if self.y is not None:
            y_table = univariate_table(self.y.population_cumulants(order), "_Y0")
        else:
            y_table = JointCumulantTable(("_Y0",), order, {(k,): Fraction(0) for k in range(1, order + 1)})
        base = product_law([s_table, y_table], order)
        loading: Any = Fraction(0) if not self.y_loading else self.y_loading
        if isinstance(loading, float) and loading.is_integer():
            loading = Fraction(int(loading))
        return linear_transform(base, {labels[0]: {"_S": 1}, labels[1]: {"_Y0": 1, "_S": loading}}, order)

    def describe(self) -> str:
        y = self.y.describe() if self.y is not None else "0"
        if self.y_loading:
            y = f"{y} + {self.y_loading}*S"
        return f"S~{self.s.describe()}, Y={y}"
