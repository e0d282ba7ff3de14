"""
Empirical side: seeded sampling, plug-in joint-cumulant estimates and the
Monte-Carlo check that the law of a*S1 + Y + b*S2 + Z is constant on circles.

Plug-in estimates substitute empirical mixed moments into the moment-to-cumulant
inversion, so they carry O(1/n) bias. Univariate k-statistics (unbiased, orders
1-4) back the normality diagnostics.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from math import floor, sqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np  # type: ignore
from pydantic import BaseModel, Field, field_validator  # type: ignore
from scipy import stats  # type: ignore

from .cumulant_core import (
    JointCumulantTable,
    JointMomentTable,
    joint_moments_to_joint_cumulants,
    multi_indices,
)
from .errors import BoundedInputError, InputError, InsufficientSampleError
from .generators import PERMUTATION_STREAM, GeneratorSpec, SideSpec, substream
from .samples import SampleMatrix

logger = logging.getLogger(__name__)

MAX_EMPIRICAL_ORDER = 6
MIN_ANGLES = 3
MIN_SIMULATION_SIZE = 1000


def generate(spec: GeneratorSpec, n: int, seed: Optional[int] = None) -> SampleMatrix:
    """One labelled column of n draws; ``seed`` overrides ``spec.seed``."""
    seed = spec.seed if seed is None else seed
    if seed is None:
        raise InputError(f"No seed for generator {spec.describe()}: seeds must be explicit")
    if n < 1:
        raise InsufficientSampleError(f"A sample column needs at least 1 draw, got {n}")
    return SampleMatrix(spec.sample(substream(seed), n), (spec.label,))


def empirical_joint_moments(samples: SampleMatrix, order: int) -> JointMomentTable:
    """Raw empirical mixed moments mean(prod_j x_j^{a_j}) for every |a| <= order."""
    powers = [[np.ones(samples.n_rows)] for _ in range(samples.n_cols)]
    for j in range(samples.n_cols):
        col = samples.data[:, j]
        for _ in range(order):
            powers[j].append(powers[j][-1] * col)
    entries = {}
    for alpha in multi_indices(samples.n_cols, order, min_order=0):
        prod = np.ones(samples.n_rows)
        for j, a in enumerate(alpha):
            if a:
                prod = prod * powers[j][a]
        entries[alpha] = float(np.mean(prod))
    return JointMomentTable(samples.labels, order, entries)


def empirical_joint_cumulants(samples: SampleMatrix, order: int) -> JointCumulantTable:
    """
    Plug-in joint cumulants up to ``order`` (<= 6). Columns are centred first and
    the means restored on the first-order entries; cumulants of order >= 2 do not
    see the shift, and the centred moments are far better conditioned.
    """
    if order < 1 or order > MAX_EMPIRICAL_ORDER:
        raise BoundedInputError(f"Empirical cumulant order must be in [1, {MAX_EMPIRICAL_ORDER}], got {order}")
    if samples.n_rows < 10 * samples.n_cols:
        raise InsufficientSampleError(f"Need n >= 10*d = {10 * samples.n_cols} rows, got {samples.n_rows}")
    means = samples.data.mean(axis=0)
    centred = SampleMatrix(samples.data - means, samples.labels)
    table = joint_moments_to_joint_cumulants(empirical_joint_moments(centred, order))
    entries = dict(table.entries)
    for j in range(samples.n_cols):
        unit = tuple(1 if i == j else 0 for i in range(samples.n_cols))
        entries[unit] = float(means[j])
    logger.debug(f"Empirical cumulants over {samples.labels}, n={samples.n_rows}, K={order}")
    return JointCumulantTable(samples.labels, order, entries)


def k_statistics(values: np.ndarray, order: int = 4) -> Tuple[float, ...]:
    """Unbiased k_1..k_order (order <= 4)."""
    if order < 1 or order > 4:
        raise BoundedInputError(f"k-statistics are available for orders 1-4, got {order}")
    values = np.asarray(values, dtype=np.float64)
    if values.size < order + 1:
        raise InsufficientSampleError(f"k_{order} needs more than {order} observations")
    return tuple(float(stats.kstat(values, n=k)) for k in range(1, order + 1))


class NormalityDiagnostic(BaseModel):
    label: str
    n: int
    skewness: float
    skewness_se: float
    excess_kurtosis: float
    kurtosis_se: float

    @property
    def skewness_z(self) -> float:
        return self.skewness / self.skewness_se

    @property
    def kurtosis_z(self) -> float:
        return self.excess_kurtosis / self.kurtosis_se


def normality_diagnostic(values: np.ndarray, label: str) -> NormalityDiagnostic:
    """Standardized k3, k4 with their usual finite-sample standard errors."""
    n = len(values)
    if n < 4:
        raise InsufficientSampleError(f"Diagnostics need at least 4 observations, got {n}")
    _, k2, k3, k4 = k_statistics(values, 4)
    if k2 <= 0:
        raise InputError(f"Column {label} has no spread")
    ses = sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3)))
    sek = 2.0 * ses * sqrt((n * n - 1.0) / ((n - 3) * (n + 5)))
    return NormalityDiagnostic(
        label=label,
        n=n,
        skewness=k3 / k2 ** 1.5,
        skewness_se=ses,
        excess_kurtosis=k4 / k2 ** 2,
        kurtosis_se=sek,
    )


def simulate_statistic(
    left: SideSpec,
    right: SideSpec,
    a: float,
    b: float,
    n: int,
    seed: int,
    key: Tuple[int, ...] = (),
) -> SampleMatrix:
    """n draws of T = a*S1 + Y + b*S2 + Z; the sides use disjoint substreams."""
    if n < 1:
        raise InsufficientSampleError(f"Need at least 1 draw, got {n}")
    s1, y = left.draw(seed, key + (0,), n)
    s2, z = right.draw(seed, key + (1,), n)
    return SampleMatrix(a * s1 + y + b * s2 + z, ("T",))


def two_sample_ks(
    x: np.ndarray,
    y: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    permutations: int = 999,
    asymptotic_min_n: int = 10_000,
) -> Tuple[float, float, str]:
    """
    (statistic, p-value, method). Asymptotic Kolmogorov distribution once both
    samples reach ``asymptotic_min_n``; otherwise a permutation p-value
    (1 + #{D_perm >= D_obs}) / (1 + B).
    """
    if min(len(x), len(y)) >= asymptotic_min_n:
        result = stats.ks_2samp(x, y, method="asymp")
        return float(result.statistic), float(min(1.0, max(0.0, result.pvalue))), "asymptotic"
    if rng is None:
        raise InputError("The permutation test needs a seeded generator")

    def ks_statistic(u, v):
        return stats.ks_2samp(u, v, method="asymp").statistic

    result = stats.permutation_test(
        (x, y),
        ks_statistic,
        permutation_type="independent",
        vectorized=False,
        n_resamples=permutations,
        alternative="greater",
        random_state=rng,
    )
    return float(result.statistic), float(min(1.0, result.pvalue)), "permutation"


def rejection_limit(alpha: float, pairs: int) -> int:
    """Largest H0-compatible rejection count: floor(alpha*P + 3*sqrt(alpha*(1-alpha)*P))."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    return int(floor(alpha * pairs + 3.0 * sqrt(alpha * (1 - alpha) * pairs)))


class PairResult(BaseModel):
    i: int
    j: int
    theta_i: float
    theta_j: float
    statistic: float = Field(ge=0, le=1)
    p_value: float = Field(ge=0, le=1)
    rejected: bool


class InvarianceTestReport(BaseModel):
    radius: float
    angles: List[float]
    n: int
    seed: int
    alpha: float
    method: str
    left: str
    right: str
    pairs: List[PairResult]
    rejections: int
    rejection_limit: int
    diagnostics: List[NormalityDiagnostic] = Field(default_factory=list)

    @field_validator("angles")
    @classmethod
    def _grid(cls, v: List[float]) -> List[float]:
        if len(v) < MIN_ANGLES:
            raise ValueError(f"angle grid needs at least {MIN_ANGLES} angles")
        return v

    @property
    def within_band(self) -> bool:
        return self.rejections <= self.rejection_limit

    @property
    def min_p_value(self) -> float:
        return min(p.p_value for p in self.pairs)

    def pair(self, theta_i: float, theta_j: float, tol: float = 1e-12) -> PairResult:
        for p in self.pairs:
            if abs(p.theta_i - theta_i) < tol and abs(p.theta_j - theta_j) < tol:
                return p
        raise KeyError((theta_i, theta_j))

    def to_dict(self) -> Dict:
        return self.model_dump(mode="json")

    @classmethod
    def from_dict(cls, data: Dict) -> "InvarianceTestReport":
        return cls.model_validate(data)


def invariance_test(
    left: SideSpec,
    right: SideSpec,
    radius: float,
    angles: Sequence[float],
    n: int,
    seed: int,
    alpha: float = 0.05,
    permutations: int = 999,
    asymptotic_min_n: int = 10_000,
    workers: int = 1,
) -> InvarianceTestReport:
    """
    Simulate T at (a, b) = (radius*cos t, radius*sin t) for every angle t (radians)
    and compare every pair of angles with a two-sample KS test. Each angle and
    each pair owns its substream, so the report does not depend on ``workers``.
    """
    angles = [float(t) for t in angles]
    if len(angles) < MIN_ANGLES:
        raise InputError(f"Invalid grid: need at least {MIN_ANGLES} angles, got {len(angles)}")
    if len(set(angles)) != len(angles):
        raise InputError("Invalid grid: repeated angles")
    if n < MIN_SIMULATION_SIZE:
        raise InputError(f"Invariance test needs n >= {MIN_SIMULATION_SIZE}, got {n}")
    if radius <= 0:
        raise InputError(f"radius must be > 0, got {radius}")
    logger.info(f"Invariance test: {len(angles)} angles, n={n}, radius={radius}, seed={seed}, workers={workers}")

    def simulate(index: int) -> np.ndarray:
        t = angles[index]
        return simulate_statistic(left, right, radius * np.cos(t), radius * np.sin(t), n, seed, key=(index,)).column("T")

    def compare(pair: Tuple[int, int]) -> PairResult:
        i, j = pair
        rng = substream(seed, PERMUTATION_STREAM, i, j)
        statistic, p, method = two_sample_ks(samples[i], samples[j], rng, permutations, asymptotic_min_n)
        methods.add(method)
        return PairResult(i=i, j=j, theta_i=angles[i], theta_j=angles[j], statistic=statistic, p_value=p, rejected=p < alpha)

    methods: set = set()
    index_pairs = list(combinations(range(len(angles)), 2))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(simulate, range(len(angles))))
            pair_results = list(pool.map(compare, index_pairs))
    else:
        samples = [simulate(i) for i in range(len(angles))]
        pair_results = [compare(p) for p in index_pairs]

    diagnostics = []
    s1, _ = left.draw(seed, (0, 0), n)
    s2, _ = right.draw(seed, (0, 1), n)
    for values, label in ((s1, "S1"), (s2, "S2")):
        try:
            diagnostics.append(normality_diagnostic(values, label))
        except InputError as e:
            logger.warning(f"Skipping diagnostics for {label}: {e}")

    rejections = sum(1 for p in pair_results if p.rejected)
    limit = rejection_limit(alpha, len(pair_results))
    if rejections > limit:
        logger.info(f"Invariance rejected: {rejections} of {len(pair_results)} pairs (limit {limit})")
    return InvarianceTestReport(
        radius=radius,
        angles=angles,
        n=n,
        seed=seed,
        alpha=alpha,
        method="/".join(sorted(methods)),
        left=left.describe(),
        right=right.describe(),
        pairs=pair_results,
        rejections=rejections,
        rejection_limit=limit,
        diagnostics=diagnostics,
    )
