"""
Distances between laws and log-log rate fitting

Kolmogorov distances are evaluated exactly wherever one side is a lattice law:
the supremum of a CDF gap is attained at a breakpoint of one of the two CDFs,
either at the point or as a left limit.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple
from warnings import warn

import numpy as np
from monty.json import MSONable
from scipy.optimize import minimize_scalar

from cwlab.common.exceptions import ConfigError, DomainError
from cwlab.tools.exact import (
    MagnetisationPMF,
    exact_cdf,
    exact_cdf_left,
    spin_to_count,
)
from cwlab.tools.limits import LimitKind, LimitLaw
from cwlab.tools.measures import DeFinettiMeasure, ModelParams
from cwlab.tools.samplers import surrogate_cdf, surrogate_interval_mass

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 0.05
SURROGATE_GRID = 801
MIN_FIT_DECADES = 2.0
TEST_FREQUENCIES = (0.25, 0.5, 1.0, 2.0, 4.0)
TEST_CENTRES = 17

Evaluator = Callable[[Callable[[np.ndarray], np.ndarray]], float]


@dataclass(frozen=True)
class TanhTestFunction:
    """h(x) = tanh(omega (x - centre)) with sup-norm 1 and derivative sup-norm omega"""

    omega: float
    centre: float

    def __call__(self, x):
        return np.tanh(self.omega * (np.asarray(x, dtype=float) - self.centre))

    @property
    def sup_norm(self) -> float:
        return 1.0

    @property
    def derivative_norm(self) -> float:
        return abs(self.omega)


def default_test_family(scale: float) -> List[TanhTestFunction]:
    """tanh test functions, centres on a 17-point grid over +/- 4 scale"""
    centres = np.linspace(-4.0 * scale, 4.0 * scale, TEST_CENTRES)
    return [TanhTestFunction(omega, float(c)) for omega in TEST_FREQUENCIES for c in centres]


def kolmogorov_exact(pmf: MagnetisationPMF, limit: LimitLaw, rescale: float) -> float:
    """
    sup_y |P(S / rescale <= y) - P(Y <= y)|

    Candidate points are the pmf atoms and, for the two-point limit, its atoms;
    both CDFs are compared at each candidate and at its left limit.
    """
    if not rescale > 0:
        raise ConfigError(f"rescale must be positive, got {rescale}")
    points = pmf.scaled_support(rescale)
    if not limit.is_continuous:
        points = np.union1d(points, limit.atoms)
    at_point = np.abs(exact_cdf(pmf, points, rescale) - limit.cdf(points))
    left = np.abs(exact_cdf_left(pmf, points, rescale) - limit.cdf_left(points))
    return float(max(at_point.max(), left.max()))


def kolmogorov_empirical(samples: Sequence[float], limit_cdf: Callable) -> float:
    """One-sample KS statistic of the samples against a continuous CDF"""
    x = np.sort(np.asarray(samples, dtype=float))
    size = len(x)
    if size < 1:
        raise ConfigError("At least one sample is needed")
    cdf = np.asarray(limit_cdf(x), dtype=float)
    index = np.arange(1, size + 1)
    return float(max(np.max(index / size - cdf), np.max(cdf - (index - 1) / size)))


def _check_two_point(limit: LimitLaw, window: float) -> float:
    if limit.kind is not LimitKind.TWO_POINT:
        raise ConfigError(f"A windowed distance needs the two-point limit, got {limit.kind.value}")
    if not window > 0:
        raise ConfigError(f"window must be positive, got {window}")
    return float(limit.atoms[1])


def kolmogorov_two_point_windowed(pmf: MagnetisationPMF, limit: LimitLaw, rescale: float, window: float = DEFAULT_WINDOW) -> float:
    """
    Kolmogorov distance to the two-point law away from its atoms

    The supremum runs over y at distance at least ``window`` from +/- m. For a
    symmetric pmf it is the largest of P(Y <= -m - w), P(Y > m + w) and
    P(|Y| <= m - w) / 2, each computed as a direct sum.
    """
    m = _check_two_point(limit, window)
    y = pmf.scaled_support(rescale)
    probs = pmf.probs
    left = math.fsum(probs[y <= -m - window])
    right = math.fsum(probs[y > m + window])
    centre = 0.0
    if m - window > 0:
        centre = 0.5 * math.fsum(probs[np.abs(y) <= m - window])
    return max(left, right, centre)


def _grid_refined_sup(gap: Callable[[float], float], grid: np.ndarray) -> float:
    """Maximise a gap function on a grid, then refine around the best cells"""
    values = np.asarray(gap(grid))
    best = float(np.max(values))
    for idx in np.argsort(values)[::-1][:3]:
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, len(grid) - 1)]
        if hi <= lo:
            continue
        result = minimize_scalar(lambda y: -float(gap(y)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        best = max(best, -float(result.fun))
    return best


def kolmogorov_surrogate(
    params: ModelParams,
    mix: DeFinettiMeasure,
    limit: LimitLaw,
    rescale: float,
    window: Optional[float] = None,
) -> float:
    """
    Kolmogorov distance between the surrogate M_hat / rescale and a limit law

    The surrogate CDF is computed by quadrature. With a two-point limit and a
    window the distance is taken away from the atoms, as in
    `kolmogorov_two_point_windowed`.
    """
    if limit.kind is LimitKind.TWO_POINT and window is not None:
        m = _check_two_point(limit, window)
        left = float(surrogate_cdf(params, mix, -m - window, rescale))
        # Symmetric law: P(Y > m + w) = P(Y < -m - w)
        centre = 0.0
        if m - window > 0:
            centre = 0.5 * surrogate_interval_mass(params, mix, -(m - window), m - window, rescale)
        return max(left, centre)

    sigma = limit.std()
    grid = np.linspace(-6 * sigma, 6 * sigma, SURROGATE_GRID)
    if not limit.is_continuous:
        grid = np.union1d(grid, limit.atoms)

    def gap(y):
        return np.abs(surrogate_cdf(params, mix, y, rescale) - limit.cdf(y))

    best = _grid_refined_sup(gap, grid)
    if not limit.is_continuous:
        atoms = limit.atoms
        left_gap = np.abs(surrogate_cdf(params, mix, atoms, rescale) - limit.cdf_left(atoms))
        best = max(best, float(left_gap.max()))
    return best


def pmf_evaluator(pmf: MagnetisationPMF, rescale: float) -> Evaluator:
    """h -> E[h(S / rescale)] as a lattice sum"""
    points = pmf.scaled_support(rescale)
    probs = pmf.probs

    def evaluate(h):
        return float(np.dot(probs, h(points)))

    return evaluate


def limit_evaluator(limit: LimitLaw) -> Evaluator:
    """h -> E[h(Y)] by quadrature"""
    return limit.expect


def smooth_distance(eval_a: Evaluator, eval_b: Evaluator, family: Sequence[TanhTestFunction]) -> float:
    """
    max over the family of |E_A h - E_B h| / (|h|_inf + |h'|_inf)

    A lower bound on the smooth distance over all bounded C^1 test functions.
    """
    if len(family) == 0:
        raise ConfigError("The test family is empty")
    best = 0.0
    for h in family:
        gap = abs(eval_a(h) - eval_b(h)) / (h.sup_norm + h.derivative_norm)
        best = max(best, gap)
    return best


def total_variation(pmf_a: MagnetisationPMF, pmf_b: MagnetisationPMF) -> float:
    """Total variation distance of two laws on the same lattice"""
    if pmf_a.n != pmf_b.n:
        raise ConfigError(f"Lattices differ: n={pmf_a.n} and n={pmf_b.n}")
    return 0.5 * math.fsum(np.abs(pmf_a.probs - pmf_b.probs))


def empirical_total_variation(samples, pmf: MagnetisationPMF) -> float:
    """Total variation between the empirical law of spin sums and a pmf"""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise ConfigError("No samples to compare")
    n = pmf.n
    if np.any(np.abs(samples) > n) or np.any((samples + n) % 2):
        raise DomainError(f"Samples are not on the spin-sum lattice of n={n}")
    counts = np.bincount(spin_to_count(samples, n), minlength=n + 1)
    return 0.5 * math.fsum(np.abs(counts / samples.size - pmf.probs))


@dataclass
class RateFit(MSONable):
    """
    Least-squares fit of log(distance) against log(n)

    Attributes:
        points: The (n, distance) pairs, n strictly increasing.
        slope: Fitted exponent.
        intercept: Fitted log-prefactor.
        max_abs_residual: Largest residual in log-log space.
        residuals: All residuals in log-log space.
    """

    points: List[Tuple[int, float]]
    slope: float
    intercept: float
    max_abs_residual: float
    residuals: List[float] = field(default_factory=list)

    def predict(self, n) -> np.ndarray:
        return np.exp(self.intercept + self.slope * np.log(n))


def fit_rate(points: Sequence[Tuple[int, float]]) -> RateFit:
    """
    Fit distance ~ exp(intercept) n^slope by ordinary least squares in log-log

    Raises:
        ConfigError: fewer than three points or n not strictly increasing.
        DomainError: a nonpositive distance.
    """
    points = [(int(n), float(d)) for n, d in points]
    if len(points) < 3:
        raise ConfigError(f"At least three points are needed for a rate fit, got {len(points)}")
    ns = np.array([p[0] for p in points], dtype=float)
    ds = np.array([p[1] for p in points])
    if np.any(np.diff(ns) <= 0):
        raise ConfigError("n must be strictly increasing")
    if np.any(ns <= 0):
        raise DomainError("n must be positive")
    if np.any(~(ds > 0)):
        raise DomainError(f"Distances must be positive for a log-log fit, got {ds.tolist()}")
    if math.log10(ns[-1] / ns[0]) < MIN_FIT_DECADES:
        warn(f"Rate fit over {math.log10(ns[-1] / ns[0]):.2f} decades; slopes are sensitive to lattice oscillations", UserWarning)
    log_n, log_d = np.log(ns), np.log(ds)
    slope, intercept = np.polyfit(log_n, log_d, 1)
    residuals = log_d - (intercept + slope * log_n)
    logger.info("Rate fit over %d points: slope %.4f", len(points), slope)
    return RateFit(
        points=points,
        slope=float(slope),
        intercept=float(intercept),
        max_abs_residual=float(np.max(np.abs(residuals))),
        residuals=[float(r) for r in residuals],
    )
