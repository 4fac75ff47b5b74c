"""
Numerical checks of the normalising-constant asymptotics, the auxiliary
identities and the convergence rates of the magnetisation

Every check returns a `CheckReport`. Unspecified big-O constants are handled by
comparing a deviation at n with the deviation at 4n rather than by absolute
thresholds.
"""
import inspect
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from monty.json import MSONable
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import minimize_scalar
from scipy.special import log_expit, logsumexp
from scipy.stats import binom

from cwlab.common.exceptions import ConfigError
from cwlab.common.parallel import ordered_map
from cwlab.tools.exact import (
    exact_pmf,
    log_binomial_coefficients,
    mixture_pmf,
)
from cwlab.tools.limits import LimitLaw, limit_law_for, regime_rescale
from cwlab.tools.measures import (
    DEFAULT_GRID_POINTS,
    DEFAULT_TAIL_TOL,
    DeFinettiMeasure,
    ModelParams,
    Regime,
    build_definetti,
    c_beta,
    log_cosh,
    phi_beta,
    solve_critical_point,
)
from cwlab.tools.metrics import (
    DEFAULT_WINDOW,
    MIN_FIT_DECADES,
    RateFit,
    default_test_family,
    empirical_total_variation,
    fit_rate,
    kolmogorov_exact,
    kolmogorov_surrogate,
    kolmogorov_two_point_windowed,
    limit_evaluator,
    pmf_evaluator,
    smooth_distance,
)
from cwlab.tools.samplers import RngStream, fixed_point_chain

logger = logging.getLogger(__name__)

HALVING_RATIO = 0.6
SMOOTH_RATIO = 0.7
SUPERCRITICAL_RATIO = 0.7
DEFAULT_SLACK = 3.0
MIXTURE_TOL = 1e-10
BINOMIAL_BIAS_TOL = 1e-12
GAUSSIAN_BIAS_TOL = 1e-10
DENSITY_SCALED_BOUND = 1.0
DENSITY_STABILITY = 2.0


@dataclass
class CheckReport(MSONable):
    """
    Outcome of one check

    Attributes:
        name: Check identifier.
        params: Parameters the check ran with.
        observed: Observed quantities.
        bound_or_target: Bounds or targets they are compared with.
        passed: Whether the stated inequality or tolerance holds.
        detail: Human-readable explanation.
    """

    name: str
    params: Dict[str, Any]
    observed: List[float]
    bound_or_target: List[float]
    passed: bool
    detail: str = ""

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} {self.params}: {self.detail}"


class RateMethod(str, Enum):
    """How the distance series of a rate check is computed"""

    EXACT_KOL = "exact-kol"
    SURROGATE_KOL = "surrogate-kol"
    SMOOTH = "smooth"


@lru_cache(maxsize=256)
def cached_measure(params: ModelParams, tail_tol: float = DEFAULT_TAIL_TOL, grid_points: int = DEFAULT_GRID_POINTS) -> DeFinettiMeasure:
    """`build_definetti` with memoisation over the (hashable) parameters"""
    return build_definetti(params, tail_tol=tail_tol, grid_points=grid_points)


def _floats(values: Iterable) -> List[float]:
    return [float(v) for v in values]


def check_Z_subcritical(beta: float, n: int) -> CheckReport:
    """
    0 <= 1 - sqrt(C/(2 pi)) Z_{n,beta} sqrt(n) <= C^-2 / (4n) for beta < 1

    The detail also records whether the weaker-looking constant C^(-9/2) / (4n)
    holds; it fails for beta < 1/2.
    """
    if not 0 < beta < 1:
        raise ConfigError(f"check_Z_subcritical needs 0 < beta < 1, got {beta}")
    params = ModelParams(n=n, beta=beta)
    mix = cached_measure(params)
    c = c_beta(beta)
    log_ratio = mix.logZ + 0.5 * math.log(n) + 0.5 * math.log(c / (2 * math.pi))
    deviation = -math.expm1(log_ratio)
    bound = c**-2 / (4 * n)
    stated = c**-4.5 / (4 * n)
    passed = 0 <= deviation <= bound
    detail = (
        f"deviation={deviation:.6e}, bound C^-2/(4n)={bound:.6e}; "
        f"C^-4.5/(4n)={stated:.6e} {'holds' if 0 <= deviation <= stated else 'does not hold'}"
    )
    return CheckReport("z-subcritical", {"beta": beta, "n": n}, [deviation], [0.0, bound], passed, detail)


def _quartic_deviation(params: ModelParams, limit: LimitLaw) -> float:
    """|n^(1/4) Z_{n,beta} / Z_limit - 1|"""
    mix = cached_measure(params)
    return abs(math.expm1(mix.logZ + 0.25 * math.log(params.n) - limit.log_normalizer))


def _halving_report(name, params, dev_n, dev_4n, extra="") -> CheckReport:
    passed = dev_4n <= HALVING_RATIO * dev_n
    ratio = dev_4n / dev_n if dev_n > 0 else float("nan")
    detail = f"deviation(n)={dev_n:.6e}, deviation(4n)={dev_4n:.6e}, ratio={ratio:.4f} (needs <= {HALVING_RATIO}){extra}"
    return CheckReport(name, params, [dev_n, dev_4n], [HALVING_RATIO * dev_n], passed, detail)


def check_Z_critical(n: int) -> CheckReport:
    """n^(1/4) Z_{n,1} -> Z_F with an O(1/sqrt(n)) deviation"""
    limit = limit_law_for(ModelParams(n=n, beta=1.0), Regime.CRITICAL)
    dev_n = _quartic_deviation(ModelParams(n=n, beta=1.0), limit)
    dev_4n = _quartic_deviation(ModelParams(n=4 * n, beta=1.0), limit)
    return _halving_report("z-critical", {"n": n}, dev_n, dev_4n, f", Z_F={limit.normalizer:.12g}")


def check_Z_window(gamma: float, n: int) -> CheckReport:
    """n^(1/4) Z_{n,beta_n} -> Z_{F_gamma} with beta_n = 1 - gamma / sqrt(n)"""
    params = ModelParams(n=n, gamma=gamma)
    limit = limit_law_for(params, Regime.WINDOW)
    dev_n = _quartic_deviation(params, limit)
    dev_4n = _quartic_deviation(params.with_n(4 * n), limit)
    return _halving_report("z-window", {"gamma": gamma, "n": n}, dev_n, dev_4n, f", Z_F_gamma={limit.normalizer:.12g}")


def _laplace_deviation(beta: float, n: int) -> float:
    x_beta, _, phi2 = solve_critical_point(beta, curvature=True)
    mix = cached_measure(ModelParams(n=n, beta=beta))
    log_target = math.log(2.0) + 0.5 * math.log(2 * math.pi / phi2)
    log_a = 0.5 * math.log(n) + n * float(phi_beta(x_beta, beta)) + mix.logZ
    return abs(math.expm1(log_a - log_target))


def check_Z_supercritical(beta: float, n: int) -> CheckReport:
    """sqrt(n) exp(n phi(x_beta)) Z_{n,beta} -> 2 sqrt(2 pi / phi''(x_beta)) for beta > 1"""
    if not beta > 1:
        raise ConfigError(f"check_Z_supercritical needs beta > 1, got {beta}")
    _, _, phi2 = solve_critical_point(beta, curvature=True)
    if not phi2 > 0:
        return CheckReport("z-supercritical", {"beta": beta, "n": n}, [phi2], [0.0], False, "phi'' at x_beta is not positive")
    dev_n = _laplace_deviation(beta, n)
    dev_4n = _laplace_deviation(beta, 4 * n)
    return _halving_report("z-supercritical", {"beta": beta, "n": n}, dev_n, dev_4n, f", phi''(x_beta)={phi2:.10g}")


def _fn_log_density(n: int, mix: DeFinettiMeasure):
    """log of the density of F_n = n^(1/4) tanh X, written in x-coordinates"""

    def log_f(x):
        return -n * phi_beta(x, 1.0) + 2 * log_cosh(x) - mix.logZ - 0.25 * math.log(n)

    return log_f


def density_max(n: int) -> Tuple[float, float, int]:
    """
    Maximum of the F_n density at beta = 1

    Returns:
        ``(max_value, x_star, local_maxima)`` where x_star is the positive
        maximiser in x-coordinates and local_maxima counts the maxima seen on a
        symmetric grid (0 must be a local minimum).
    """
    mix = cached_measure(ModelParams(n=n, beta=1.0))
    log_f = _fn_log_density(n, mix)
    reach = 4 * (12.0 / n) ** 0.25
    grid = np.linspace(-reach, reach, 4001)
    values = log_f(grid)
    slopes = np.sign(np.diff(values))
    turns = np.diff(slopes)
    local_max = int(np.count_nonzero(turns < 0))
    centre = len(grid) // 2
    zero_is_min = values[centre] < values[centre - 1] and values[centre] < values[centre + 1]

    idx = centre + int(np.argmax(values[centre:]))
    bracket = (grid[idx - 1], grid[idx], grid[min(idx + 1, len(grid) - 1)])
    result = minimize_scalar(lambda x: -float(log_f(x)), bracket=bracket, method="golden", tol=1e-10)
    x_star = float(result.x)
    value = math.exp(-float(result.fun))
    return value, x_star, local_max if zero_is_min else -local_max


def check_density_max(n: int) -> CheckReport:
    """
    max f_{F_n} -> 1/Z_F at rate 1/sqrt(n), maximiser near sqrt(6/n)

    The deviation only starts halving under n -> 4n beyond n ~ 6400, so the
    rate is judged by sqrt(n) |max - 1/Z_F| staying below DENSITY_SCALED_BOUND
    and moving by at most a factor DENSITY_STABILITY between n and 10 n.
    """
    if n < 10:
        raise ConfigError(f"check_density_max needs n >= 10, got {n}")
    z_f = limit_law_for(ModelParams(n=n, beta=1.0), Regime.CRITICAL).normalizer
    value_n, x_n, maxima_n = density_max(n)
    value_10n, _, maxima_10n = density_max(10 * n)
    scaled_n = math.sqrt(n) * abs(value_n - 1 / z_f)
    scaled_10n = math.sqrt(10 * n) * abs(value_10n - 1 / z_f)
    shape_ok = maxima_n == 2 and maxima_10n == 2
    log_f = _fn_log_density(n, cached_measure(ModelParams(n=n, beta=1.0)))
    mirror_ok = abs(math.exp(float(log_f(-x_n))) - value_n) <= 1e-12 * value_n
    location = x_n / math.sqrt(6.0 / n)
    location_ok = n < 1000 or abs(location - 1) <= 0.2
    ratio = scaled_10n / scaled_n if scaled_n > 0 else float("inf")
    rate_ok = max(scaled_n, scaled_10n) <= DENSITY_SCALED_BOUND and 1 / DENSITY_STABILITY <= ratio <= DENSITY_STABILITY
    detail = (
        f"max={value_n:.10g}, 1/Z_F={1 / z_f:.10g}, sqrt(n) deviation={scaled_n:.4g} at n, {scaled_10n:.4g} at 10n "
        f"(ratio {ratio:.4f}); x*={x_n:.6g} vs sqrt(6/n)={math.sqrt(6.0 / n):.6g}; "
        f"{'two maxima and a minimum at 0' if shape_ok and mirror_ok else 'unexpected shape'}"
    )
    return CheckReport(
        "density-max",
        {"n": n},
        [value_n, value_10n, scaled_n, scaled_10n, x_n],
        [1 / z_f, DENSITY_SCALED_BOUND, DENSITY_STABILITY, math.sqrt(6.0 / n)],
        bool(rate_ok and shape_ok and mirror_ok and location_ok),
        detail,
    )


def centered_binomial_distance(p: float, q: float, n: int) -> float:
    """Exact Kolmogorov distance between S_n(p) - n(2p-1) and S_n(q) - n(2q-1)"""
    k = np.arange(n + 1)
    atoms_p, atoms_q = 2.0 * k - 2.0 * n * p, 2.0 * k - 2.0 * n * q
    cum_p = np.concatenate([[0.0], np.cumsum(binom.pmf(k, n, p))])
    cum_q = np.concatenate([[0.0], np.cumsum(binom.pmf(k, n, q))])
    points = np.union1d(atoms_p, atoms_q)
    cdf_p = cum_p[np.searchsorted(atoms_p, points, side="right")]
    cdf_q = cum_q[np.searchsorted(atoms_q, points, side="right")]
    return float(np.max(np.abs(cdf_p - cdf_q)))


def check_centered_binomial_distance(p: float, q: float, n: int, slack: float = DEFAULT_SLACK) -> CheckReport:
    """d_Kol of two centred binomials <= |p-q| |1-(p+q)| / (p(1-p)) + slack / sqrt(n)"""
    for name, value in (("p", p), ("q", q)):
        if not 0 < value < 1:
            raise ConfigError(f"{name} must lie in (0, 1), got {value}")
    distance = centered_binomial_distance(p, q, n)
    leading = abs(p - q) * abs(1 - (p + q)) / (p * (1 - p))
    bound = leading + slack / math.sqrt(n)
    detail = f"d_Kol={distance:.6e}, leading term={leading:.6e}, slack {slack}/sqrt(n) is a chosen constant"
    return CheckReport(
        "binomial-distance",
        {"p": p, "q": q, "n": n, "slack": slack},
        [distance],
        [bound],
        distance <= bound,
        detail,
    )


def check_mixture_identity(n: int, beta: float) -> CheckReport:
    """exact_pmf and mixture_pmf agree atomwise"""
    params = ModelParams(n=n, beta=beta)
    gap = float(np.max(np.abs(exact_pmf(params).probs - mixture_pmf(params, cached_measure(params)).probs)))
    return CheckReport(
        "mixture-identity",
        {"n": n, "beta": beta},
        [gap],
        [MIXTURE_TOL],
        gap < MIXTURE_TOL,
        f"max atomwise gap {gap:.3e}",
    )


def _spin_sum_log_law(n: int, u: float) -> np.ndarray:
    """Log-probabilities of the counts of S_n[u], spins +1 with probability psi(u)"""
    k = np.arange(n + 1)
    return log_binomial_coefficients(n) + k * log_expit(2 * u) + (n - k) * log_expit(-2 * u)


def check_binomial_bias(n: int, alpha: float, beta: float) -> CheckReport:
    """Biasing S_n[beta] by exp(alpha S) gives S_n[alpha + beta]"""
    k = np.arange(n + 1)
    biased = _spin_sum_log_law(n, beta) + alpha * (2 * k - n)
    biased = np.exp(biased - logsumexp(biased))
    target = np.exp(_spin_sum_log_law(n, alpha + beta))
    gap = float(np.max(np.abs(biased - target)))
    return CheckReport(
        "binomial-bias",
        {"n": n, "alpha": alpha, "beta": beta},
        [gap],
        [BINOMIAL_BIAS_TOL],
        gap < BINOMIAL_BIAS_TOL,
        f"max atomwise gap {gap:.3e}",
    )


GAUSSIAN_BIAS_FAMILY: Dict[str, Callable[[np.ndarray], np.ndarray]] = OrderedDict(
    [
        ("x", lambda x: x),
        ("x^2", lambda x: x**2),
        ("x^3", lambda x: x**3),
        ("cos(x)", np.cos),
        ("sin(2x)", lambda x: np.sin(2 * x)),
        ("exp(-x^2/4)", lambda x: np.exp(-(x**2) / 4)),
    ]
)


def check_gaussian_bias(gamma: float, order: int = 120) -> CheckReport:
    """E[exp(gamma G) h(G)] / E[exp(gamma G)] = E[h(G + gamma)] by Gauss-Hermite quadrature"""
    nodes, weights = hermegauss(order)
    weights = weights / math.sqrt(2 * math.pi)
    tilt = weights * np.exp(gamma * nodes)
    norm = tilt.sum()
    gaps = []
    for h in GAUSSIAN_BIAS_FAMILY.values():
        lhs = float(np.dot(tilt, h(nodes)) / norm)
        rhs = float(np.dot(weights, h(nodes + gamma)))
        gaps.append(abs(lhs - rhs))
    worst = max(gaps)
    return CheckReport(
        "gaussian-bias",
        {"gamma": gamma},
        _floats(gaps),
        [GAUSSIAN_BIAS_TOL],
        worst < GAUSSIAN_BIAS_TOL,
        f"worst gap {worst:.3e} over {', '.join(GAUSSIAN_BIAS_FAMILY)}",
    )


def check_randomisation_variance(beta: float, n: int) -> CheckReport:
    """
    n E[T^2] -> beta / (1 - beta) below the critical temperature

    Together with E[G^2 (1 - T^2)] -> 1 this is the variance split of the
    Gaussian limit into its binomial and randomisation parts.
    """
    if not 0 < beta < 1:
        raise ConfigError(f"check_randomisation_variance needs 0 < beta < 1, got {beta}")
    target = beta / (1 - beta)

    def randomisation(size):
        mix = cached_measure(ModelParams(n=size, beta=beta))
        t2 = mix.expect(lambda x: np.tanh(x) ** 2)
        return size * t2, 1.0 - t2

    var_n, gauss_n = randomisation(n)
    var_4n, _ = randomisation(4 * n)
    report = _halving_report(
        "randomisation-variance",
        {"beta": beta, "n": n},
        abs(var_n - target),
        abs(var_4n - target),
        f", n E[T^2]={var_n:.8g} -> {target:.8g}, E[G^2(1-T^2)]={gauss_n:.8g}",
    )
    report.observed = [var_n, var_4n, gauss_n]
    report.bound_or_target = [target, 1.0]
    return report


def check_chain_stationarity(
    params: ModelParams,
    steps: int = 10**6,
    burn_in: Optional[int] = None,
    seed: int = 0,
    tolerance: float = 0.01,
) -> CheckReport:
    """Total variation between the fixed-point chain's occupation law and exact_pmf"""
    trajectory = fixed_point_chain(params, steps, burn_in, RngStream(seed))
    tv = empirical_total_variation(trajectory, exact_pmf(params))
    return CheckReport(
        "chain-stationarity",
        {**params.as_dict(), "steps": steps, "burn_in": 10 * params.n if burn_in is None else burn_in, "seed": seed},
        [tv],
        [tolerance],
        tv < tolerance,
        f"TV={tv:.5f} over {steps} steps",
    )


def geometric_grid(start: int, stop: int, factor: int = 2) -> List[int]:
    """start, start*factor, ... up to stop inclusive"""
    if start < 1 or stop < start or factor < 2:
        raise ConfigError(f"Invalid geometric grid {start}:{stop}:{factor}")
    grid = []
    value = start
    while value <= stop:
        grid.append(value)
        value *= factor
    return grid


DEFAULT_REGIME_BETA = {
    Regime.SUBCRITICAL: 0.5,
    Regime.CRITICAL: 1.0,
    Regime.SUPERCRITICAL: 2.0,
}


def regime_params(regime: Regime, n: int, beta: Optional[float] = None, gamma: Optional[float] = None) -> ModelParams:
    """Parameters of a regime at size n, with the regime's default beta or gamma"""
    regime = Regime(regime)
    if regime is Regime.WINDOW:
        return ModelParams(n=n, gamma=1.0 if gamma is None else gamma)
    return ModelParams(n=n, beta=DEFAULT_REGIME_BETA[regime] if beta is None else beta)


def regime_distance(
    regime: Regime,
    n: int,
    method: RateMethod,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    window: float = DEFAULT_WINDOW,
) -> float:
    """Distance between the rescaled magnetisation (or its surrogate) and the regime's limit"""
    regime, method = Regime(regime), RateMethod(method)
    params = regime_params(regime, n, beta, gamma)
    limit = limit_law_for(params, regime)
    rescale = regime_rescale(regime, n)
    if method is RateMethod.SURROGATE_KOL:
        window_arg = window if regime is Regime.SUPERCRITICAL else None
        return kolmogorov_surrogate(params, cached_measure(params), limit, rescale, window=window_arg)
    pmf = exact_pmf(params)
    if method is RateMethod.SMOOTH:
        return smooth_distance(pmf_evaluator(pmf, rescale), limit_evaluator(limit), default_test_family(limit.std()))
    if regime is Regime.SUPERCRITICAL:
        return kolmogorov_two_point_windowed(pmf, limit, rescale, window)
    return kolmogorov_exact(pmf, limit, rescale)


def distance_series(
    regime: Regime,
    n_grid: Sequence[int],
    method: RateMethod,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    window: float = DEFAULT_WINDOW,
    progress: bool = False,
) -> List[Tuple[int, float]]:
    """(n, distance) rows in grid order"""
    distances = ordered_map(
        lambda n: regime_distance(regime, n, method, beta, gamma, window),
        n_grid,
        desc=f"{Regime(regime).value}/{RateMethod(method).value}",
        progress=progress,
    )
    return [(int(n), float(d)) for n, d in zip(n_grid, distances)]


SLOPE_WINDOWS = {
    (Regime.SUBCRITICAL, RateMethod.EXACT_KOL): (-0.65, -0.35),
    (Regime.SUBCRITICAL, RateMethod.SURROGATE_KOL): (-math.inf, -0.8),
    (Regime.CRITICAL, RateMethod.EXACT_KOL): (-0.7, -0.3),
    (Regime.CRITICAL, RateMethod.SURROGATE_KOL): (-0.7, -0.3),
    (Regime.WINDOW, RateMethod.EXACT_KOL): (-0.7, -0.3),
    (Regime.WINDOW, RateMethod.SURROGATE_KOL): (-0.7, -0.3),
}


def _quadruple_ratios(points: Sequence[Tuple[int, float]]) -> List[Tuple[int, float]]:
    """(n, d(4n)/d(n)) for every n whose 4n is also in the series; 0/0 counts as 0"""
    lookup = dict(points)
    ratios = []
    for n, d in points:
        if 4 * n in lookup:
            d4 = lookup[4 * n]
            ratios.append((n, 0.0 if d == 0 and d4 == 0 else (d4 / d if d > 0 else math.inf)))
    return ratios


def judge_rate(regime: Regime, method: RateMethod, points: Sequence[Tuple[int, float]]) -> Tuple[bool, str, Optional[RateFit]]:
    """
    Verdict on a distance series

    Slope windows apply to the Kolmogorov rates below and at the critical
    temperature; ratio tests d(4n)/d(n) apply to the smooth distance and to the
    windowed supercritical distance.

    Returns:
        ``(passed, detail, fit)``; fit is None when a distance vanishes. A
        ratio-judged series only gets a fit when it spans MIN_FIT_DECADES.
    """
    regime, method = Regime(regime), RateMethod(method)
    points = [(int(n), float(d)) for n, d in points]
    ratio_based = method is RateMethod.SMOOTH or regime is Regime.SUPERCRITICAL
    fit = None
    if all(d > 0 for _, d in points) and len(points) >= 3:
        wide = math.log10(points[-1][0] / points[0][0]) >= MIN_FIT_DECADES
        if wide or not ratio_based:
            fit = fit_rate(points)

    if ratio_based:
        ratios = _quadruple_ratios(points)
        if not ratios:
            raise ConfigError("Ratio tests need n and 4n in the grid")
        limit = SMOOTH_RATIO if method is RateMethod.SMOOTH else SUPERCRITICAL_RATIO
        passed = all(r <= limit for _, r in ratios)
        if regime is Regime.SUPERCRITICAL and method is not RateMethod.SMOOTH:
            distances = [d for _, d in points]
            passed = passed and all(b <= a for a, b in zip(distances, distances[1:]))
        detail = "ratios d(4n)/d(n): " + ", ".join(f"{n}:{r:.4f}" for n, r in ratios) + f" (needs <= {limit})"
        if fit is not None:
            detail += f"; slope {fit.slope:.4f}"
        return passed, detail, fit

    if fit is None:
        return False, "a distance vanished, no slope available", None
    low, high = SLOPE_WINDOWS[(regime, method)]
    passed = low <= fit.slope <= high
    return passed, f"slope {fit.slope:.4f} in [{low}, {high}]: {passed}", fit


def check_regime_rate(
    regime: Regime,
    n_grid: Sequence[int],
    method: RateMethod,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    window: float = DEFAULT_WINDOW,
    progress: bool = False,
) -> CheckReport:
    """Compute a distance series over n_grid and judge its decay"""
    regime, method = Regime(regime), RateMethod(method)
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("n_grid must be strictly increasing")
    ratio_based = method is RateMethod.SMOOTH or regime is Regime.SUPERCRITICAL
    if not ratio_based and len(n_grid) < 5:
        raise ConfigError(f"Slope checks need at least 5 grid points, got {len(n_grid)}")
    points = distance_series(regime, n_grid, method, beta, gamma, window, progress)
    passed, detail, fit = judge_rate(regime, method, points)
    if regime is Regime.SUPERCRITICAL and method is RateMethod.EXACT_KOL:
        unwindowed = [
            kolmogorov_exact(exact_pmf(regime_params(regime, n, beta, gamma)), limit_law_for(regime_params(regime, n, beta, gamma), regime), float(n))
            for n in (n_grid[0], n_grid[-1])
        ]
        detail += f"; unwindowed d_Kol at n={n_grid[0]}, {n_grid[-1]}: {unwindowed[0]:.4f}, {unwindowed[1]:.4f}"
    params: Dict[str, Any] = {"regime": regime.value, "method": method.value, "n_grid": n_grid}
    if beta is not None:
        params["beta"] = beta
    if gamma is not None:
        params["gamma"] = gamma
    if regime is Regime.SUPERCRITICAL:
        params["window"] = window
    target = [fit.slope if fit else float("nan")]
    return CheckReport(
        f"rate-{regime.value}-{method.value}",
        params,
        [d for _, d in points],
        target,
        bool(passed),
        detail,
    )


def _rate(regime, method, start, stop, **kwargs):
    def run(**overrides):
        options = {**kwargs, **overrides}
        return check_regime_rate(regime, geometric_grid(start, stop), method, **options)

    return run


def _chain(n=20, beta=0.8, steps=10**6, burn_in=None, seed=0, tolerance=0.01):
    return check_chain_stationarity(ModelParams(n=n, beta=beta), steps, burn_in, seed, tolerance)


# Ordered default suite: name -> (check, default keyword arguments)
DEFAULT_SUITE: "OrderedDict[str, Tuple[Callable[..., CheckReport], Dict[str, Any]]]" = OrderedDict(
    [
        ("z-subcritical", (check_Z_subcritical, {"beta": 0.5, "n": 100})),
        ("z-critical", (check_Z_critical, {"n": 400})),
        ("z-window", (check_Z_window, {"gamma": 1.0, "n": 400})),
        ("z-supercritical", (check_Z_supercritical, {"beta": 2.0, "n": 1600})),
        ("density-max", (check_density_max, {"n": 1000})),
        ("binomial-distance", (check_centered_binomial_distance, {"p": 0.4, "q": 0.6, "n": 1000, "slack": DEFAULT_SLACK})),
        ("mixture-identity", (check_mixture_identity, {"n": 64, "beta": 1.5})),
        ("binomial-bias", (check_binomial_bias, {"n": 50, "alpha": 0.3, "beta": -0.2})),
        ("gaussian-bias", (check_gaussian_bias, {"gamma": 1.0})),
        ("randomisation-variance", (check_randomisation_variance, {"beta": 0.5, "n": 400})),
        ("chain-stationarity", (_chain, {"n": 20, "beta": 0.8, "seed": 0})),
        ("rate-subcritical-exact", (_rate(Regime.SUBCRITICAL, RateMethod.EXACT_KOL, 64, 8192), {})),
        ("rate-subcritical-surrogate", (_rate(Regime.SUBCRITICAL, RateMethod.SURROGATE_KOL, 64, 8192), {})),
        ("rate-critical-exact", (_rate(Regime.CRITICAL, RateMethod.EXACT_KOL, 64, 8192), {})),
        ("rate-window-exact", (_rate(Regime.WINDOW, RateMethod.EXACT_KOL, 64, 8192), {"gamma": 1.0})),
        ("rate-supercritical-exact", (_rate(Regime.SUPERCRITICAL, RateMethod.EXACT_KOL, 256, 8192), {})),
        ("rate-subcritical-smooth", (_rate(Regime.SUBCRITICAL, RateMethod.SMOOTH, 256, 4096), {})),
        ("rate-critical-smooth", (_rate(Regime.CRITICAL, RateMethod.SMOOTH, 256, 4096), {})),
        ("rate-window-smooth", (_rate(Regime.WINDOW, RateMethod.SMOOTH, 256, 4096), {"gamma": 1.0})),
        ("rate-supercritical-smooth", (_rate(Regime.SUPERCRITICAL, RateMethod.SMOOTH, 256, 4096), {})),
    ]
)


def _accepted_keywords(func: Callable) -> Optional[set]:
    """Keyword names a check accepts, None when it takes arbitrary keywords"""
    signature = inspect.signature(func)
    if any(p.kind is inspect.Parameter.VAR_KEYWORD for p in signature.parameters.values()):
        return None
    return set(signature.parameters)


def run_suite(selection: Optional[Sequence[str]] = None, settings: Optional[Dict[str, Any]] = None, progress: bool = False) -> List[CheckReport]:
    """
    Run checks of the default suite in suite order

    Args:
        selection: Names of the checks to run, all of them when None.
        settings: Overrides applied to every selected check that takes a
            keyword of that name (e.g. ``{"beta": 0.5, "n": 100}``).
        progress: Show a progress bar.

    Returns:
        The reports, in suite order.
    """
    settings = {k: v for k, v in (settings or {}).items() if v is not None}
    names = list(DEFAULT_SUITE) if not selection else list(selection)
    unknown = [name for name in names if name not in DEFAULT_SUITE]
    if unknown:
        raise ConfigError(f"Unknown checks {unknown}; available: {list(DEFAULT_SUITE)}")
    ordered = [name for name in DEFAULT_SUITE if name in names]

    def run(name):
        func, defaults = DEFAULT_SUITE[name]
        accepted = _accepted_keywords(func)
        kwargs = dict(defaults)
        for key, value in settings.items():
            if accepted is None and key in ("beta", "gamma", "window"):
                kwargs[key] = value
            elif accepted is not None and key in accepted:
                kwargs[key] = value
        logger.info("Running check %s with %s", name, kwargs)
        report = func(**kwargs)
        report.name = name
        return report

    return ordered_map(run, ordered, desc="verify", progress=progress)
