"""
Closed-form functions, parameters and the De Finetti mixing law of the Curie-Weiss model

All density work happens in the coordinate ``x = artanh(t)`` where the mixing
law has density proportional to ``exp(-n * phi_beta(x))`` with

    phi_beta(x) = x^2 / (2 beta) - log cosh(x)

The laws of ``T = tanh(X)`` and ``P = (1 + T) / 2`` are obtained by pushing
forward.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect, newton
from scipy.special import expit, log_ndtr

from cwlab.common.exceptions import (
    ConfigError,
    DomainError,
    NoPositiveRoot,
    NumericalError,
)
from cwlab.tools.quadrature import DEFAULT_ORDER, tabulate_symmetric

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
MIN_GRID_POINTS = 64
DEFAULT_TAIL_TOL = 1e-14
DEFAULT_GRID_POINTS = 1024


class Regime(str, Enum):
    """The four fluctuation regimes of the magnetisation"""

    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    WINDOW = "window"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ModelParams:
    """
    One Curie-Weiss instance

    Attributes:
        n: Number of spins.
        beta: Inverse temperature, ignored when ``gamma`` is given.
        gamma: Optional critical-window scaling, giving ``beta_n = 1 - gamma / sqrt(n)``.
        mu: External field, only used by the fixed-point chain.
    """

    n: int
    beta: float = 1.0
    gamma: Optional[float] = None
    mu: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ConfigError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.gamma is None:
            if not self.beta > 0:
                raise ConfigError(f"beta must be > 0, got {self.beta}")
        elif not self.effective_beta() > 0:
            raise ConfigError(f"gamma={self.gamma} gives a non-positive beta_n = {self.effective_beta()} at n={self.n}")
        if not np.isfinite(self.mu):
            raise ConfigError(f"mu must be finite, got {self.mu}")

    def effective_beta(self) -> float:
        """beta, or ``1 - gamma / sqrt(n)`` inside the critical window"""
        if self.gamma is None:
            return float(self.beta)
        return 1.0 - self.gamma / math.sqrt(self.n)

    def with_n(self, n: int) -> "ModelParams":
        """Same model at another size; the window scaling follows n"""
        return ModelParams(n=n, beta=self.beta, gamma=self.gamma, mu=self.mu)

    def as_dict(self) -> dict:
        out = {"n": self.n, "beta": self.effective_beta()}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.mu:
            out["mu"] = self.mu
        return out


def c_beta(beta: float) -> float:
    """C_beta = 1/beta - 1"""
    return 1.0 / beta - 1.0


def log_cosh(x):
    """Overflow-safe log(cosh(x))"""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LOG2


def phi_beta(x, beta: float):
    """
    The rate function phi_beta(x) = x^2 / (2 beta) - log cosh(x)

    Args:
        x: Scalar or array.
        beta: Inverse temperature, must be positive.
    """
    return np.square(x) / (2.0 * beta) - log_cosh(x)


def phi_beta_derivatives(x, beta: float):
    """First and second derivatives of `phi_beta`"""
    t = np.tanh(x)
    return np.asarray(x) / beta - t, 1.0 / beta - 1.0 + t * t


def logistic(alpha):
    """psi(alpha) = (1 + tanh(alpha)) / 2"""
    return expit(2.0 * np.asarray(alpha, dtype=float))


def logistic_inv(p):
    """Inverse of `logistic`, artanh(2p - 1)"""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError(f"logistic_inv is defined on (0, 1) only, got {p}")
    out = 0.5 * (np.log(p) - np.log1p(-p))
    return float(out) if out.ndim == 0 else out


def solve_critical_point(beta: float, curvature: bool = False):
    """
    Positive root of tanh(x) = x / beta for beta > 1

    The root is bracketed on ``[1e-8, beta]``, located by bisection and polished
    by Newton steps with the analytic derivative.

    Args:
        beta: Inverse temperature, must exceed one.
        curvature: Also return phi_beta''(x_beta).

    Returns:
        ``(x_beta, m_beta)`` or ``(x_beta, m_beta, phi2)`` with ``m_beta = x_beta / beta``.
    """
    if not beta > 1:
        raise NoPositiveRoot(f"tanh(x) = x/beta has no positive root for beta={beta} <= 1")

    def func(x):
        return math.tanh(x) - x / beta

    def fprime(x):
        return 1.0 - math.tanh(x) ** 2 - 1.0 / beta

    lower, upper = 1e-8, float(beta)
    if func(lower) <= 0:
        raise NumericalError(f"The positive root for beta={beta} lies below the bracket [{lower}, {upper}]")
    root = bisect(func, lower, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    try:
        root = newton(func, root, fprime=fprime, tol=1e-15, maxiter=50)
    except RuntimeError:
        logger.debug("Newton polish did not converge for beta=%g, keeping bisection root", beta)
    residual = abs(func(root))
    if residual >= 1e-12:
        raise NumericalError(f"Root residual {residual:.3e} too large for beta={beta}")
    m_beta = math.tanh(root)
    if curvature:
        phi2 = 1.0 / beta - 1.0 + m_beta**2
        return root, m_beta, phi2
    return root, m_beta


# Lanczos approximation with g = 7 and nine coefficients
_LANCZOS_G = 7
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """The Gamma function by the Lanczos approximation, reflection for x < 1/2"""
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, coeff in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += coeff / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def gamma_quarter() -> float:
    """Gamma(1/4)"""
    return lanczos_gamma(0.25)


def infer_regime(params: ModelParams) -> Regime:
    """Regime implied by the parameters"""
    if params.gamma is not None:
        return Regime.WINDOW
    if params.beta < 1:
        return Regime.SUBCRITICAL
    if params.beta == 1:
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL


def _has_positive_root(beta: float) -> bool:
    return beta > 1 and math.tanh(1e-8) - 1e-8 / beta > 0


def log_tail_mass_bound(params: ModelParams, half_width: float) -> float:
    """
    Log of a certified bound on the integral of exp(-n phi) over |x| > L

    Three one-sided bounds are available; the smallest applicable one is used
    and doubled for the two tails:

    * Gaussian: phi >= C x^2 / 2 for beta < 1
    * General: phi >= x^2 / (2 beta) - |x|
    * Tangent: phi convex and increasing beyond L gives exp(-n phi(L)) / (n phi'(L))
    """
    n = params.n
    beta = params.effective_beta()
    L = float(half_width)
    bounds = []

    if beta < 1:
        c = c_beta(beta)
        bounds.append(0.5 * math.log(2 * math.pi / (n * c)) + float(log_ndtr(-L * math.sqrt(n * c))))

    bounds.append(n * beta / 2 + 0.5 * math.log(2 * math.pi * beta / n) + float(log_ndtr(-(L - beta) * math.sqrt(n / beta))))

    if _has_positive_root(beta):
        tangent_ok = L > solve_critical_point(beta)[0]
    else:
        tangent_ok = L > 0
    if tangent_ok:
        slope = float(phi_beta_derivatives(L, beta)[0])
        if slope > 0:
            bounds.append(-n * float(phi_beta(L, beta)) - math.log(n * slope))

    return LOG2 + min(bounds)


def tail_mass_bound(params: ModelParams, half_width: float) -> float:
    """Certified bound on the unnormalised mass of exp(-n phi) outside [-L, L]"""
    return math.exp(log_tail_mass_bound(params, half_width))


def _mode_and_width(params: ModelParams):
    """Location of the positive mode, certified half-window and characteristic width"""
    n = params.n
    beta = params.effective_beta()
    if _has_positive_root(beta):
        x0, _, phi2 = solve_critical_point(beta, curvature=True)
        x_infl = math.atanh(math.sqrt(1.0 - 1.0 / beta))
        h = min(1.0 / math.sqrt(n), x0 - x_infl)
    else:
        x0, phi2 = 0.0, max(c_beta(beta), 0.0)
        h = 1.0 / math.sqrt(n)
    width = (12.0 / n) ** 0.25
    if phi2 > 0:
        width = min(width, 1.0 / math.sqrt(n * phi2))
    return x0, h, width


def choose_truncation(params: ModelParams, tail_tol: float, max_steps: int = 400):
    """
    Truncation radius L with a certified relative tail below ``tail_tol``

    The tail bound is compared with a certified lower bound on Z obtained from
    the convex neighbourhood of the mode.

    Returns:
        ``(L, log_tail)`` where log_tail is the log of the two-sided tail bound.
    """
    n = params.n
    beta = params.effective_beta()
    x0, h, width = _mode_and_width(params)
    # phi is convex on [x0 - h, x0 + h], so its maximum there sits at an end point
    phi_max = max(float(phi_beta(x0 - h, beta)), float(phi_beta(x0 + h, beta)))
    log_z_lower = math.log(2 * h) - n * phi_max
    log_tol = math.log(tail_tol)

    scale = 4.0
    for _ in range(max_steps):
        L = x0 + scale * width
        log_tail = log_tail_mass_bound(params, L)
        if log_tail - log_z_lower < log_tol:
            logger.info("Truncation for %s: L=%.6g (x0=%.4g, width=%.4g)", params.as_dict(), L, x0, width)
            return L, log_tail
        scale *= 1.25
    raise NumericalError(f"Could not certify a truncation radius for {params.as_dict()}")


class DeFinettiMeasure:
    """
    Tabulated De Finetti mixing law of the Curie-Weiss spins in x-coordinates

    Attributes:
        params: The model parameters.
        xgrid: Panel edges on [-L, L].
        log_density: Unnormalised log-density ``-n phi_beta`` on `xgrid`.
        logZ: Log of the normaliser Z_{n,beta} (integral of exp(-n phi_beta) on [-L, L]).
        cdf: CDF on `xgrid`.
        truncation_error: Certified bound on the relative mass outside [-L, L].
    """

    def __init__(self, params: ModelParams, table, truncation_error: float):
        self.params = params
        self._table = table
        self.xgrid = table.edges
        self.log_density = table.edge_log_density
        self.logZ = table.logZ
        self.cdf = table.edge_cdf
        self.truncation_error = truncation_error

    @property
    def half_width(self) -> float:
        return self._table.half_width

    @property
    def nodes(self) -> np.ndarray:
        """Quadrature nodes, flattened"""
        return self._table.nodes.ravel()

    @property
    def node_mass(self) -> np.ndarray:
        """Probability carried by each quadrature node, flattened"""
        return self._table.node_mass.ravel()

    @property
    def node_log_mass(self) -> np.ndarray:
        """Log of `node_mass` without underflow"""
        table = self._table
        return (np.log(table.weights) + table.node_log_density - table.logZ).ravel()

    def density(self, x):
        return self._table.density(x)

    def cdf_at(self, x):
        return self._table.cdf(x)

    def quantile(self, u):
        return self._table.quantile(u)

    def t_density(self, t):
        """Density of T = tanh(X) on (-1, 1)"""
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1
        safe = np.where(inside, t, 0.0)
        out = np.where(inside, self.density(np.arctanh(safe)) / (1.0 - safe * safe), 0.0)
        return float(out) if out.ndim == 0 else out

    def p_density(self, p):
        """Density of P = (1 + T) / 2 on (0, 1)"""
        p = np.asarray(p, dtype=float)
        return 2.0 * self.t_density(2.0 * p - 1.0)

    def scaled_t_cdf(self, w, scale: float):
        """CDF of scale * T, e.g. scale = sqrt(n) or n**(1/4)"""
        w = np.asarray(w, dtype=float) / scale
        inside = np.abs(w) < 1
        x = np.arctanh(np.where(inside, w, 0.0))
        out = np.where(inside, self.cdf_at(x), np.where(w >= 1, 1.0, 0.0))
        return float(out) if out.ndim == 0 else out

    def scaled_t_density(self, w, scale: float):
        """Density of scale * T"""
        return self.t_density(np.asarray(w, dtype=float) / scale) / scale

    def expect(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        """Expectation of func(X) under the mixing law"""
        return self._table.expect(func)

    def x_moment(self, k: int) -> float:
        return self._table.moment(k)

    def __repr__(self):
        return (
            f"DeFinettiMeasure<{self.params.as_dict()}, L={self.half_width:.4g}, "
            f"panels={self._table.panels}, logZ={self.logZ:.10g}>"
        )


def build_definetti(
    params: ModelParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
    order: int = DEFAULT_ORDER,
) -> DeFinettiMeasure:
    """
    Tabulate the De Finetti mixing law for the given parameters

    Args:
        params: The model.
        tail_tol: Target for the certified relative tail mass, in (0, 1e-6].
        grid_points: Minimum number of panels, at least 64.
        order: Gauss-Legendre nodes per panel.

    Returns:
        A `DeFinettiMeasure`.
    """
    if not 0 < tail_tol <= 1e-6:
        raise ConfigError(f"tail_tol must lie in (0, 1e-6], got {tail_tol}")
    if grid_points < MIN_GRID_POINTS:
        raise ConfigError(f"grid_points must be >= {MIN_GRID_POINTS}, got {grid_points}")

    n = params.n
    beta = params.effective_beta()
    half_width, log_tail = choose_truncation(params, tail_tol)

    def log_density(x):
        return -n * phi_beta(x, beta)

    table = tabulate_symmetric(
        log_density,
        half_width,
        min_panels=grid_points,
        order=order,
        label=f"De Finetti n={n} beta={beta:.6g}",
    )
    truncation_error = math.exp(log_tail - table.logZ)
    return DeFinettiMeasure(params, table, truncation_error)
