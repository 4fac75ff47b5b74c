"""
The four limit laws of the Curie-Weiss magnetisation

* Gaussian N(0, 1/(1 - beta)) below the critical temperature
* Quartic law with density exp(-x^4/12) / Z_F at beta = 1
* Quartic law with density exp(-gamma x^2/2 - x^4/12) / Z_{F_gamma} in the critical window
* Symmetric two-point law on {-m_beta, +m_beta} above the critical temperature
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import factorial2, ndtr

from cwlab.common.exceptions import ConfigError, RegimeMismatch
from cwlab.tools.measures import (
    ModelParams,
    Regime,
    gamma_quarter,
    solve_critical_point,
)
from cwlab.tools.quadrature import SymmetricTable, tabulate_symmetric

logger = logging.getLogger(__name__)

QUARTIC_LOG_TAIL = math.log(1e-18)


class LimitKind(str, Enum):
    GAUSSIAN = "gaussian"
    QUARTIC_F = "quartic"
    QUARTIC_F_GAMMA = "quartic-gamma"
    TWO_POINT = "two-point"


def _quartic_half_width(gamma: float) -> float:
    """Radius beyond which exp(-gamma x^2/2 - x^4/12) is negligible against its peak"""
    mode = math.sqrt(max(0.0, -3.0 * gamma))
    peak = 0.75 * gamma * gamma if gamma < 0 else 0.0

    def log_f(x):
        return -gamma * x * x / 2 - x**4 / 12

    L = mode + 1.0
    # Tangent bound beyond the mode, relative to a unit-width neighbourhood of the peak
    while True:
        slope = gamma * L + L**3 / 3
        if slope > 0 and log_f(L) - math.log(slope) - peak < QUARTIC_LOG_TAIL:
            return L
        L *= 1.25


@lru_cache(maxsize=64)
def quartic_table(gamma: float = 0.0) -> SymmetricTable:
    """Tabulated density proportional to exp(-gamma x^2/2 - x^4/12)"""
    gamma = float(gamma)

    def log_density(x):
        return -gamma * np.square(x) / 2 - np.square(np.square(x)) / 12

    return tabulate_symmetric(log_density, _quartic_half_width(gamma), min_panels=512, label=f"quartic gamma={gamma:g}")


@lru_cache(maxsize=64)
def gaussian_table(variance: float) -> SymmetricTable:
    """Tabulated Gaussian, used only for expectations of test functions"""
    sigma = math.sqrt(variance)

    def log_density(x):
        return -np.square(x) / (2 * variance)

    return tabulate_symmetric(log_density, 12 * sigma, min_panels=512, label=f"gaussian var={variance:g}")


@dataclass(frozen=True)
class LimitLaw:
    """
    One limit law, optionally rescaled: the law of ``scale * Y``

    Attributes:
        kind: Which family.
        beta: Inverse temperature for the Gaussian and two-point kinds.
        gamma: Window scaling for the quartic kinds (0 for the plain quartic law).
        m_beta: Atom location of the two-point kind.
        scale: Multiplicative rescaling of the base law.
    """

    kind: LimitKind
    beta: Optional[float] = None
    gamma: float = 0.0
    m_beta: Optional[float] = None
    scale: float = 1.0
    _table: Optional[SymmetricTable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is LimitKind.GAUSSIAN and not (self.beta is not None and 0 < self.beta < 1):
            raise ConfigError(f"Gaussian limit needs 0 < beta < 1, got {self.beta}")
        if self.kind is LimitKind.TWO_POINT and not (self.m_beta is not None and 0 < self.m_beta < 1):
            raise ConfigError(f"Two-point limit needs 0 < m_beta < 1, got {self.m_beta}")
        if not self.scale > 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")
        if self._table is None:
            if self.kind in (LimitKind.QUARTIC_F, LimitKind.QUARTIC_F_GAMMA):
                object.__setattr__(self, "_table", quartic_table(float(self.gamma)))
            elif self.kind is LimitKind.GAUSSIAN:
                object.__setattr__(self, "_table", gaussian_table(self.variance))

    @property
    def variance(self) -> float:
        """Variance of the unscaled Gaussian kind"""
        return 1.0 / (1.0 - self.beta)

    @property
    def is_continuous(self) -> bool:
        return self.kind is not LimitKind.TWO_POINT

    @property
    def atoms(self) -> np.ndarray:
        """Atoms of the (scaled) law; empty for continuous kinds"""
        if self.is_continuous:
            return np.empty(0)
        return np.array([-self.m_beta, self.m_beta]) * self.scale

    @property
    def normalizer(self) -> Optional[float]:
        """Z_F or Z_{F_gamma} for the quartic kinds"""
        if self.kind in (LimitKind.QUARTIC_F, LimitKind.QUARTIC_F_GAMMA):
            return math.exp(self._table.logZ)
        return None

    @property
    def log_normalizer(self) -> Optional[float]:
        if self.kind in (LimitKind.QUARTIC_F, LimitKind.QUARTIC_F_GAMMA):
            return self._table.logZ
        return None

    def scaled(self, c: float) -> "LimitLaw":
        """Law of c * Y"""
        return replace(self, scale=self.scale * c)

    def pdf(self, x):
        """Density; None for the two-point kind"""
        if not self.is_continuous:
            return None
        y = np.asarray(x, dtype=float) / self.scale
        if self.kind is LimitKind.GAUSSIAN:
            var = self.variance
            out = np.exp(-y * y / (2 * var)) / math.sqrt(2 * math.pi * var)
        else:
            out = self._table.density(y)
        return out / self.scale

    def cdf(self, x):
        """Right-continuous CDF"""
        y = np.asarray(x, dtype=float) / self.scale
        if self.kind is LimitKind.GAUSSIAN:
            out = ndtr(y / math.sqrt(self.variance))
        elif self.is_continuous:
            out = self._table.cdf(y)
        else:
            m = self.m_beta
            out = np.where(y < -m, 0.0, np.where(y < m, 0.5, 1.0))
        return float(out) if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """Left limit of the CDF, differs from `cdf` only at atoms"""
        if self.is_continuous:
            return self.cdf(x)
        y = np.asarray(x, dtype=float) / self.scale
        m = self.m_beta
        out = np.where(y <= -m, 0.0, np.where(y <= m, 0.5, 1.0))
        return float(out) if np.ndim(out) == 0 else out

    def moment(self, k: int) -> float:
        """Raw moment of order k"""
        if k < 0:
            raise ConfigError(f"Moment order must be non-negative, got {k}")
        if k % 2 == 1:
            return 0.0
        if self.kind is LimitKind.GAUSSIAN:
            base = self.variance ** (k / 2) * (factorial2(k - 1) if k > 0 else 1.0)
        elif self.is_continuous:
            base = self._table.moment(k)
        else:
            base = self.m_beta**k
        return float(base) * self.scale**k

    def std(self) -> float:
        return math.sqrt(self.moment(2))

    def expect(self, h: Callable[[np.ndarray], np.ndarray]) -> float:
        """E[h(Y)] by quadrature, or an atom average for the two-point kind"""
        if not self.is_continuous:
            atoms = self.atoms
            return float(np.mean(h(atoms)))
        scale = self.scale
        return self._table.expect(lambda y: h(scale * y))

    def sample(self, size, rng) -> np.ndarray:
        """
        Draw from the law

        The plain quartic law uses F = B (12 Gamma_{1/4})^{1/4} with B a fair sign;
        the window law is sampled by inverse CDF on its table.
        """
        if self.kind is LimitKind.GAUSSIAN:
            out = rng.normal(0.0, math.sqrt(self.variance), size)
        elif self.kind is LimitKind.QUARTIC_F and self.gamma == 0:
            signs = 2.0 * rng.integers(0, 2, size) - 1.0
            out = signs * (12.0 * rng.gamma(0.25, 1.0, size)) ** 0.25
        elif self.is_continuous:
            out = self._table.quantile(rng.uniform(0.0, 1.0, size))
        else:
            out = (2.0 * rng.integers(0, 2, size) - 1.0) * self.m_beta
        return out * self.scale


def limit_law_for(params: ModelParams, regime: Regime) -> LimitLaw:
    """
    The limit law of the rescaled magnetisation for a regime

    Raises `RegimeMismatch` when the regime does not fit the parameters.
    """
    regime = Regime(regime)
    beta = params.beta
    has_gamma = params.gamma is not None
    if regime is Regime.SUBCRITICAL:
        if has_gamma or not beta < 1:
            raise RegimeMismatch(f"Subcritical regime needs beta < 1 without gamma, got {params.as_dict()}")
        return LimitLaw(LimitKind.GAUSSIAN, beta=beta)
    if regime is Regime.CRITICAL:
        if has_gamma or beta != 1:
            raise RegimeMismatch(f"Critical regime needs beta = 1 without gamma, got {params.as_dict()}")
        return LimitLaw(LimitKind.QUARTIC_F, gamma=0.0)
    if regime is Regime.WINDOW:
        if not has_gamma:
            raise RegimeMismatch("Window regime needs gamma")
        return LimitLaw(LimitKind.QUARTIC_F_GAMMA, gamma=float(params.gamma))
    if has_gamma or not beta > 1:
        raise RegimeMismatch(f"Supercritical regime needs beta > 1 without gamma, got {params.as_dict()}")
    _, m_beta = solve_critical_point(beta)
    return LimitLaw(LimitKind.TWO_POINT, beta=beta, m_beta=m_beta)


def regime_rescale(regime: Regime, n: int) -> float:
    """Normalisation of the magnetisation: sqrt(n), n^(3/4) or n"""
    regime = Regime(regime)
    if regime is Regime.SUBCRITICAL:
        return math.sqrt(n)
    if regime in (Regime.CRITICAL, Regime.WINDOW):
        return n**0.75
    return float(n)


def quartic_closed_form() -> float:
    """Z_F = 3^(1/4) 2^(-1/2) Gamma(1/4)"""
    return 3**0.25 * 2**-0.5 * gamma_quarter()
