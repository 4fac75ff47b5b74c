"""
Composite Gauss-Legendre quadrature for symmetric log-densities

The densities handled here (De Finetti mixing laws, quartic and Gaussian
limits) are smooth, even and known only up to normalisation through their
logarithm. They are tabulated on ``[-L, L]`` with equal panels, each carrying a
fixed Gauss-Legendre rule, and the panel count is doubled until the normaliser
and the second moment are stable.
"""
import logging
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from cwlab.common.exceptions import ConfigError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 20
DEFAULT_RTOL = 1e-12
MAX_DOUBLINGS = 12

LogDensity = Callable[[np.ndarray], np.ndarray]


def panel_nodes(edges: np.ndarray, order: int = DEFAULT_ORDER):
    """
    Gauss-Legendre nodes and weights for every panel

    Args:
        edges: Increasing panel edges, ``P + 1`` values.
        order: Number of nodes per panel.

    Returns:
        A tuple of ``(nodes, weights)`` both with shape ``(P, order)``.
    """
    ref_nodes, ref_weights = leggauss(order)
    left = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = left + half * (ref_nodes[None, :] + 1.0)
    weights = half * ref_weights[None, :]
    return nodes, weights


def log_integral(log_values: np.ndarray, weights: np.ndarray) -> float:
    """Log of sum(weights * exp(log_values)) with a max shift"""
    return float(logsumexp(log_values, b=weights))


class SymmetricTable:
    """
    Tabulated, normalised, even density on ``[-half_width, half_width]``

    The density is stored through its unnormalised logarithm at the quadrature
    nodes. Masses of the panels give the CDF at the panel edges, which is
    symmetrised so that ``cdf(-x) + cdf(x) = 1`` holds to rounding.
    """

    def __init__(self, log_density: LogDensity, half_width: float, panels: int, order: int = DEFAULT_ORDER):
        self.log_density = log_density
        self.half_width = float(half_width)
        self.panels = int(panels)
        self.order = int(order)
        self.edges = np.linspace(-self.half_width, self.half_width, self.panels + 1)
        self.nodes, self.weights = panel_nodes(self.edges, self.order)
        self.node_log_density = np.asarray(log_density(self.nodes), dtype=float)
        if not np.all(np.isfinite(self.node_log_density)):
            raise NumericalError("Non-finite log-density encountered on the quadrature nodes")
        self.logZ = log_integral(self.node_log_density, self.weights)
        if not np.isfinite(self.logZ):
            raise NumericalError(f"Non-finite normaliser (log Z = {self.logZ})")

        # Probability carried by each node
        self.node_mass = self.weights * np.exp(self.node_log_density - self.logZ)
        cum = np.concatenate([[0.0], np.cumsum(self.node_mass.sum(axis=1))])
        self.edge_cdf = 0.5 * (cum + 1.0 - cum[::-1])
        self._quantile = None

    @property
    def edge_log_density(self) -> np.ndarray:
        """Unnormalised log-density at the panel edges"""
        return np.asarray(self.log_density(self.edges), dtype=float)

    def density(self, x):
        """Normalised density, evaluated in closed form"""
        x = np.asarray(x, dtype=float)
        return np.exp(self.log_density(x) - self.logZ)

    def expect(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        """Expectation of a vectorised function under the tabulated law"""
        values = np.asarray(func(self.nodes), dtype=float)
        return float(np.sum(self.node_mass * values))

    def moment(self, k: int) -> float:
        """Raw moment of order k; odd moments vanish by symmetry"""
        if k % 2 == 1:
            return 0.0
        return self.expect(lambda x: x**k)

    def _cdf_nonpositive(self, x: np.ndarray) -> np.ndarray:
        """CDF for x <= 0 from the edge values plus a partial panel rule"""
        out = np.zeros_like(x)
        inside = x > self.edges[0]
        if not np.any(inside):
            return out
        xin = x[inside]
        idx = np.clip(np.searchsorted(self.edges, xin, side="right") - 1, 0, self.panels - 1)
        left = self.edges[idx]
        ref_nodes, ref_weights = leggauss(self.order)
        half = 0.5 * (xin - left)
        nodes = left[:, None] + half[:, None] * (ref_nodes[None, :] + 1.0)
        partial = np.sum(
            half[:, None] * ref_weights[None, :] * np.exp(self.log_density(nodes) - self.logZ),
            axis=1,
        )
        out[inside] = self.edge_cdf[idx] + partial
        return out

    def cdf(self, x):
        """CDF at arbitrary points; exactly antisymmetric about 1/2"""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        neg = x <= 0
        out[neg] = self._cdf_nonpositive(x[neg])
        out[~neg] = 1.0 - self._cdf_nonpositive(-x[~neg])
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def quantile(self, u):
        """Inverse CDF by monotone cubic interpolation of the edge CDF"""
        if self._quantile is None:
            values, first = np.unique(self.edge_cdf, return_index=True)
            self._quantile = PchipInterpolator(values, self.edges[first], extrapolate=False)
        out = self._quantile(np.clip(u, self.edge_cdf[0], self.edge_cdf[-1]))
        return out


def tabulate_symmetric(
    log_density: LogDensity,
    half_width: float,
    min_panels: int = 1024,
    order: int = DEFAULT_ORDER,
    rtol: float = DEFAULT_RTOL,
    max_doublings: int = MAX_DOUBLINGS,
    label: Optional[str] = None,
) -> SymmetricTable:
    """
    Tabulate an even density, doubling the panels until converged

    Convergence requires the normaliser and the second moment to change by no
    more than ``rtol`` (relative) between two successive doublings.

    Args:
        log_density: Vectorised unnormalised log-density.
        half_width: Truncation radius L.
        min_panels: Number of panels of the first pass.
        order: Gauss-Legendre nodes per panel.
        rtol: Relative tolerance of the doubling test.
        max_doublings: Give up after this many doublings.
        label: Name used in log messages.

    Returns:
        The converged `SymmetricTable`.
    """
    if min_panels < 1:
        raise ConfigError(f"At least one panel is needed, got {min_panels}")
    label = label or "density"
    table = SymmetricTable(log_density, half_width, min_panels, order)
    second = table.moment(2)
    for doubling in range(1, max_doublings + 1):
        finer = SymmetricTable(log_density, half_width, table.panels * 2, order)
        finer_second = finer.moment(2)
        dz = abs(np.expm1(finer.logZ - table.logZ))
        dm = abs(finer_second - second) / abs(finer_second) if finer_second != 0 else 0.0
        logger.debug("%s: %d panels, dZ=%.3e, dm2=%.3e", label, finer.panels, dz, dm)
        if dz <= rtol and dm <= rtol:
            logger.info("%s converged with %d panels after %d doublings", label, finer.panels, doubling)
            return finer
        table, second = finer, finer_second
    raise NumericalError(f"{label}: quadrature not converged after {max_doublings} doublings ({table.panels} panels)")
