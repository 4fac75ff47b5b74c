"""
Exact finite-n laws of the Curie-Weiss magnetisation

The magnetisation is the spin sum S on the lattice {-n, -n+2, ..., n}. Where a
count coordinate ``k = (S + n) / 2`` is needed the conversion goes through
`spin_to_count` / `count_to_spin`.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_expit, logsumexp

from cwlab.common.exceptions import ConfigError, NumericalError
from cwlab.tools.measures import DeFinettiMeasure, ModelParams

logger = logging.getLogger(__name__)

MAX_N = 10**6
MIXTURE_DRIFT_TOL = 1e-10
# Atoms processed per block when forming the mixture
_ATOM_BLOCK = 128


def spin_to_count(s, n: int):
    """Number of +1 spins for a spin sum s"""
    return (np.asarray(s) + n) // 2


def count_to_spin(k, n: int):
    """Spin sum for k spins up out of n"""
    return 2 * np.asarray(k) - n


def log_binomial_coefficients(n: int) -> np.ndarray:
    """log C(n, j) for j = 0..n from a table of log-factorials"""
    log_fact = gammaln(np.arange(n + 1) + 1.0)
    return log_fact[n] - log_fact - log_fact[::-1]


@dataclass(frozen=True)
class MagnetisationPMF:
    """
    Law of the spin sum on {-n, ..., n} (step 2)

    Attributes:
        n: Number of spins.
        support: Spin sums s_j = -n + 2j.
        probs: Probabilities of each atom.
        log_weights: Unnormalised log-weights behind `probs`.
    """

    n: int
    support: np.ndarray
    probs: np.ndarray
    log_weights: np.ndarray

    @classmethod
    def from_log_weights(cls, n: int, log_weights: np.ndarray) -> "MagnetisationPMF":
        log_weights = np.asarray(log_weights, dtype=float)
        probs = np.exp(log_weights - logsumexp(log_weights))
        return cls(n=n, support=count_to_spin(np.arange(n + 1), n), probs=probs, log_weights=log_weights)

    def lower_sums(self) -> np.ndarray:
        """lower[k] = P(first k atoms), k = 0..n+1"""
        return np.concatenate([[0.0], np.cumsum(self.probs)])

    def upper_sums(self) -> np.ndarray:
        """upper[k] = P(atoms k..n), k = 0..n+1"""
        return np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])

    def cdf_table(self) -> np.ndarray:
        """
        cdf[k] = P(first k atoms), k = 0..n+1

        The upper half is evaluated as one minus the upper tail to keep the
        symmetric pmf's CDF symmetric to rounding. The running maximum keeps
        the table nondecreasing across the switch.
        """
        k = np.arange(self.n + 2)
        table = np.where(2 * k <= self.n + 1, self.lower_sums(), 1.0 - self.upper_sums())
        return np.clip(np.maximum.accumulate(table), 0.0, 1.0)

    def cdf_by_count(self, k):
        """Probability of the first k atoms"""
        return self.cdf_table()[np.asarray(k)]

    def scaled_support(self, rescale: float) -> np.ndarray:
        return self.support / rescale


def exact_pmf(params: ModelParams) -> MagnetisationPMF:
    """
    Tilted law probs[j] proportional to C(n, j) exp(beta s_j^2 / (2n))

    The effective beta is used, so window parameters are supported.
    """
    n = params.n
    if n > MAX_N:
        raise ConfigError(f"n={n} exceeds the supported maximum of {MAX_N}")
    if params.mu != 0:
        raise ConfigError("The exact tilted law is implemented for mu = 0 only")
    beta = params.effective_beta()
    support = count_to_spin(np.arange(n + 1), n).astype(float)
    log_weights = log_binomial_coefficients(n) + beta * support * support / (2.0 * n)
    return MagnetisationPMF.from_log_weights(n, log_weights)


def exact_cdf(pmf: MagnetisationPMF, x, rescale: float = 1.0):
    """P(S / rescale <= x), right-continuous"""
    if not rescale > 0:
        raise ConfigError(f"rescale must be positive, got {rescale}")
    x = np.asarray(x, dtype=float)
    k = np.searchsorted(pmf.scaled_support(rescale), x, side="right")
    out = pmf.cdf_by_count(k)
    return float(out) if out.ndim == 0 else out


def exact_cdf_left(pmf: MagnetisationPMF, x, rescale: float = 1.0):
    """P(S / rescale < x)"""
    if not rescale > 0:
        raise ConfigError(f"rescale must be positive, got {rescale}")
    x = np.asarray(x, dtype=float)
    k = np.searchsorted(pmf.scaled_support(rescale), x, side="left")
    out = pmf.cdf_by_count(k)
    return float(out) if out.ndim == 0 else out


def exact_moment(pmf: MagnetisationPMF, k: int) -> float:
    """E[S^k] as an exact lattice sum"""
    if k < 0:
        raise ConfigError(f"Moment order must be non-negative, got {k}")
    values = pmf.probs * pmf.support.astype(float) ** k
    return math.fsum(values)


def mixture_pmf(params: ModelParams, mix: DeFinettiMeasure) -> MagnetisationPMF:
    """
    Spin-sum law as a De Finetti mixture of binomials

    probs[j] = integral of C(n, j) psi(x)^j (1 - psi(x))^(n - j) over the mixing law,
    evaluated with the quadrature rule of `mix` in log-space.
    """
    if mix.params.n != params.n or mix.params.effective_beta() != params.effective_beta():
        raise ConfigError(f"Mixing law built for {mix.params.as_dict()} used with {params.as_dict()}")
    n = params.n
    nodes = mix.nodes
    log_mass = mix.node_log_mass
    log_up = log_expit(2.0 * nodes)
    log_down = log_expit(-2.0 * nodes)
    log_coeff = log_binomial_coefficients(n)

    log_probs = np.empty(n + 1)
    for start in range(0, n + 1, _ATOM_BLOCK):
        j = np.arange(start, min(start + _ATOM_BLOCK, n + 1))
        terms = j[:, None] * log_up[None, :] + (n - j)[:, None] * log_down[None, :] + log_mass[None, :]
        log_probs[j] = log_coeff[j] + logsumexp(terms, axis=1)

    total = math.fsum(np.exp(log_probs))
    drift = abs(total - 1.0)
    logger.debug("Mixture pmf for %s: renormalisation drift %.3e", params.as_dict(), drift)
    if not drift < MIXTURE_DRIFT_TOL:
        raise NumericalError(f"Mixture renormalisation drift {drift:.3e} exceeds {MIXTURE_DRIFT_TOL}")
    return MagnetisationPMF.from_log_weights(n, log_probs)


def enumerate_pmf(params: ModelParams) -> MagnetisationPMF:
    """Brute force over all 2^n configurations, for small n only"""
    n = params.n
    if n > 20:
        raise ConfigError(f"Enumeration over 2^{n} configurations is not supported")
    beta = params.effective_beta()
    configs = np.arange(2**n)
    ups = np.zeros(2**n, dtype=int)
    for bit in range(n):
        ups += (configs >> bit) & 1
    sums = count_to_spin(ups, n).astype(float)
    weights = np.exp(beta * sums * sums / (2.0 * n))
    probs = np.bincount(ups, weights=weights, minlength=n + 1)
    return MagnetisationPMF.from_log_weights(n, np.log(probs))
