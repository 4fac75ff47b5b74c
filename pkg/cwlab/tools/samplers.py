"""
Seedable samplers for the De Finetti randomisation, the spins, the surrogates,
the totally dependent coupling and the fixed-point Markov chain
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple
from warnings import warn

import numpy as np
from scipy.special import ndtr

from cwlab.common.exceptions import ConfigError, InternalError, NumericalError
from cwlab.tools.measures import DeFinettiMeasure, ModelParams, logistic

logger = logging.getLogger(__name__)

# Evaluation points per block in the surrogate CDF
_Y_BLOCK = 32


class RngStream:
    """
    Reproducible random stream on top of numpy's PCG64

    Sub-streams are derived by indexed splitting through `SeedSequence` spawn
    keys, so ``RngStream(s).split(i)`` is the same stream in every process.
    A stream must not be shared between threads.
    """

    def __init__(self, seed: int = 0, spawn_key: Tuple[int, ...] = ()):
        if int(seed) < 0 or int(seed) >= 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def split(self, index: int) -> "RngStream":
        """Independent child stream number ``index``"""
        return RngStream(self.seed, self.spawn_key + (int(index),))

    def __repr__(self):
        return f"RngStream<seed={self.seed}, key={self.spawn_key}>"

    # Thin delegation to the generator
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def binomial(self, n, p, size=None):
        return self.generator.binomial(n, p, size)

    def poisson(self, lam, size=None):
        return self.generator.poisson(lam, size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def multinomial(self, n, pvals, size=None):
        return self.generator.multinomial(n, pvals, size)


def sample_X(mix: DeFinettiMeasure, rng: RngStream, size=None):
    """Inverse-CDF draw of the mixing variable in x-coordinates"""
    u = rng.uniform(0.0, 1.0, size)
    x = mix.quantile(u)
    return float(x) if np.ndim(x) == 0 else x


def sample_T(mix: DeFinettiMeasure, rng: RngStream, size=None):
    """Draw T = tanh(X) from nu_{n,beta}"""
    return np.tanh(sample_X(mix, rng, size))


def sample_exact_spins(params: ModelParams, mix: DeFinettiMeasure, rng: RngStream):
    """
    One configuration of spins through the mixture

    Returns:
        ``(spins, magnetisation)`` with spins an int8 vector of +/-1.
    """
    p = float(logistic(sample_X(mix, rng)))
    spins = np.where(rng.uniform(0.0, 1.0, params.n) < p, 1, -1).astype(np.int8)
    return spins, int(spins.sum(dtype=np.int64))


def sample_magnetisation(params: ModelParams, mix: DeFinettiMeasure, rng: RngStream, size=None):
    """Magnetisation draws 2 Bin(n, P) - n, the same law as summing `sample_exact_spins`"""
    p = logistic(sample_X(mix, rng, size))
    return 2 * rng.binomial(params.n, p) - params.n


def sample_surrogate(params: ModelParams, mix: DeFinettiMeasure, rng: RngStream, size=None):
    """Surrogate magnetisation sqrt(n) G sqrt(1 - T^2) + n T"""
    n = params.n
    x = sample_X(mix, rng, size)
    g = rng.normal(0.0, 1.0, size)
    return math.sqrt(n) * g / np.cosh(x) + n * np.tanh(x)


def sample_poisson_surrogate(params: ModelParams, mix: DeFinettiMeasure, rng: RngStream, size=None):
    """Poisson surrogate Po(n P)"""
    p = logistic(sample_X(mix, rng, size))
    return rng.poisson(params.n * p)


def _surrogate_z(params: ModelParams, mix: DeFinettiMeasure, y, rescale: float):
    """Standardised arguments (y rescale - n t_i) / (sqrt(n) sech x_i), shape (len(y), nodes)"""
    n = params.n
    nodes = mix.nodes
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return (y[:, None] * rescale - n * np.tanh(nodes)[None, :]) * np.cosh(nodes)[None, :] / math.sqrt(n)


def surrogate_cdf(params: ModelParams, mix: DeFinettiMeasure, x, rescale: float = 1.0):
    """
    P(M_hat / rescale <= x) by quadrature over the mixing law

    Conditionally on X the surrogate is Gaussian, so the CDF is the mixture
    of Phi((x rescale - n tanh X) cosh X / sqrt(n)).
    """
    if not rescale > 0:
        raise ConfigError(f"rescale must be positive, got {rescale}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    flat = np.atleast_1d(x).ravel()
    mass = mix.node_mass
    # Negative side directly, positive side by symmetry of the law
    neg = -np.abs(flat)
    lower = np.empty_like(neg)
    for start in range(0, len(neg), _Y_BLOCK):
        block = slice(start, start + _Y_BLOCK)
        lower[block] = ndtr(_surrogate_z(params, mix, neg[block], rescale)) @ mass
    out = np.where(flat <= 0, lower, 1.0 - lower)
    if not np.all(np.isfinite(out)):
        raise NumericalError("Non-finite surrogate CDF")
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(x))
    return float(out) if scalar else out


def surrogate_interval_mass(params: ModelParams, mix: DeFinettiMeasure, a: float, b: float, rescale: float = 1.0) -> float:
    """
    P(a < M_hat / rescale <= b) without cancellation

    Per node, upper Gaussian tails are differenced when both arguments are
    positive.
    """
    if b <= a:
        return 0.0
    za = _surrogate_z(params, mix, a, rescale)[0]
    zb = _surrogate_z(params, mix, b, rescale)[0]
    upper = za > 0
    cell = np.where(upper, ndtr(-za) - ndtr(-zb), ndtr(zb) - ndtr(za))
    return float(np.sum(mix.node_mass * cell))


@dataclass(frozen=True)
class CoupledPair:
    """Spin sums of a totally dependent coupling driven by the same uniforms"""

    p: float
    q: float
    s_p: int
    s_q: int
    shared_uniform_count: int


def _check_probability(name, value):
    if not 0 < value < 1:
        raise ConfigError(f"{name} must lie in (0, 1), got {value}")


def sample_coupled_pair(p: float, q: float, n: int, rng: RngStream) -> CoupledPair:
    """S_n(p) and S_n(q) with B_k(p) = 2 1{U_k < p} - 1 on shared uniforms"""
    _check_probability("p", p)
    _check_probability("q", q)
    u = rng.uniform(0.0, 1.0, n)
    s_p = 2 * int(np.count_nonzero(u < p)) - n
    s_q = 2 * int(np.count_nonzero(u < q)) - n
    return CoupledPair(p=p, q=q, s_p=s_p, s_q=s_q, shared_uniform_count=n)


def sample_coupled_pairs(p: float, q: float, n: int, size: int, rng: RngStream):
    """
    Vectorised coupling via the multinomial split of the shared uniforms

    The n uniforms fall into {U < p^q}, {p^q <= U < p v q} and {U >= p v q}.

    Returns:
        Arrays ``(s_p, s_q)`` of length ``size``.
    """
    _check_probability("p", p)
    _check_probability("q", q)
    low, high = min(p, q), max(p, q)
    counts = rng.multinomial(n, [low, high - low, 1.0 - high], size=size)
    below_low = counts[:, 0]
    below_high = counts[:, 0] + counts[:, 1]
    if p <= q:
        return 2 * below_low - n, 2 * below_high - n
    return 2 * below_high - n, 2 * below_low - n


def coupling_rho(p: float, q: float) -> float:
    """Covariance of coupled spins: 4 (p^q - p q)"""
    return 4.0 * (min(p, q) - p * q)


def coupling_mean_square(p: float, q: float) -> float:
    """E[(centred B(p) - centred B(q))^2] = 4 |p - q| (1 - |p - q|)"""
    d = abs(p - q)
    return 4.0 * d * (1.0 - d)


def fixed_point_chain(params: ModelParams, steps: int, burn_in: Optional[int] = None, rng: Optional[RngStream] = None) -> np.ndarray:
    """
    Markov chain whose stationary law is the magnetisation

    Iterates M_{k+1} = 2 Bin(n, psi(sqrt(beta/n) G_k + mu + beta M_k / n)) - n
    from M_0 = 2 Bin(n, 1/2) - n, in spin-sum coordinates.

    Args:
        params: Model; the effective beta and mu are used.
        steps: Number of recorded steps after burn-in.
        burn_in: Discarded steps, 10 n by default.
        rng: Random stream.

    Returns:
        The post-burn-in trajectory as an int64 array.
    """
    if steps < 0:
        raise ConfigError(f"steps must be non-negative, got {steps}")
    n = params.n
    if burn_in is None:
        burn_in = 10 * n
    if burn_in < 0:
        raise ConfigError(f"burn_in must be non-negative, got {burn_in}")
    if 0 < steps < burn_in:
        warn(f"Chain run of {steps} steps is shorter than its burn-in of {burn_in}", UserWarning)
    rng = rng or RngStream(0)
    beta = params.effective_beta()
    mu = params.mu
    total = burn_in + steps

    gen = rng.generator
    noise = math.sqrt(beta / n) * gen.normal(0.0, 1.0, total) + mu
    feedback = beta / n
    trajectory = np.empty(steps, dtype=np.int64)
    state = 2 * int(gen.binomial(n, 0.5)) - n
    binomial = gen.binomial
    for k in range(total):
        p = 0.5 * (1.0 + math.tanh(noise[k] + feedback * state))
        state = 2 * int(binomial(n, p)) - n
        if k >= burn_in:
            trajectory[k - burn_in] = state
    logger.debug("Chain %s: %d steps after %d burn-in", params.as_dict(), steps, burn_in)
    return trajectory


@dataclass(frozen=True)
class CoupledFPair:
    """Coupled pair (F_n, F_n') with the Gaussian driving it and the induced (P, Q)"""

    f: np.ndarray
    f_prime: np.ndarray
    g: np.ndarray
    p: np.ndarray
    q: np.ndarray
    in_range: np.ndarray


def sample_coupled_F_pair(params: ModelParams, mix: DeFinettiMeasure, rng: RngStream, size=None) -> CoupledFPair:
    """
    F_n = n^(1/4) T and F_n' = F_n - G n^(-1/4) 1{|G| <= sqrt(n)}

    Only meaningful at or inside the critical window. The induced
    P = (1 + F_n' n^(-1/4)) / 2 and Q = (1 + F_n n^(-1/4)) / 2 satisfy
    |P - Q| <= 1/2 by the indicator, but P itself can leave [0, 1] when n is
    small. Such draws are kept and flagged in ``in_range``, and a UserWarning
    reports their count.
    """
    beta = params.effective_beta()
    if params.gamma is None and beta != 1:
        raise ConfigError(f"The F coupling needs beta = 1 or window parameters, got {params.as_dict()}")
    n = params.n
    quarter = n**0.25
    t = np.atleast_1d(sample_T(mix, rng, size))
    g = np.atleast_1d(rng.normal(0.0, 1.0, size))
    f = quarter * t
    f_prime = f - g / quarter * (np.abs(g) <= math.sqrt(n))
    p = 0.5 * (1.0 + f_prime / quarter)
    q = 0.5 * (1.0 + t)
    if np.any(np.abs(p - q) > 0.5 + 1e-12):
        raise InternalError(f"Coupled draws with |P - Q| > 1/2 for {params.as_dict()}")
    in_range = (p >= 0) & (p <= 1)
    outside = int(np.count_nonzero(~in_range))
    if outside:
        warn(f"{outside} of {p.size} coupled draws have P outside [0, 1] for {params.as_dict()}", UserWarning)
    return CoupledFPair(f=f, f_prime=f_prime, g=g, p=p, q=q, in_range=in_range)
