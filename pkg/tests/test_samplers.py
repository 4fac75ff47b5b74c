"""
Tests for the random streams and samplers
"""
import math
import warnings

import numpy as np
import pytest

from cwlab.common.exceptions import ConfigError
from cwlab.tools.exact import exact_pmf
from cwlab.tools.measures import ModelParams, build_definetti, solve_critical_point
from cwlab.tools.metrics import empirical_total_variation, kolmogorov_empirical
from cwlab.tools.samplers import (
    RngStream,
    coupling_mean_square,
    coupling_rho,
    fixed_point_chain,
    sample_coupled_F_pair,
    sample_coupled_pair,
    sample_coupled_pairs,
    sample_exact_spins,
    sample_magnetisation,
    sample_poisson_surrogate,
    sample_surrogate,
    sample_T,
    sample_X,
    surrogate_cdf,
    surrogate_interval_mass,
)

from .common import coupled_square_error, standard_error


def test_rng_stream_reproducible():
    first = RngStream(7).uniform(size=5)
    second = RngStream(7).uniform(size=5)
    assert np.array_equal(first, second)
    child_a = RngStream(7).split(3).normal(size=5)
    child_b = RngStream(7).split(3).normal(size=5)
    assert np.array_equal(child_a, child_b)
    assert not np.array_equal(RngStream(7).split(4).normal(size=5), child_a)
    assert RngStream(7).split(3).split(1).spawn_key == (3, 1)
    assert "seed=7" in repr(RngStream(7))
    with pytest.raises(ConfigError):
        RngStream(-1)


def test_sample_x_and_t(subcritical_mix, rng):
    _, mix = subcritical_mix
    x = sample_X(mix, rng, 20000)
    assert np.all(np.abs(x) <= mix.half_width)
    second = mix.x_moment(2)
    assert np.mean(x**2) == pytest.approx(second, rel=0.05)
    t = sample_T(mix, rng, 10)
    assert np.all(np.abs(t) < 1)
    assert isinstance(sample_X(mix, rng), float)


def test_exact_spins(subcritical_mix, rng):
    params, mix = subcritical_mix
    spins, total = sample_exact_spins(params, mix, rng)
    assert spins.dtype == np.int8
    assert spins.shape == (params.n,)
    assert set(np.unique(spins)) <= {-1, 1}
    assert total == int(spins.sum())


def test_magnetisation_law(rng):
    """Mixture draws follow the exact law"""
    params = ModelParams(n=10, beta=0.8)
    mix = build_definetti(params)
    draws = sample_magnetisation(params, mix, rng, 200000)
    assert np.all((draws + params.n) % 2 == 0)
    assert empirical_total_variation(draws, exact_pmf(params)) < 0.01


def test_surrogate_cdf(subcritical_mix, rng):
    params, mix = subcritical_mix
    scale = math.sqrt(params.n)
    y = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    values = surrogate_cdf(params, mix, y, scale)
    assert np.all(np.diff(values) > 0)
    assert values[2] == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(values + values[::-1], 1.0, atol=1e-12)
    assert isinstance(surrogate_cdf(params, mix, 0.3, scale), float)

    mass = surrogate_interval_mass(params, mix, -0.5, 1.0, scale)
    expected = surrogate_cdf(params, mix, 1.0, scale) - surrogate_cdf(params, mix, -0.5, scale)
    assert mass == pytest.approx(expected, abs=1e-12)
    assert surrogate_interval_mass(params, mix, 1.0, 0.5, scale) == 0.0

    # Agrees with Monte-Carlo draws of the surrogate
    draws = sample_surrogate(params, mix, rng, 4000) / scale
    assert kolmogorov_empirical(draws, lambda v: surrogate_cdf(params, mix, v, scale)) < 0.035

    with pytest.raises(ConfigError):
        surrogate_cdf(params, mix, 0.0, rescale=-1.0)


def test_poisson_surrogate(subcritical_mix, rng):
    params, mix = subcritical_mix
    draws = sample_poisson_surrogate(params, mix, rng, 50000)
    assert np.all(draws >= 0)
    # E[n P] = n / 2 by symmetry
    assert np.mean(draws) == pytest.approx(params.n / 2, abs=5 * standard_error(params.n, 50000))


def test_sample_t_within_ks_band(subcritical_mix):
    _, mix = subcritical_mix
    size = 20000
    draws = sample_T(mix, RngStream(8), size)
    statistic = kolmogorov_empirical(draws, lambda t: mix.scaled_t_cdf(t, 1.0))
    # 1% critical value of the one-sample KS statistic, plus the tabulation error
    assert statistic < 1.63 / math.sqrt(size) + 1e-3


def test_surrogate_variance_below_critical():
    """sqrt(n) T is close to N(0, 1) and G sech X to N(0, 1), so M/sqrt(n) has variance 2"""
    params = ModelParams(n=10**4, beta=0.5)
    draws = sample_surrogate(params, build_definetti(params), RngStream(9), 200000) / math.sqrt(params.n)
    assert np.var(draws) == pytest.approx(2.0, rel=0.03)


def test_surrogate_mean_modulus_above_critical():
    params = ModelParams(n=10**4, beta=2.0)
    draws = sample_surrogate(params, build_definetti(params), RngStream(10), 100000) / params.n
    _, m_beta = solve_critical_point(2.0)
    assert m_beta == pytest.approx(0.95750, abs=1e-5)
    assert np.mean(np.abs(draws)) == pytest.approx(m_beta, abs=5e-3)


def test_poisson_surrogate_overdispersed():
    """Mixing over P makes the variance exceed the mean"""
    params = ModelParams(n=400, beta=1.5)
    draws = sample_poisson_surrogate(params, build_definetti(params), RngStream(12), 20000)
    assert np.var(draws) > 2 * np.mean(draws)


def test_coupled_pair(rng):
    pair = sample_coupled_pair(0.3, 0.6, 25, rng)
    assert pair.s_p <= pair.s_q
    assert pair.shared_uniform_count == 25
    with pytest.raises(ConfigError):
        sample_coupled_pair(0.0, 0.5, 10, rng)


@pytest.mark.parametrize("p,q", [(0.2, 0.5), (0.7, 0.4), (0.5, 0.5), (0.1, 0.9)])
def test_coupling_mean_square(p, q, rng):
    """E[(centred S(p) - centred S(q))^2] = n 4|p-q|(1-|p-q|)"""
    n, size = 10, 100000
    s_p, s_q = sample_coupled_pairs(p, q, n, size, rng)
    if p <= q:
        assert np.all(s_p <= s_q)
    else:
        assert np.all(s_p >= s_q)
    diff = (s_p - n * (2 * p - 1)) - (s_q - n * (2 * q - 1))
    target = n * coupling_mean_square(p, q)
    assert np.mean(diff**2) == pytest.approx(target, abs=5 * coupled_square_error(p, q, n, size) + 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize(
    "p,q",
    [(0.2, 0.5), (0.7, 0.4), (0.5, 0.5), (0.1, 0.9), (0.3, 0.35), (0.45, 0.55), (0.05, 0.6), (0.8, 0.25), (0.6, 0.65), (0.15, 0.3)],
)
def test_coupling_mean_square_million_draws(p, q):
    n, size = 10, 10**6
    s_p, s_q = sample_coupled_pairs(p, q, n, size, RngStream(17))
    diff = (s_p - n * (2 * p - 1)) - (s_q - n * (2 * q - 1))
    target = n * coupling_mean_square(p, q)
    assert np.mean(diff**2) == pytest.approx(target, abs=4 * coupled_square_error(p, q, n, size) + 1e-12)


def test_coupling_constants():
    assert coupling_rho(0.5, 0.5) == pytest.approx(1.0)
    assert coupling_rho(0.3, 0.6) == pytest.approx(4 * (0.3 - 0.18))
    assert coupling_mean_square(0.2, 0.2) == 0.0
    assert coupling_mean_square(0.2, 0.7) == pytest.approx(1.0)


def test_fixed_point_chain():
    params = ModelParams(n=20, beta=0.8)
    trajectory = fixed_point_chain(params, 200000, rng=RngStream(11))
    assert trajectory.dtype == np.int64
    assert np.all((trajectory + params.n) % 2 == 0)
    assert empirical_total_variation(trajectory, exact_pmf(params)) < 0.03
    again = fixed_point_chain(params, 1000, rng=RngStream(11))
    assert np.array_equal(again, fixed_point_chain(params, 1000, rng=RngStream(11)))


def test_fixed_point_chain_edge_cases():
    params = ModelParams(n=10, beta=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert fixed_point_chain(params, 0, rng=RngStream(0)).size == 0
    with pytest.warns(UserWarning, match="burn-in"):
        fixed_point_chain(params, 5, rng=RngStream(0))
    with pytest.raises(ConfigError):
        fixed_point_chain(params, -1)


@pytest.mark.slow
@pytest.mark.parametrize("beta,tolerance", [(0.8, 0.01), (1.5, 0.02)])
def test_fixed_point_chain_stationary(beta, tolerance):
    params = ModelParams(n=20, beta=beta)
    trajectory = fixed_point_chain(params, 10**6, rng=RngStream(0))
    assert empirical_total_variation(trajectory, exact_pmf(params)) < tolerance


def test_coupled_f_pair(rng):
    params = ModelParams(n=10000, beta=1.0)
    mix = build_definetti(params)
    pair = sample_coupled_F_pair(params, mix, rng, 2000)
    quarter = params.n**0.25
    assert np.allclose(pair.f - pair.f_prime, pair.g / quarter)
    assert np.allclose(pair.q, 0.5 * (1 + pair.f / quarter))
    assert pair.in_range.all()
    with pytest.raises(ConfigError):
        sample_coupled_F_pair(ModelParams(n=100, beta=0.5), build_definetti(ModelParams(n=100, beta=0.5)), rng)


def test_coupled_f_pair_small_n():
    """At small n the shift can push P out of [0, 1]; |P - Q| <= 1/2 still holds"""
    params = ModelParams(n=4, beta=1.0)
    with pytest.warns(UserWarning, match="outside"):
        pair = sample_coupled_F_pair(params, build_definetti(params), RngStream(4), 1000)
    assert np.all(np.abs(pair.p - pair.q) <= 0.5 + 1e-12)
    assert not pair.in_range.all()
    assert np.array_equal(pair.in_range, (pair.p >= 0) & (pair.p <= 1))
    assert np.all((pair.q >= 0) & (pair.q <= 1))


def test_coupled_f_pair_moments():
    """E[F' - F] = 0 and sqrt(n) E[(F' - F)^2] = E[G^2; |G| <= sqrt(n)]"""
    params = ModelParams(n=10**4, beta=1.0)
    size = 10**6
    pair = sample_coupled_F_pair(params, build_definetti(params), RngStream(6), size)
    shift = pair.f_prime - pair.f
    sigma = params.n**-0.25
    assert abs(np.mean(shift)) < 4 * sigma / math.sqrt(size)
    assert math.sqrt(params.n) * np.mean(shift**2) == pytest.approx(1.0, abs=4 * math.sqrt(2.0 / size))
