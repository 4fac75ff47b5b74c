"""
Tests for the limit laws
"""
import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_function

from cwlab.common.exceptions import ConfigError, RegimeMismatch
from cwlab.tools.limits import (
    LimitKind,
    LimitLaw,
    limit_law_for,
    quartic_closed_form,
    quartic_table,
    regime_rescale,
)
from cwlab.tools.measures import ModelParams, Regime, solve_critical_point
from cwlab.tools.samplers import RngStream

from .common import standard_error


def test_quartic_normaliser():
    """Z_F = 3^(1/4) 2^(-1/2) Gamma(1/4)"""
    law = LimitLaw(LimitKind.QUARTIC_F)
    assert quartic_closed_form() == pytest.approx(3**0.25 / math.sqrt(2) * gamma_function(0.25), rel=1e-13)
    assert law.normalizer == pytest.approx(quartic_closed_form(), rel=1e-11)
    # Second moment: E[F^2] = sqrt(12) Gamma(3/4) / Gamma(1/4)
    assert law.moment(2) == pytest.approx(math.sqrt(12) * gamma_function(0.75) / gamma_function(0.25), rel=1e-10)


def test_window_laws():
    """gamma = 0 is the plain quartic law; positive gamma narrows it"""
    plain = LimitLaw(LimitKind.QUARTIC_F)
    zero = LimitLaw(LimitKind.QUARTIC_F_GAMMA, gamma=0.0)
    assert zero.normalizer == plain.normalizer
    narrow = LimitLaw(LimitKind.QUARTIC_F_GAMMA, gamma=1.0)
    wide = LimitLaw(LimitKind.QUARTIC_F_GAMMA, gamma=-1.0)
    assert narrow.moment(2) < plain.moment(2) < wide.moment(2)
    # Negative gamma gives a bimodal density
    assert wide.pdf(math.sqrt(3.0)) > wide.pdf(0.0)
    assert quartic_table(-1.0) is quartic_table(-1.0)


def test_gaussian_law():
    law = LimitLaw(LimitKind.GAUSSIAN, beta=0.5)
    assert law.variance == 2.0
    assert law.moment(2) == pytest.approx(2.0)
    assert law.moment(4) == pytest.approx(12.0)
    assert law.moment(3) == 0.0
    assert law.cdf(0.0) == 0.5
    assert law.pdf(0.0) == pytest.approx(1 / math.sqrt(4 * math.pi))
    assert law.expect(lambda y: y**2) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(ConfigError):
        LimitLaw(LimitKind.GAUSSIAN, beta=1.0)


def test_two_point_law():
    _, m_beta = solve_critical_point(2.0)
    law = LimitLaw(LimitKind.TWO_POINT, beta=2.0, m_beta=m_beta)
    assert not law.is_continuous
    assert law.pdf(0.0) is None
    assert np.allclose(law.atoms, [-m_beta, m_beta])
    assert law.cdf(m_beta) == 1.0
    assert law.cdf_left(m_beta) == 0.5
    assert law.cdf(-m_beta) == 0.5
    assert law.cdf_left(-m_beta) == 0.0
    assert law.cdf(0.0) == 0.5
    assert law.moment(2) == pytest.approx(m_beta**2)
    assert law.expect(lambda y: y) == 0.0


def test_scaling():
    law = LimitLaw(LimitKind.QUARTIC_F)
    scaled = law.scaled(2.5)
    y = np.array([-1.0, 0.3, 2.0])
    assert np.allclose(scaled.cdf(2.5 * y), law.cdf(y))
    assert scaled.std() == pytest.approx(2.5 * law.std())
    assert scaled.pdf(0.0) == pytest.approx(law.pdf(0.0) / 2.5)


def test_limit_law_for():
    assert limit_law_for(ModelParams(n=10, beta=0.3), Regime.SUBCRITICAL).kind is LimitKind.GAUSSIAN
    assert limit_law_for(ModelParams(n=10, beta=1.0), Regime.CRITICAL).kind is LimitKind.QUARTIC_F
    window = limit_law_for(ModelParams(n=10, gamma=-0.5), Regime.WINDOW)
    assert window.kind is LimitKind.QUARTIC_F_GAMMA
    assert window.gamma == -0.5
    two_point = limit_law_for(ModelParams(n=10, beta=2.0), "supercritical")
    assert two_point.m_beta == pytest.approx(0.95750, abs=1e-5)

    with pytest.raises(RegimeMismatch):
        limit_law_for(ModelParams(n=10, beta=2.0), Regime.SUBCRITICAL)
    with pytest.raises(ConfigError):
        limit_law_for(ModelParams(n=10, beta=0.5), Regime.WINDOW)
    with pytest.raises(RegimeMismatch):
        limit_law_for(ModelParams(n=10, beta=0.5), Regime.SUPERCRITICAL)


def test_regime_rescale():
    assert regime_rescale(Regime.SUBCRITICAL, 100) == 10.0
    assert regime_rescale(Regime.CRITICAL, 16) == pytest.approx(8.0)
    assert regime_rescale(Regime.WINDOW, 16) == pytest.approx(8.0)
    assert regime_rescale(Regime.SUPERCRITICAL, 16) == 16.0


def test_quartic_sampler():
    """The Gamma representation reproduces the second moment of F"""
    law = LimitLaw(LimitKind.QUARTIC_F)
    size = 200000
    draws = law.sample(size, RngStream(3))
    second = law.moment(2)
    variance = law.moment(4) - second**2
    assert np.mean(draws**2) == pytest.approx(second, abs=5 * standard_error(variance, size))
    assert abs(np.mean(draws)) < 5 * standard_error(second, size)


@pytest.mark.parametrize(
    "law",
    [
        LimitLaw(LimitKind.GAUSSIAN, beta=0.5),
        LimitLaw(LimitKind.QUARTIC_F_GAMMA, gamma=1.0),
    ],
)
def test_continuous_samplers(law):
    size = 100000
    draws = law.sample(size, RngStream(5))
    second = law.moment(2)
    variance = law.moment(4) - second**2
    assert np.mean(draws**2) == pytest.approx(second, abs=5 * standard_error(variance, size))


def test_two_point_sampler():
    law = limit_law_for(ModelParams(n=10, beta=1.5), Regime.SUPERCRITICAL)
    draws = law.sample(1000, RngStream(1))
    assert set(np.round(np.abs(draws), 12)) == {round(law.m_beta, 12)}
