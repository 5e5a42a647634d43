import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagcoag.errors import DomainError
from diagcoag.params import (
    beta_from_rho,
    beta_star_of,
    make_params,
    rho_from_beta,
    theta_of,
)

gammas = st.floats(min_value=-4.0, max_value=0.99)
fractions = st.floats(min_value=1e-6, max_value=1.0 - 1e-6)


def test_make_params_canonical():
    p = make_params(gamma=0.0, beta=2.0)
    assert p.beta_star == 1.0
    assert p.theta == 0.5
    assert p.rho == 0.5
    assert abs(p.mu - 1.0) < 1e-13
    assert not p.degenerate


def test_make_params_degenerate_flag():
    p = make_params(gamma=0.0, beta=1.0)
    assert p.degenerate
    assert p.beta == p.beta_star == 1.0


def test_make_params_negative_gamma():
    p = make_params(gamma=-1.0, beta=1.0)
    assert p.beta_star == 0.5
    assert p.theta == 0.25
    # rho = 0 exceeds gamma = -1: admissible (profiles increasing at infinity
    # appear only for gamma < -1 and rho < 0)
    assert p.rho == 0.0
    assert not p.degenerate


def test_make_params_rejects_bad_domains():
    with pytest.raises(DomainError):
        make_params(gamma=1.5, beta=2.0)
    with pytest.raises(DomainError):
        make_params(gamma=1.0, beta=2.0)
    with pytest.raises(DomainError):
        make_params(gamma=0.0, beta=0.5)


def test_beta_from_rho_examples():
    assert beta_from_rho(0.0, 0.5) == 2.0
    assert abs(beta_from_rho(0.5, 0.75) - 4.0) < 1e-14
    with pytest.raises(DomainError):
        beta_from_rho(0.0, 1.0)
    with pytest.raises(DomainError):
        beta_from_rho(0.0, 0.0)


def test_rho_from_beta_examples():
    assert rho_from_beta(0.0, 2.0) == 0.5
    assert rho_from_beta(-1.0, 1.0) == 0.0
    assert abs(rho_from_beta(0.5, 4.0) - 0.75) < 1e-15
    with pytest.raises(DomainError):
        rho_from_beta(0.0, -1.0)


def test_serialization_keys():
    p = make_params(0.0, 2.0)
    assert set(p.to_dict()) == {"gamma", "beta", "beta_star", "theta", "rho", "mu"}


@given(gamma=gammas, frac=fractions)
@settings(max_examples=200, deadline=None)
def test_rho_beta_round_trip(gamma, frac):
    rho = gamma + frac * (1.0 - gamma)
    beta = beta_from_rho(gamma, rho)
    assert beta >= beta_star_of(gamma)
    assert abs(rho_from_beta(gamma, beta) - rho) <= 1e-14


@given(g1=gammas, g2=gammas)
@settings(max_examples=100, deadline=None)
def test_theta_increasing(g1, g2):
    lo, hi = sorted((g1, g2))
    assert theta_of(lo) <= theta_of(hi)
    if hi - lo > 1e-12:  # resolvable separation in double precision
        assert theta_of(lo) < theta_of(hi)


def test_theta_limit_at_one():
    assert theta_of(1.0 - 1e-12) == pytest.approx(1.0, abs=1e-11)
    assert 0.0 < theta_of(-4.0) < 1.0
