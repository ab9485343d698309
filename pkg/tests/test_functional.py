import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import gaussian

from critnls.domain import build_domain
from critnls.functional import (
    FunctionalError,
    augmented_energy,
    ball_radius,
    c0_bound,
    critical_exponent,
    energy,
    energy_report,
    estar_bound,
    estar_sample,
    level_certificate,
    level_threshold,
    mass_rescale,
    mass_unscale,
    sobolev_constant_closed_form,
    tangential_gradient,
)
from critnls.potentials import sample_potential, well


@pytest.fixture(scope="module")
def grid():
    d = build_domain(3, "radial-log-spaced", 20.0, 2048)
    V, _ = sample_potential(well(7.0), d)
    return d, V


def test_critical_exponent():
    assert [critical_exponent(N) for N in (3, 4, 5)] == [6.0, 4.0, 10.0 / 3.0]


def test_sobolev_closed_form_n3():
    # 3 (pi / 2)^(4/3) for N = 3
    assert sobolev_constant_closed_form(3) == pytest.approx(3 * (math.pi / 2) ** (4 / 3), rel=1e-14)


def test_gaussian_energy_terms_against_closed_form():
    d = build_domain(3, "radial-uniform", 12.0, 12000)
    u = gaussian(d.radius, 3)
    rep = energy_report(d, u, np.zeros(d.size), 0.1)
    # int u^6 = pi^{-9/2} (pi/3)^{3/2} for the unit Gaussian
    crit = math.pi ** (-4.5) * (math.pi / 3) ** 1.5
    assert rep.kinetic == pytest.approx(1.5, rel=1e-6)
    assert rep.critical == pytest.approx(crit, rel=1e-6)
    assert rep.energy == pytest.approx(0.75 - 0.1 * crit / 6, rel=1e-6)
    assert rep.normalized and rep.multiplier == pytest.approx(1.5 - 0.1 * crit, rel=1e-6)


def test_multiplier_none_off_sphere(grid):
    d, V = grid
    u = 2 * gaussian(d.radius, 3)
    assert energy_report(d, u, V, 0.05).multiplier is None


def test_tangential_gradient_orthogonal_to_u(grid):
    d, V = grid
    u = gaussian(d.radius, 3)
    u[-1] = 0
    u /= math.sqrt(np.dot(d.weights, u * u))
    g = tangential_gradient(d, u, V, 0.05)
    assert abs(np.dot(d.weights, g * u)) < 1e-12


def test_augmented_energy_at_zero_and_range(grid):
    d, V = grid
    u = gaussian(d.radius, 3)
    assert augmented_energy(d, u, 0.0, V, 0.05) == energy(d, u, V, 0.05)
    with pytest.raises(FunctionalError):
        augmented_energy(d, u, 80.0, V, 0.05)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.sampled_from([3, 4, 5]))
def test_mass_rescale_roundtrip(rho, N):
    U = np.array([0.5, 1.0, 2.0])
    u, mu = mass_rescale(U, rho, N)
    back, rho2 = mass_unscale(u, mu, N)
    assert rho2 == pytest.approx(rho, rel=1e-12)
    np.testing.assert_allclose(back, U, rtol=1e-12)


def test_level_constants():
    S = sobolev_constant_closed_form(3)
    mu = 0.05
    assert ball_radius(3, mu, S) == pytest.approx(S**0.75 * mu**-0.25)
    assert level_threshold(3, mu, -1.0, S) == pytest.approx(-1 + S**1.5 / (3 * math.sqrt(mu)))
    assert c0_bound(3, S) == pytest.approx(2 * S**1.5 / (3 * (S**0.5 + 1)))


def test_estar_bound_is_below_sampled_annulus_energies(grid):
    d, V = grid
    mu = 0.05
    bound = estar_bound(3, mu, 0.0, 7.0)
    assert bound > 0
    assert estar_sample(d, V, mu, samples=16) >= bound


def test_level_certificate_margin_sign():
    assert level_certificate(3, 0.05, 0.0, 7.0).C0_margin > 0
    assert level_certificate(3, 0.05, 10.0, 7.0).C0_margin < 0


def test_negative_mu_rejected(grid):
    d, V = grid
    with pytest.raises(FunctionalError):
        energy_report(d, gaussian(d.radius, 3), V, -1.0)
