import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import gaussian

from critnls.domain import build_domain, lp_norm
from critnls.functional import sobolev_constant
from critnls.potentials import (
    PotentialError,
    coulomb_cut,
    decompose_potential,
    decompose_shells,
    from_table,
    inequality_audit,
    local_integrability_gate,
    lorentzian,
    make_potential,
    sample_potential,
    scaling_continuity,
    well,
)


@pytest.fixture(scope="module")
def d():
    return build_domain(3, "radial-log-spaced", 1e3, 2048)


def test_families_pointwise():
    r = np.array([0.0, 0.5, 1.0, 2.0])
    np.testing.assert_array_equal(well(7.0)(r), [-7, -7, -7, 0])
    np.testing.assert_allclose(lorentzian(-2.0, 2.0)(r), -2 / (1 + (r / 2) ** 2))
    np.testing.assert_allclose(coulomb_cut(-1.0, 0.5)(r), [-2, -2, -1, -0.5])


def test_make_potential_blocks(tmp_path):
    assert make_potential({"family": "lorentzian", "amplitude": -1.0}).name == "lorentzian"
    assert make_potential({"family": "zero"})(np.array([1.0]))[0] == 0
    spec = make_potential({"family": "well", "depth": 3, "tail": {"C": 1.0, "beta": 4.0}})
    assert spec.tail.beta == 4.0
    with pytest.raises(PotentialError):
        make_potential({"family": "harmonic"})


def test_table_interpolates_and_vanishes_outside(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("r,V\n0,-4\n1,-2\n2,0\n")
    spec = from_table(path)
    np.testing.assert_allclose(spec(np.array([0.5, 1.5, 3.0])), [-3, -1, 0])
    assert spec.support == 2.0


def test_sample_potential_returns_w(d):
    V, W = sample_potential(lorentzian(-1.0), d)
    np.testing.assert_allclose(W, V * d.radius)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 1.0))
def test_shell_split_budget_and_sum(delta):
    d = build_domain(3, "radial-log-spaced", 1e3, 1024)
    spec = lorentzian(-5.0, 1.0)
    V, _ = sample_potential(spec, d)
    V1, V2, cert = decompose_shells(d, V, 2.5, delta, tail=spec.tail)
    np.testing.assert_array_equal(V1 + V2, V)
    assert cert.bound_ok and cert.achieved <= 3 * delta
    # V1 only takes the values of V
    assert np.all((V1 == 0) | (V1 == V))


def test_trivial_split_without_delta(d):
    dec = decompose_potential(well(7.0), d)
    assert not dec.V1.any() and dec.certificate is None


def test_shell_split_rejects_bad_input(d):
    V, _ = sample_potential(lorentzian(-1.0), d)
    with pytest.raises(PotentialError):
        decompose_shells(d, V, 1.0, 0.1, tail=lorentzian(-1.0).tail)
    with pytest.raises(PotentialError):
        decompose_shells(d, V, 2.5, 0.1)


def test_inequality_audit_holds(d):
    spec = lorentzian(-5.0, 1.0)
    dec = decompose_potential(spec, d, 0.1)
    u = gaussian(d.radius, 3)
    u[-1] = 0
    audit = inequality_audit(d, u, dec, sobolev_constant(3))
    assert audit["all_ok"]


def test_scaling_continuity_tends_to_zero(d):
    vals = scaling_continuity(d, lorentzian(-1.0), 2.0, 2.0, [1.0, 1.1, 1.01, 1.001])
    assert vals[0] == 0.0
    assert vals[1] > vals[2] > vals[3] > 0


def test_local_integrability_gate():
    assert local_integrability_gate(well(1.0), 3)
    path_spec = lorentzian(1.0)
    assert local_integrability_gate(path_spec, 5)


def test_lorentzian_v1_norm_matches_budget(d):
    dec = decompose_potential(lorentzian(-5.0, 1.0), d, 0.2)
    assert lp_norm(d, dec.V1, 1.5) ** 1.5 == pytest.approx(dec.certificate.achieved, rel=1e-12)
    assert dec.certificate.achieved <= 0.6 + 1e-15
    assert math.isfinite(dec.certificate.annulus_sup[-1])
