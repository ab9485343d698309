import math

import numpy as np
import pytest

from critnls.domain import build_domain
from critnls.mfg import (
    MfgError,
    MfgGateError,
    hopf_cole_forward,
    hopf_cole_inverse,
    kolmogorov_residual,
    mfg_certificate,
    mfg_from_fields,
    mfg_gate,
    two_solution_pipeline,
)


@pytest.fixture(scope="module")
def forward(well_setup, minimizers):
    d, V = well_setup
    b = minimizers[0.05]
    return hopf_cole_forward(d, b, V, 0.05), b


def test_forward_map(forward, well_setup):
    sol, b = forward
    d, V = well_setup
    assert sol.lam_mfg == 2 * b.lam and sol.alpha == 0.1
    assert sol.mass == pytest.approx(1.0, abs=1e-12)
    assert sol.hjb_residual < 1e-6 and sol.kfp_residual < 1e-12
    np.testing.assert_allclose(hopf_cole_inverse(sol)[sol.mask], b.u[sol.mask], rtol=1e-14)
    assert not sol.mask[-1] and np.all(np.isnan(sol.u[~sol.mask]))


def test_direct_hjb_form_agrees(forward):
    sol, _ = forward
    # face-averaged |grad u|^2 is only first-order consistent, so compare loosely
    assert sol.extra["hjb_direct"] < 1e-1


def test_central_kolmogorov_converges():
    errs = []
    for n in (1024, 2048, 4096):
        d = build_domain(3, "radial-uniform", 10.0, n)
        m = np.exp(-d.radius**2)
        mask = np.ones(d.size, bool)
        mask[-1] = False
        r = kolmogorov_residual(d, m, -np.log(m), mask, "central")
        inner = d.radius < 5
        errs.append(math.sqrt(np.dot(d.weights[inner], r[inner] ** 2)))
    assert math.log2(errs[0] / errs[1]) >= 1.0 and math.log2(errs[1] / errs[2]) >= 1.0


def test_fitted_kolmogorov_exact_for_gibbs_density():
    d = build_domain(3, "radial-log-spaced", 10.0, 512)
    m = np.exp(-d.radius**2)
    mask = np.ones(d.size, bool)
    mask[-1] = False
    assert np.abs(kolmogorov_residual(d, m, -np.log(m), mask)).max() == 0.0
    with pytest.raises(MfgError):
        kolmogorov_residual(d, m, -np.log(m), mask, "upwind")


def test_rebuild_from_fields(forward, well_setup):
    sol, _ = forward
    d, V = well_setup
    back = mfg_from_fields(d, sol.m, sol.u, sol.alpha, V)
    assert back.lam_mfg == pytest.approx(sol.lam_mfg, abs=1e-10)
    cert = mfg_certificate(back)
    assert cert["ok"]


def test_gate_rejects_large_alpha(well_setup):
    d, V = well_setup
    ok, margins = mfg_gate(d, V, 10.0)
    assert not ok and margins["E_star"] < 0
    with pytest.raises(MfgGateError) as info:
        two_solution_pipeline(d, V, 10.0)
    assert "C0_margin" in info.value.margins
    with pytest.raises(MfgError):
        mfg_gate(d, V, -1.0)


def test_negative_field_rejected(well_setup, minimizers):
    d, V = well_setup
    b = minimizers[0.05]
    import dataclasses

    bad = dataclasses.replace(b, u=-b.u)
    with pytest.raises(MfgError):
        hopf_cole_forward(d, bad, V, 0.05)
