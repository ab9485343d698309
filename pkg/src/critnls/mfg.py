"""Hopf-Cole bridge between normalized NLS solutions and ergodic MFG systems.

With ``m = v**2 = exp(-u)`` a positive unit-mass solution ``(v, lam)`` of
``-Lap v + V v = lam v + mu v^{2*-1}`` gives a solution of

    -Lap u + |grad u|^2 / 2 + lam_mfg = -alpha m^{2/(N-2)} + 2 V,
    -Lap m - div(m grad u) = 0,        int m = 1,

with ``lam_mfg = 2 lam`` and ``alpha = 2 mu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain, integrate, laplacian
from .functional import energy_terms, level_certificate
from .solvers import SolutionBundle, SolverConfig, find_local_minimizer, find_mountain_pass

__all__ = [
    "MfgError",
    "MfgGateError",
    "MfgSolution",
    "POSITIVITY_FLOOR",
    "hopf_cole_forward",
    "hopf_cole_inverse",
    "mfg_residuals",
    "mfg_gate",
    "two_solution_pipeline",
    "mfg_from_fields",
    "mfg_certificate",
]

POSITIVITY_FLOOR = 1e-30


class MfgError(ValueError):
    pass


class MfgGateError(MfgError):
    def __init__(self, msg: str, margins: dict):
        super().__init__(msg)
        self.margins = margins


@dataclass
class MfgSolution:
    d: Domain
    m: np.ndarray
    u: np.ndarray  # NaN on masked nodes
    lam_mfg: float
    alpha: float
    mask: np.ndarray  # True where u is defined
    hjb_residual: float = math.nan
    kfp_residual: float = math.nan
    mass_error: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def mass(self) -> float:
        return integrate(self.d, self.m)

    def to_dict(self) -> dict:
        return {
            "lambda_mfg": self.lam_mfg,
            "alpha": self.alpha,
            "mass": self.mass,
            "hjb_residual": self.hjb_residual,
            "kfp_residual": self.kfp_residual,
            "mass_error": self.mass_error,
            "masked_nodes": int((~self.mask).sum()),
            **self.extra,
        }


def _face_pairs(d: Domain):
    """Interior faces (i, j, coefficient); the radial Dirichlet node is not an unknown."""
    i, j, c = d.face_i, d.face_j, d.face_coef
    if d.radial:
        keep = j < d.size - 1
        return i[keep], j[keep], c[keep]
    return i, j, c


def _bernoulli(x: np.ndarray) -> np.ndarray:
    """``x / (exp(x) - 1)`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-12
    out[nz] = x[nz] / np.expm1(x[nz])
    return out


def _divergence(d: Domain, i, j, flux) -> np.ndarray:
    out = np.zeros(d.size)
    np.add.at(out, i, flux)
    np.add.at(out, j, -flux)
    return out / d.weights


def kolmogorov_residual(d: Domain, m: np.ndarray, u: np.ndarray, mask: np.ndarray, scheme: str = "fitted") -> np.ndarray:
    """Nodal residual of ``-Lap m - div(m grad u)`` on faces between unmasked nodes.

    ``fitted`` uses the exponentially fitted flux, which vanishes identically
    for ``m = exp(-u)``; ``central`` averages ``m`` on the face and is second
    order.
    """
    i, j, c = _face_pairs(d)
    keep = mask[i] & mask[j]
    i, j, c = i[keep], j[keep], c[keep]
    du = u[j] - u[i]
    if scheme == "fitted":
        # c [B(-du) m_j - B(du) m_i] = c B(du) m_i expm1(du + ln m_j - ln m_i);
        # the exponent is formed first so it cancels to round-off in du, not in u
        logm = np.log(np.where(mask, m, 1.0))
        flux = c * _bernoulli(du) * m[i] * np.expm1(du + (logm[j] - logm[i]))
    elif scheme == "central":
        flux = c * ((m[j] - m[i]) + 0.5 * (m[i] + m[j]) * du)
    else:
        raise MfgError(f"unknown scheme {scheme!r}")
    out = -_divergence(d, i, j, flux)
    out[~mask] = 0.0
    if d.radial:
        out[-1] = 0.0
    return out


def _hjb_nodal(d: Domain, v: np.ndarray, m: np.ndarray, lam_mfg: float, alpha: float, V: np.ndarray,
               mask: np.ndarray) -> np.ndarray:
    """``-Lap u + |grad u|^2/2 + lam + alpha m^{2/(N-2)} - 2V`` via ``2 Lap v / v``."""
    q = 2.0 / (d.N - 2)
    out = np.zeros(d.size)
    Lv = laplacian(d, v)
    out[mask] = 2 * Lv[mask] / v[mask] + lam_mfg + alpha * m[mask] ** q - 2 * V[mask]
    if d.radial:
        out[-1] = 0.0
    return out


def _hjb_direct(d: Domain, u: np.ndarray, m: np.ndarray, lam_mfg: float, alpha: float, V: np.ndarray,
                mask: np.ndarray) -> np.ndarray:
    """Same residual from ``u`` directly: Laplacian on interior faces plus a face-averaged ``|grad u|^2``."""
    i, j, c = _face_pairs(d)
    keep = mask[i] & mask[j]
    i, j, c = i[keep], j[keep], c[keep]
    du = u[j] - u[i]
    lap = _divergence(d, i, j, c * du)
    # c du^2 is the face energy density; half of it goes to each side
    grad2 = np.zeros(d.size)
    np.add.at(grad2, i, 0.5 * c * du * du)
    np.add.at(grad2, j, 0.5 * c * du * du)
    grad2 /= d.weights
    q = 2.0 / (d.N - 2)
    out = np.zeros(d.size)
    out[mask] = -lap[mask] + 0.5 * grad2[mask] + lam_mfg + alpha * m[mask] ** q - 2 * V[mask]
    if d.radial:
        out[-1] = 0.0
    return out


def _m_norm(d: Domain, m: np.ndarray, r: np.ndarray) -> float:
    return math.sqrt(float(np.dot(d.weights, m * r * r)))


def _l2(d: Domain, r: np.ndarray) -> float:
    return math.sqrt(float(np.dot(d.weights, r * r)))


def hopf_cole_forward(d: Domain, bundle: SolutionBundle, V: np.ndarray, mu: float,
                      floor: float = POSITIVITY_FLOOR) -> MfgSolution:
    """MFG solution ``(m, u, 2 lam)`` from a positive NLS bundle, with gauge ``u = -ln m``."""
    v = np.array(bundle.u, dtype=float)
    tol = 1e-8 * float(np.abs(v).max())
    if (v < -tol).any():
        raise MfgError("field has negative values beyond round-off")
    v = np.maximum(v, 0.0)
    mask = v >= floor
    if d.radial:
        mask[-1] = False
    m = np.where(mask, v * v, 0.0)
    u = np.full(d.size, np.nan)
    u[mask] = -np.log(m[mask])
    sol = MfgSolution(d, m, u, 2.0 * bundle.lam, 2.0 * mu, mask)
    sol.extra["kind"] = bundle.kind
    hjb, kfp, err = mfg_residuals(sol, V)
    sol.hjb_residual, sol.kfp_residual, sol.mass_error = hjb, kfp, err
    return sol


def hopf_cole_inverse(sol: MfgSolution) -> np.ndarray:
    """``v = sqrt(m)``."""
    return np.sqrt(sol.m)


def mfg_residuals(sol: MfgSolution, V: np.ndarray) -> tuple[float, float, float]:
    """(HJB residual in L2(m dx), Kolmogorov residual in L2, |int m - 1|).

    The HJB residual is weighted by the density, the natural norm for an
    equation that only has to hold where players are; unweighted it would be
    dominated by the far tail where ``u = -ln m`` is huge.  The direct
    finite-difference form and the central Kolmogorov form are stored in
    ``sol.extra`` as diagnostics.
    """
    d, m, mask = sol.d, sol.m, sol.mask
    v = np.sqrt(m)
    u = np.where(mask, sol.u, 0.0)
    hjb = _m_norm(d, m, _hjb_nodal(d, v, m, sol.lam_mfg, sol.alpha, V, mask))
    kfp = _l2(d, kolmogorov_residual(d, m, u, mask, "fitted"))
    sol.extra["hjb_direct"] = _m_norm(d, m, _hjb_direct(d, u, m, sol.lam_mfg, sol.alpha, V, mask))
    sol.extra["kfp_central"] = _l2(d, kolmogorov_residual(d, m, u, mask, "central"))
    return hjb, kfp, abs(integrate(d, m) - 1.0)


def mfg_gate(d: Domain, V: np.ndarray, alpha: float, V1_minus_norm: float = 0.0,
             V2_minus_sup: float | None = None, eps: float = 0.1) -> tuple[bool, dict]:
    """Smallness margins at ``mu = alpha / 2``: C0 margin and a positive annulus level."""
    if not alpha > 0:
        raise MfgError("alpha must be positive")
    if V2_minus_sup is None:
        V2_minus_sup = float(np.max(np.maximum(-V, 0.0)))
    cert = level_certificate(d.N, alpha / 2, V1_minus_norm, V2_minus_sup, eps=eps)
    margins = {"alpha": alpha, "mu": alpha / 2, "C0_margin": cert.C0_margin, "E_star": cert.E_star}
    return bool(cert.C0_margin > 0 and cert.E_star > 0), margins


def two_solution_pipeline(d: Domain, V: np.ndarray, alpha: float, cfg: SolverConfig | None = None,
                          V1_minus_norm: float = 0.0, V2_minus_sup: float | None = None):
    """Minimizer and mountain-pass solutions at ``mu = alpha / 2``, both mapped to MFG solutions.

    The saddle search needs the minimizer (its energy sets the acceptance
    window and seeds the path), so the two solves run in sequence.
    """
    if d.N not in (3, 4, 5):
        raise MfgError("the second solution needs N in {3, 4, 5}")
    ok, margins = mfg_gate(d, V, alpha, V1_minus_norm, V2_minus_sup)
    if not ok:
        raise MfgGateError("alpha above the smallness gate", margins)
    mu = alpha / 2
    cfg = SolverConfig(mu=mu) if cfg is None else cfg
    if cfg.mu != mu:
        raise MfgError("solver config mu must equal alpha / 2")
    low = find_local_minimizer(d, V, cfg)
    high = find_mountain_pass(d, V, cfg, minimizer=low, E_star=margins["E_star"])
    s1 = hopf_cole_forward(d, low, V, mu)
    s2 = hopf_cole_forward(d, high, V, mu)
    dist = math.sqrt(integrate(d, (s1.m - s2.m) ** 2))
    tol = max(s1.hjb_residual, s2.hjb_residual, cfg.residual_tol)
    for s in (s1, s2):
        s.extra.update(gate=margins, m_distance=dist, distinct=bool(dist > 10 * tol))
    return s1, s2


def mfg_from_fields(d: Domain, m: np.ndarray, u: np.ndarray, alpha: float, V: np.ndarray) -> MfgSolution:
    """Rebuild a solution from stored ``(m, u)``; ``u`` is NaN where it is undefined.

    The ergodic constant is recomputed from ``v = sqrt(m)`` as twice the
    multiplier ``K + P - mu C``.
    """
    m = d.check(m)
    u = d.check(u)
    mask = np.isfinite(u)
    K, P, C, _ = energy_terms(d, np.sqrt(m), V)
    sol = MfgSolution(d, m, u, 2.0 * (K + P - 0.5 * alpha * C), alpha, mask)
    sol.hjb_residual, sol.kfp_residual, sol.mass_error = mfg_residuals(sol, V)
    return sol


def mfg_certificate(sol: MfgSolution, hjb_tol: float = 1e-6, kfp_tol: float = 1e-8, mass_tol: float = 1e-10) -> dict:
    out = sol.to_dict()
    out.update(
        hjb_ok=bool(sol.hjb_residual <= hjb_tol),
        kfp_ok=bool(sol.kfp_residual <= kfp_tol),
        mass_ok=bool(sol.mass_error <= mass_tol),
        positive=bool(np.all(sol.m[sol.mask] > 0)),
    )
    out["ok"] = all(out[k] for k in ("hjb_ok", "kfp_ok", "mass_ok", "positive"))
    return out
