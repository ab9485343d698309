"""Scalar functionals of the mass-constrained critical energy and its constants.

With ``p = 2N/(N-2)`` the energy on the unit L2 sphere is

    E(u) = K/2 + P/2 - mu C / p,   K = int |grad u|^2,  P = int V u^2,  C = int |u|^p.

Everything here works on the shared quadratures of :mod:`critnls.domain`,
so identities such as ``2E - lambda = mu (1 - 2/p) C`` hold to round-off.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma

from . import kernels
from .domain import Domain, Kind, dilate, grad_norm_sq, sphere_area, x_dot_grad

__all__ = [
    "FunctionalError",
    "EnergyReport",
    "LevelCertificate",
    "critical_exponent",
    "energy_terms",
    "energy",
    "energy_report",
    "energy_gradient",
    "tangential_gradient",
    "augmented_energy",
    "augmented_energy_ds",
    "sobolev_constant",
    "sobolev_constant_closed_form",
    "bubble_rayleigh_quotient",
    "rayleigh_sobolev",
    "ball_radius",
    "c0_bound",
    "admissible_C0",
    "level_threshold",
    "mass_rescale",
    "mass_unscale",
    "estar_bound",
    "estar_sample",
    "smallness_constants",
    "level_certificate",
]

MASS_TOL = 1e-6


class FunctionalError(ValueError):
    pass


def critical_exponent(N: int) -> float:
    return 2.0 * N / (N - 2)


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise FunctionalError(f"mu must be positive, got {mu}")


def energy_terms(d: Domain, u: np.ndarray, V: np.ndarray) -> tuple[float, float, float, float]:
    """(kinetic, potential, critical, mass) quadratures of u."""
    u = d.check(u)
    V = d.check(V)
    p = critical_exponent(d.N)
    if d.radial:
        return kernels.energy_terms(u, d.face_coef, d.weights, V, p)
    wu2 = d.weights * u * u
    return grad_norm_sq(d, u), float(np.dot(wu2, V)), float(np.dot(d.weights, np.abs(u) ** p)), float(wu2.sum())


def energy(d: Domain, u: np.ndarray, V: np.ndarray, mu: float) -> float:
    K, P, C, _ = energy_terms(d, u, V)
    return 0.5 * K + 0.5 * P - mu * C / critical_exponent(d.N)


def energy_gradient(d: Domain, u: np.ndarray, V: np.ndarray, mu: float) -> np.ndarray:
    """Weighted-L2 gradient ``-Lap u + V u - mu |u|^{p-2} u`` (zero on the fixed boundary node)."""
    u = d.check(u)
    p = critical_exponent(d.N)
    if d.radial:
        return kernels.energy_gradient(u, d.face_coef, d.weights, V, float(mu), p)
    return (d.stiffness @ u) / d.weights + V * u - mu * np.abs(u) ** (p - 2) * u


@dataclass
class EnergyReport:
    kinetic: float
    potential: float
    critical: float
    virial: float
    energy: float
    multiplier: float | None
    pohozaev: float
    mass: float
    mu: float
    normalized: bool
    grid: dict

    def to_dict(self) -> dict:
        return asdict(self)


def energy_report(d: Domain, u: np.ndarray, V: np.ndarray, mu: float) -> EnergyReport:
    """All scalar functionals of ``u``; the multiplier is left as None off the unit sphere."""
    _check_mu(mu)
    K, P, C, M = energy_terms(d, u, V)
    N = d.N
    p = critical_exponent(N)
    virial = float(np.dot(d.weights, V * u * x_dot_grad(d, u)))
    normalized = abs(math.sqrt(M) - 1.0) < MASS_TOL
    return EnergyReport(
        kinetic=K,
        potential=P,
        critical=C,
        virial=virial,
        energy=0.5 * K + 0.5 * P - mu * C / p,
        multiplier=(K + P - mu * C) if normalized else None,
        pohozaev=K - mu * C + 0.5 * N * P + virial,
        mass=M,
        mu=float(mu),
        normalized=normalized,
        grid=d.metadata(),
    )


def tangential_gradient(d: Domain, u: np.ndarray, V: np.ndarray, mu: float) -> np.ndarray:
    """Energy gradient projected onto the tangent space of the L2 sphere at u."""
    u = d.check(u)
    uu = float(np.dot(d.weights, u * u))
    if uu < 1e-24:
        raise FunctionalError("field has (numerically) zero mass")
    g = energy_gradient(d, u, V, mu)
    return g - (float(np.dot(d.weights, g * u)) / uu) * u


def augmented_energy(d: Domain, u: np.ndarray, s: float, V: np.ndarray, mu: float) -> float:
    """Energy of the dilation ``e^{Ns/2} u(e^s x)``."""
    if not np.isfinite(s) or abs(s) > 50:
        raise FunctionalError(f"dilation exponent s={s} out of range")
    if s == 0:
        return energy(d, u, V, mu)
    return energy(d, dilate(d, u, math.exp(s)), V, mu)


def augmented_energy_ds(d: Domain, u: np.ndarray, V: np.ndarray, mu: float, step: float | None = None) -> float:
    """d/ds of the augmented energy at s = 0 by Richardson-extrapolated central differences.

    On log-spaced grids the steps are one and two index shifts, so every
    evaluation is an exact discrete dilation.
    """
    if step is None:
        step = math.log(d.ratio) if d.kind is Kind.RADIAL_LOG else 1e-3
    f = lambda s: augmented_energy(d, u, s, V, mu)  # noqa: E731
    d1 = (f(step) - f(-step)) / (2 * step)
    d2 = (f(2 * step) - f(-2 * step)) / (4 * step)
    return (4 * d1 - d2) / 3


# ----------------------------------------------------------------------------
# Sobolev constant


def sobolev_constant_closed_form(N: int) -> float:
    _check_N(N)
    return math.pi * N * (N - 2) * (gamma(N / 2) / gamma(N)) ** (2.0 / N)


def _check_N(N: int) -> None:
    if N not in (3, 4, 5):
        raise FunctionalError(f"unsupported dimension N={N}")


def bubble_rayleigh_quotient(N: int, h: float, L: float = 40.0) -> float:
    """Rayleigh quotient of the uncut bubble ``(1+r^2)^{-(N-2)/2}`` on a uniform grid in t = ln r.

    The radial derivative comes from centered differences of the sampled
    profile, so the result carries an O(h^2) error with an even expansion.
    """
    t = np.arange(-L, L + h / 2, h)
    r = np.exp(t)
    U = (1.0 + r * r) ** (-(N - 2) / 2)
    Ut = np.gradient(U, h)  # interior is the centered difference
    p = critical_exponent(N)
    area = sphere_area(N)
    kin = area * trapezoid(Ut[1:-1] ** 2 * r[1:-1] ** (N - 2), dx=h)
    crit = area * trapezoid(U**p * r**N, dx=h)
    return kin / crit ** (2.0 / p)


def rayleigh_sobolev(N: int, h0: float = 0.02, levels: int = 3) -> float:
    """Richardson extrapolation of :func:`bubble_rayleigh_quotient` over h0, h0/2, ..."""
    table = [bubble_rayleigh_quotient(N, h0 / 2**k) for k in range(levels)]
    for order in range(1, levels):
        fac = 4.0**order
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
    return float(table[0])


@lru_cache(maxsize=None)
def sobolev_constant(N: int) -> float:
    """Best Sobolev constant from the bubble Rayleigh quotient (cached)."""
    _check_N(N)
    return rayleigh_sobolev(N)


# ----------------------------------------------------------------------------
# level constants


def ball_radius(N: int, mu: float, S: float | None = None) -> float:
    _check_mu(mu)
    S = sobolev_constant(N) if S is None else S
    return S ** (N / 4) * mu ** (0.5 - N / 4)


def c0_bound(N: int, S: float | None = None) -> float:
    """Supremum of admissible C0 values."""
    S = sobolev_constant(N) if S is None else S
    return 2 * S ** (N / 2) / (N * (S ** (N / 2 - 1) + 1))


def admissible_C0(N: int, fraction: float = 0.99, S: float | None = None) -> float:
    if not 0 < fraction < 1:
        raise FunctionalError("fraction must lie in (0, 1)")
    return fraction * c0_bound(N, S)


def level_threshold(N: int, mu: float, m_mu: float, S: float | None = None) -> float:
    _check_mu(mu)
    S = sobolev_constant(N) if S is None else S
    return m_mu + S ** (N / 2) * mu ** (1 - N / 2) / N


def mass_rescale(U: np.ndarray, rho: float, N: int) -> tuple[np.ndarray, float]:
    """``(U / rho, rho^{p-2})``: unit-mass field and the induced coupling."""
    if not rho > 0:
        raise FunctionalError("rho must be positive")
    return np.asarray(U) / rho, rho ** (critical_exponent(N) - 2)


def mass_unscale(u: np.ndarray, mu: float, N: int) -> tuple[np.ndarray, float]:
    """Inverse of :func:`mass_rescale`: returns ``(rho u, rho)``."""
    _check_mu(mu)
    rho = mu ** (1.0 / (critical_exponent(N) - 2))
    return rho * np.asarray(u), rho


def smallness_constants(N: int, S: float | None = None, delta: float = 0.5) -> dict:
    """C1, C2 making the ground-state chain close with delta_1 = delta.

    C1 bounds ``max(||V1*||_{N/2}, ||W1||_N)``; C2 bounds
    ``mu^{N/2-1} max(||V2*||_inf, ||W2||_inf^2)``.
    """
    S = sobolev_constant(N) if S is None else S
    A, B = N / 4, (N - 2) / 2
    C1 = (1 - delta) / (A / S + B / math.sqrt(S))
    CN = max(2 * A / delta, 4 * B * B / delta**2)
    return {"C1": C1, "C2": S ** (N / 2) / CN, "C_N_delta": CN, "delta": delta}


def estar_bound(N: int, mu: float, V1_minus_norm: float, V2_minus_sup: float, eps: float = 0.1,
                S: float | None = None) -> float:
    """Analytic lower bound of E over the annulus ``(1-eps) Rbar^2 <= K <= Rbar^2``."""
    _check_mu(mu)
    S = sobolev_constant(N) if S is None else S
    scale = mu ** (1 - N / 2)
    return (1 / N - eps / 2) * S ** (N / 2) * scale - 0.5 * S ** (N / 2 - 1) * V1_minus_norm * scale - 0.5 * V2_minus_sup


def estar_sample(d: Domain, V: np.ndarray, mu: float, eps: float = 0.1, samples: int = 64, seed: int = 0) -> float:
    """Smallest energy over random unit-mass fields dilated into the annulus (a sanity check only)."""
    rng = np.random.default_rng(seed)
    R2 = ball_radius(d.N, mu) ** 2
    r = d.radius
    best = np.inf
    for _ in range(samples):
        # random smooth radial profile: a few Gaussians with random centres and widths
        k = rng.integers(1, 4)
        u = np.zeros(d.size)
        for _ in range(k):
            c, s, a = rng.uniform(0, 2), rng.uniform(0.3, 2), rng.uniform(0.2, 1)
            u += a * np.exp(-((r - c) / s) ** 2)
        if d.radial:
            u[-1] = 0.0
        target = R2 * rng.uniform(1 - eps, 1)
        for _ in range(3):
            u /= math.sqrt(np.dot(d.weights, u * u))
            u = dilate(d, u, math.sqrt(target / grad_norm_sq(d, u)))
        u /= math.sqrt(np.dot(d.weights, u * u))
        if (1 - eps) * R2 <= grad_norm_sq(d, u) <= R2:
            best = min(best, energy(d, u, V, mu))
    return best


@dataclass
class LevelCertificate:
    N: int
    mu: float
    S: float
    Rbar: float
    eps: float
    E_star: float
    C0_bound: float
    C0_margin: float
    m_mu: float | None
    c_mu: float | None
    threshold: float | None
    ordering_ok: bool | None

    def to_dict(self) -> dict:
        return asdict(self)


def level_certificate(N: int, mu: float, V1_minus_norm: float, V2_minus_sup: float, *, eps: float = 0.1,
                      m_mu: float | None = None, c_mu: float | None = None) -> LevelCertificate:
    """Collect the level constants; ``C0_margin > 0`` means the smallness hypothesis holds."""
    S = sobolev_constant(N)
    rho2 = mu ** ((N - 2) / 2)
    bound = c0_bound(N, S)
    estar = estar_bound(N, mu, V1_minus_norm, V2_minus_sup, eps, S)
    thr = level_threshold(N, mu, m_mu, S) if m_mu is not None else None
    ok = None
    if m_mu is not None and c_mu is not None:
        ok = bool(m_mu < 0 < estar <= c_mu < thr)
    return LevelCertificate(
        N=N,
        mu=float(mu),
        S=S,
        Rbar=ball_radius(N, mu, S),
        eps=eps,
        E_star=estar,
        C0_bound=bound,
        C0_margin=bound - max(V1_minus_norm, rho2 * V2_minus_sup),
        m_mu=m_mu,
        c_mu=c_mu,
        threshold=thr,
        ordering_ok=ok,
    )

