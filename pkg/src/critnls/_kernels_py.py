"""NumPy reference implementation of the radial stencil kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature; ``critnls.kernels`` picks one at import time.
"""
import numpy as np


def dirichlet_energy(u, c):
    du = u[1:] - u[:-1]
    return float(np.dot(c, du * du))


def stiffness_apply(u, c):
    flux = c * (u[1:] - u[:-1])
    out = np.zeros_like(u)
    out[:-1] -= flux
    out[1:] += flux
    return out


def energy_terms(u, c, w, V, p):
    """Return (kinetic, potential, critical, mass) quadratures."""
    du = u[1:] - u[:-1]
    u2 = u * u
    wu2 = w * u2
    return (
        float(np.dot(c, du * du)),
        float(np.dot(wu2, V)),
        float(np.dot(w, np.abs(u) ** p)),
        float(wu2.sum()),
    )


def energy_gradient(u, c, w, V, mu, p):
    """Weighted-L2 gradient of E = K/2 + P/2 - mu C/p; zero on the boundary node."""
    g = stiffness_apply(u, c) / w + V * u - mu * np.abs(u) ** (p - 2) * u
    g[-1] = 0.0
    return g
