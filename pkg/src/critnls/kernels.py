"""Backend selection for the radial stencil kernels.

The compiled extension is used when it was built; otherwise the NumPy
implementation is used.  Set ``CRITNLS_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CRITNLS_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

dirichlet_energy = _impl.dirichlet_energy
stiffness_apply = _impl.stiffness_apply
energy_terms = _impl.energy_terms
energy_gradient = _impl.energy_gradient

__all__ = ["BACKEND", "dirichlet_energy", "stiffness_apply", "energy_terms", "energy_gradient"]
