"""Certified logarithmic Sobolev constants for weakly dependent Gibbs measures.

The core workflow: describe a potential with :mod:`lsicert.model`, run
:func:`lsicert.certify` to get a contractivity certificate, then check
functional inequalities with :mod:`lsicert.metrics` or watch the
interpolation process of :mod:`lsicert.dynamics`.
"""

from .certify import Certificate, certify, lipschitz_check, spectral_norm
from .errors import LSICertError
from .metrics import GaussianDist, GridDist, fisher, kl, w2
from .model import PotentialSpec, build_lattice, perturbed_quadratic, quadratic

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "certify",
    "lipschitz_check",
    "spectral_norm",
    "LSICertError",
    "GaussianDist",
    "GridDist",
    "kl",
    "fisher",
    "w2",
    "PotentialSpec",
    "quadratic",
    "perturbed_quadratic",
    "build_lattice",
]
