"""Spherical latent spaces for autoencoders: sphere geometry, exact optimal
transport checks, and AE/SAE/VAE training on desk-scale data."""

__version__ = "0.1.0"

from .rng import RngStream
from .sampling import PointCloud, Prior, PriorKind, centerize, clt_diagnostic, draw, mc_chord_stats, spherize
from .spheregeom import ChordStats, SphereSpec, annulus_volume_fraction, chord_density, chord_stats
from .special import log_gamma
from .transport import cost_matrix, exact_w2, w2_convergence_experiment
from .nn import Model, Variant, gradcheck
from .metrics import mse, sliced_w2

__all__ = [
    "RngStream", "PointCloud", "Prior", "PriorKind", "centerize", "clt_diagnostic", "draw",
    "mc_chord_stats", "spherize", "ChordStats", "SphereSpec", "annulus_volume_fraction",
    "chord_density", "chord_stats", "log_gamma", "cost_matrix", "exact_w2",
    "w2_convergence_experiment", "Model", "Variant", "gradcheck", "mse", "sliced_w2",
]
