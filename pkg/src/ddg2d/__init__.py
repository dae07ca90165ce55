"""DDG solver for 2-D nonlinear convection-diffusion with superconvergent initialization."""

from .flux import FLUXES, FluxParams, godunov, gamma_of_beta1
from .mesh import AnalyticField, DecayingSine, DGField, Mesh2D, build_mesh, l2_project

__version__ = "0.1.0"
