"""Separability testing and exponential coordinates for multipartite
density operators."""

__version__ = "0.1.0"

from .linalg_core import (
    DensityOperator,
    Dims,
    HermitianOperator,
    ProductProjector,
    embed,
    hs_norm,
    multipolarize,
    partial_transpose,
    trace_pair,
    traceless_part,
)
from .product_measure import MeasureApprox, StateFamily, design_quadrature, make_state, sample_haar, werner
from .objective import Form, ObjectiveSpec, chi, eval_G, eval_Gk, eval_W, eval_Z
from .minimizer import MinimizeReport, SolverConfig, minimize, minimize_sequence
from .separability import ClassifierConfig, Classification, classify, extract_witness, ppt_oracle, reconstruct
from .husimi_map import HusimiCoordinates, from_coordinates, to_coordinates
