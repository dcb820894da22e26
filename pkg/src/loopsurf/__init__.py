"""Geometric Cauchy problems for timelike CMC and pseudospherical surfaces.

The pipeline: ingest curve data, classify the problem variant, emit the
boundary potential pair, integrate the loop-valued ODEs, split pointwise by
Birkhoff factorization, evaluate the Sym formula, and verify the result with
curvature / boundary / sine-Gordon diagnostics.
"""

from .minkalg import (
    GroupElement2, Isometry, ad, cross, cross_e3, cross_l3, ip, ip_e3, ip_l3,
    lift_frame_path,
)
from .loops import TwistedLoop, lambda_log_derivative, loop_eval, loop_inv, loop_mul
from .birkhoff import BigCellFailure, BirkhoffFactors, birkhoff_left, birkhoff_right
from .surface import (
    DiagnosticsReport, SurfaceMesh, cauchy_residual, gauss_curvature,
    geodesic_residual, mean_curvature, sine_gordon_residual,
)
from .framegen import (
    FrameField, PotentialPair, RegularityFailure, WeakRegularityFailure,
    build_frame_field, gauge_cmc, gauge_psph, integrate_potential,
    maurer_cartan_coeffs, sym_cmc, sym_psph,
)
from .curves import CurveData, CurveError, ingest_curve
from .cauchy import (
    CaseReport, HypothesisViolation, MixedType, classify,
    potential_cmc_noncharacteristic, potential_cmc_null,
    potential_psph_characteristic, potential_psph_noncharacteristic,
    potential_revolution_timelike,
)

__version__ = "0.1.0"
