"""Weighted null space fitting (WNSF) for SISO state-space identification."""

__version__ = "0.1.0"

from wnsf.exceptions import (
    DegenerateOrderError,
    IdentificationError,
    NonFiniteError,
    SingularMatrixError,
    UnstableModelError,
)
from wnsf.hoar import MarkovEstimate, default_order, estimate_hoar
from wnsf.metrics import CRLBResult, TrialRecord, aggregate, crlb, fit_score
from wnsf.model import (
    PolynomialRoots,
    StateSpaceModel,
    build_observer_canonical,
    characteristic_roots,
    from_arma,
    impulse_response,
    markov_parameters,
)
from wnsf.nullspace import (
    HankelPair,
    NullSpaceEstimate,
    build_hankel,
    build_weighting,
    estimate_alpha_ols,
    estimate_alpha_wls,
)
from wnsf.pipeline import WNSFResult, wnsf_identify
from wnsf.realization import assemble_model, build_predictor_regressor, estimate_k_gain
from wnsf.simulate import Trajectory, arma_simulate, simulate
from wnsf.subspace import SubspaceConfig, SubspaceResult, sim_identify
