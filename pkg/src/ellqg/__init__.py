"""Elliptic dynamical quantum groups from quantum loop algebras."""

__version__ = "0.1.0"

from .cartan import CartanDatum, cartan_of_type, validate_cartan
from .classify import (EllipticHighestWeight, StringDiagnostic, elliptic_drinfeld_data, same_isoclass,
                       theta_quotient_form_check, verify_triangularity)
from .elliptic import EllipticRep, direct_sum_elliptic, trivial_elliptic
from .errors import (EllqgError, FormMismatch, FunctorUndefined, InconsistentData, InvalidArgument,
                     InvalidParams, NotHighestWeight, PoleHit, Unsupported)
from .factorization import FactorizationProblem, check_factorization, solve_factorization
from .functor import theta_functor
from .inverse import GaugeRecord, normalize_gauges, roundtrip_report, twist, xi_functor
from .qloop import QLoopRep, RationalMatFun, direct_sum, make_evaluation_module
from .report import RelationReport, SamplePlan
from .theta import ModularParams, ThetaQuotient, kernel_eval, theta, theta_minus, theta_plus
from .verify import check_eqg_relations, check_morphism, check_serre

__all__ = [
    "CartanDatum", "cartan_of_type", "validate_cartan",
    "EllipticHighestWeight", "StringDiagnostic", "elliptic_drinfeld_data", "same_isoclass",
    "theta_quotient_form_check", "verify_triangularity",
    "EllipticRep", "direct_sum_elliptic", "trivial_elliptic",
    "EllqgError", "FormMismatch", "FunctorUndefined", "InconsistentData", "InvalidArgument",
    "InvalidParams", "NotHighestWeight", "PoleHit", "Unsupported",
    "FactorizationProblem", "check_factorization", "solve_factorization",
    "theta_functor",
    "GaugeRecord", "normalize_gauges", "roundtrip_report", "twist", "xi_functor",
    "QLoopRep", "RationalMatFun", "direct_sum", "make_evaluation_module",
    "RelationReport", "SamplePlan",
    "ModularParams", "ThetaQuotient", "kernel_eval", "theta", "theta_minus", "theta_plus",
    "check_eqg_relations", "check_morphism", "check_serre",
]
