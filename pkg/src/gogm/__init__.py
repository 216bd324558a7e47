"""Generalized optimized gradient methods and their worst-case certificates."""
from .bounds import BoundMethod, BoundSpec, Metric, bound
from .methods import Family, IterateTrace, MethodSpec, check_equivalence, run, run_fo
from .params import (ParamSeq, SeqKind, make_custom, make_fgm_t, make_ogm_a, make_ogm_og,
                     make_ogm_theta, validate)
from .pep import CertKind, DualCertificate, build_matrices, certify, verify
from .sdpa import export_sdpa, read_sdpa
from .steps import StepMatrix, h_fgm, h_gogm, h_gogm_prime, h_ogm, h_ogm_prime

__all__ = [
    "BoundMethod", "BoundSpec", "Metric", "bound",
    "Family", "IterateTrace", "MethodSpec", "check_equivalence", "run", "run_fo",
    "ParamSeq", "SeqKind", "make_custom", "make_fgm_t", "make_ogm_a", "make_ogm_og",
    "make_ogm_theta", "validate",
    "CertKind", "DualCertificate", "build_matrices", "certify", "verify",
    "export_sdpa", "read_sdpa",
    "StepMatrix", "h_fgm", "h_gogm", "h_gogm_prime", "h_ogm", "h_ogm_prime",
]
