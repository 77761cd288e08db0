"""Discrete DAG structure learning by entropy-ordered testing and masking."""

from ._kernels import BACKEND, HAVE_NUMBA
from .bn import JointDist, TabularBN, cmi, cond_entropy, entropy, joint_table, markov_boundary_exact, minimal_imap, sample
from .conditions import ConditionReport, certified_thresholds, certify, compute_gaps
from .estimators import Dataset, EmpiricalSource, EstimatorKind, ExactSource, InfoSource
from .graph import Dag, d_separated, layer_decomposition, shd
from .mb import iamb_backward, pps
from .synth import GraphSpec, ModelSpec, fixture
from .tam import TamConfig, TamTrace, Variant, tam_learn

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "HAVE_NUMBA", "ConditionReport", "Dag", "Dataset", "EmpiricalSource", "EstimatorKind",
    "ExactSource", "GraphSpec", "InfoSource", "JointDist", "ModelSpec", "TabularBN", "TamConfig",
    "TamTrace", "Variant", "certified_thresholds", "certify", "cmi", "compute_gaps", "cond_entropy",
    "d_separated", "entropy", "fixture", "iamb_backward", "joint_table", "layer_decomposition",
    "markov_boundary_exact", "minimal_imap", "pps", "sample", "shd", "tam_learn",
]
