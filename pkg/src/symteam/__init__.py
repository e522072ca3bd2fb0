"""Optimal symmetric strategies for two-agent teams via a common-information coordinator."""
from .belief import FactoredBelief, JointBelief, check_conditional_independence, initial_belief
from .errors import (BudgetExceeded, EvidenceImpossible, FlagViolation, InconsistentFlag, KernelRowNotNormalized,
                     NegativeWeight, NotNormalized, SchemaError, SymTeamError, UnreachableInfoRealization)
from .evaluation import evaluate_exact, evaluate_mc, joint_trajectory_distribution
from .model import InfoStructure, TeamModel, load_model
from .prescriptions import Prescription, PrescriptionGridSpec
from .probability import Dist, bayes_posterior, make_dist, sample
from .solver import SolveReport, SymmetricTeamSolver, extract_symmetric_strategy, solve
from .strategies import StrategyPair, symmetric

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "Dist", "EvidenceImpossible", "FactoredBelief", "FlagViolation", "InconsistentFlag",
    "InfoStructure", "JointBelief", "KernelRowNotNormalized", "NegativeWeight", "NotNormalized", "Prescription",
    "PrescriptionGridSpec", "SchemaError", "SolveReport", "StrategyPair", "SymTeamError", "SymmetricTeamSolver",
    "TeamModel", "UnreachableInfoRealization", "bayes_posterior", "check_conditional_independence",
    "evaluate_exact", "evaluate_mc", "extract_symmetric_strategy", "initial_belief",
    "joint_trajectory_distribution", "load_model", "make_dist", "sample", "solve", "symmetric",
]
