from .decode import DecodeError, EmbeddingDecision, decode
from .export import ExportError, export
from .formulation import VarIndex, Weights, build_model, evaluate_objective, variable_count
from .ir import BINARY, CONTINUOUS, EQ, GE, LE, Constraint, MilpModel, Variable, check_assignment

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE",
    "Constraint", "DecodeError", "EmbeddingDecision", "ExportError", "MilpModel", "VarIndex",
    "Variable", "Weights", "build_model", "check_assignment", "decode", "evaluate_objective",
    "export", "variable_count",
]
