"""The four optimization objectives and the problem wrapper the GA evaluates.

perfQ and reliability are maximized, pas and changes minimized. Dominance
only ever compares the canonical all-minimize form.
"""
import logging
from dataclasses import dataclass, field
from typing import List

from engine.antipatterns import detect, pas_objective
from engine.errors import EvaluationError, IndexMismatchError, ObjectiveError, SolverError
from engine.lqn import analyze
from engine.model import architectural_weight
from engine.refactoring import apply_sequence, intermediate_models, random_sequence
from engine.reliability import system_reliability

logger = logging.getLogger(__name__)

OBJECTIVE_NAMES = ("perfQ", "reliability", "pas", "changes")
# +1: higher is better, -1: lower is better
INDEX_SIGNS = {"X": 1.0, "R": -1.0, "U": 1.0}
MAX_UTILIZATION_PENALTY = 1.0


@dataclass(frozen=True)
class ObjectiveVector:
    perf_q: float
    reliability: float
    pas: float
    changes: float

    def canonical(self):
        return (-self.perf_q, -self.reliability, self.pas, self.changes)

    @classmethod
    def from_canonical(cls, values):
        perf_q, reliability, pas, changes = values
        return cls(-perf_q, -reliability, pas, changes)

    def to_dict(self):
        return dict(zip(OBJECTIVE_NAMES, (self.perf_q, self.reliability, self.pas, self.changes)))


def utilization_penalty(utilization, knee):
    """Negative correction for utilizations pushed above the knee, capped at -1."""
    return -min(MAX_UTILIZATION_PENALTY, max(0.0, utilization - knee) / (1.0 - knee))


def perf_q(initial, refactored, knee=0.8):
    """Mean signed relative variation over the initial model's performance indices."""
    before = initial.index_map()
    after = refactored.index_map()
    missing = [key for key in before if key not in after]
    if missing:
        raise IndexMismatchError(f"refactored indices lack {', '.join(f'{k}:{i}' for k, i in missing)}")
    if not before:
        raise IndexMismatchError("no performance indices to compare")
    total = 0.0
    for key, i_value in before.items():
        f_value = after[key]
        if i_value < 0 or f_value < 0:
            raise ObjectiveError(f"negative performance index {key}: {i_value} -> {f_value}")
        if f_value == i_value:
            continue
        term = INDEX_SIGNS[key[0]] * (f_value - i_value) / (f_value + i_value)
        if key[0] == "U":
            term += utilization_penalty(f_value, knee)
        total += term
    return total / len(before)


def weighted_changes(terms):
    """Sum of brf x AW over (brf, AW) pairs."""
    return sum(brf * weight for brf, weight in terms)


def change_terms(sequence, model, brf_enabled=True):
    states = intermediate_models(sequence, model)
    return [(action.brf if brf_enabled else 1.0, architectural_weight(state, action.target))
            for action, state in zip(sequence, states)]


def arch_distance(sequence, model, brf_enabled=True):
    return weighted_changes(change_terms(sequence, model, brf_enabled))


@dataclass
class Evaluation:
    objectives: ObjectiveVector
    model: object
    indices: object
    occurrences: List = field(default_factory=list)


def evaluate_detailed(sequence, base_model, base_indices, config):
    model = apply_sequence(sequence, base_model)
    try:
        indices = analyze(model, tol=config.solver_tol, max_iter=config.solver_max_iter)
    except SolverError as e:
        raise EvaluationError(f"{sequence}: {e}") from e
    if not indices.converged:
        raise EvaluationError(f"{sequence}: performance solver did not converge")
    occurrences = detect(model, indices, config.fuzziness) if config.antipatterns_enabled else []
    objectives = ObjectiveVector(
        perf_q=perf_q(base_indices, indices, config.utilization_knee),
        reliability=system_reliability(model),
        pas=pas_objective(occurrences, config.pas_count_mode),
        changes=arch_distance(sequence, base_model, config.brf_enabled),
    )
    return Evaluation(objectives, model, indices, occurrences)


def evaluate(sequence, base_model, base_indices, config):
    return evaluate_detailed(sequence, base_model, base_indices, config).objectives


class RefactoringProblem:
    """One case study under one configuration: the initial model and its solved indices."""

    def __init__(self, model, config):
        self.model = model
        self.config = config
        self.indices = analyze(model, tol=config.solver_tol, max_iter=config.solver_max_iter)
        if not self.indices.converged:
            raise EvaluationError(f"initial model '{model.name}' does not converge")
        self.initial_reliability = system_reliability(model)
        occurrences = detect(model, self.indices, config.fuzziness) if config.antipatterns_enabled else []
        self.initial_pas = pas_objective(occurrences, config.pas_count_mode)

    @property
    def sequence_length(self):
        return self.config.ga.sequence_length

    def random_solution(self, rng):
        return random_sequence(self.model, rng, self.sequence_length)

    def evaluate(self, sequence):
        return evaluate(sequence, self.model, self.indices, self.config)
