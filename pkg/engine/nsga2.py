"""NSGA-II over refactoring-sequence genotypes."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from engine.errors import EvaluationError, ExhaustionError
from engine.pareto import crowding_distance, non_dominated_sort, unique_points
from engine.refactoring import (
    RETRY_BUDGET,
    RefactoringSequence,
    apply,
    is_feasible,
    random_action,
    repair,
)

logger = logging.getLogger(__name__)


@dataclass
class Individual:
    genotype: RefactoringSequence
    objectives: object
    rank: int = 0
    crowding: float = 0.0

    @property
    def point(self):
        return self.objectives.canonical()


@dataclass
class RunResult:
    front: List[Individual]
    population: List[Individual]
    generations: int
    evaluations: int
    failures: int = 0
    history: List[dict] = field(default_factory=list)


def assign_fitness(population):
    """Set rank and crowding distance; returns the fronts as index lists."""
    fronts = non_dominated_sort([ind.point for ind in population])
    for rank, front in enumerate(fronts):
        distances = crowding_distance([population[i].point for i in front])
        for i, d in zip(front, distances):
            population[i].rank = rank
            population[i].crowding = float(d)
    return fronts


def better(a, b):
    """Crowded comparison: lower rank, then larger crowding distance."""
    if a.rank != b.rank:
        return a.rank < b.rank
    return a.crowding > b.crowding


def binary_tournament(population, rng):
    i, j = rng.choice(len(population), size=2, replace=False)
    a, b = population[int(i)], population[int(j)]
    return b if better(b, a) else a


def single_point_crossover(a, b, rng, model, retry_budget=RETRY_BUDGET):
    length = len(a)
    if length != len(b):
        raise ValueError("parents must have equal length")
    if length < 2:
        return a, b
    cut = int(rng.integers(1, length))
    offspring = []
    for head, tail, parent in ((a, b, a), (b, a, b)):
        child = RefactoringSequence(head.actions[:cut] + tail.actions[cut:])
        if not is_feasible(child, model):
            try:
                child = repair(child, model, rng, retry_budget)
            except ExhaustionError:
                logger.debug("crossover repair exhausted, keeping parent %s", parent)
                child = parent
        offspring.append(child)
    return offspring[0], offspring[1]


def simple_mutation(sequence, rng, p_mutation, model, retry_budget=RETRY_BUDGET):
    if rng.random() >= p_mutation:
        return sequence
    position = int(rng.integers(len(sequence)))
    state = model
    for p, action in enumerate(sequence.actions[:position]):
        state = apply(action, state, position=p, check=False)
    for _ in range(retry_budget):
        try:
            action = random_action(state, rng)
        except ExhaustionError:
            break
        actions = list(sequence.actions)
        actions[position] = action
        candidate = RefactoringSequence(tuple(actions))
        if is_feasible(candidate, model):
            return candidate
    logger.debug("mutation at position %d exhausted, keeping %s", position, sequence)
    return sequence


class Nsga2:
    """One independent run of the GA on a RefactoringProblem."""

    def __init__(self, problem, ga, rng, progress=None):
        self.problem = problem
        self.ga = ga
        self.rng = rng
        self.progress = progress
        self.evaluations = 0
        self.failures = 0
        self.history = []

    def _evaluate(self, genotype):
        """Evaluate a genotype; a failed evaluation is replaced by a fresh random one."""
        for _ in range(RETRY_BUDGET):
            self.evaluations += 1
            try:
                return Individual(genotype, self.problem.evaluate(genotype))
            except EvaluationError as e:
                self.failures += 1
                logger.warning("evaluation failed, redrawing: %s", e)
                genotype = self.problem.random_solution(self.rng)
        raise EvaluationError(f"{RETRY_BUDGET} consecutive evaluations failed")

    def _budget_left(self, generation):
        if self.ga.budget_unit == "evaluations":
            return self.evaluations < self.ga.max_evolutions
        return generation < self.ga.max_evolutions

    def _offspring(self, population):
        model = self.problem.model
        children = []
        while len(children) < self.ga.population_size:
            a = binary_tournament(population, self.rng).genotype
            b = binary_tournament(population, self.rng).genotype
            if self.rng.random() < self.ga.p_crossover:
                a, b = single_point_crossover(a, b, self.rng, model)
            children.append(simple_mutation(a, self.rng, self.ga.p_mutation, model))
            children.append(simple_mutation(b, self.rng, self.ga.p_mutation, model))
        return children[:self.ga.population_size]

    def _survivors(self, combined):
        fronts = assign_fitness(combined)
        chosen = []
        for front in fronts:
            if len(chosen) + len(front) <= self.ga.population_size:
                chosen.extend(front)
                continue
            # stable: equal crowding keeps insertion order
            ordered = sorted(front, key=lambda i: -combined[i].crowding)
            chosen.extend(ordered[:self.ga.population_size - len(chosen)])
            break
        survivors = [combined[i] for i in chosen]
        assign_fitness(survivors)
        return survivors

    def _record(self, generation, population):
        front = [ind for ind in population if ind.rank == 0]
        record = {
            "generation": generation,
            "evaluations": self.evaluations,
            "front_size": len(front),
            "best_perfQ": max(ind.objectives.perf_q for ind in front),
            "best_reliability": max(ind.objectives.reliability for ind in front),
            "best_pas": min(ind.objectives.pas for ind in front),
            "best_changes": min(ind.objectives.changes for ind in front),
        }
        self.history.append(record)
        logger.info("generation %(generation)d: %(evaluations)d evaluations, front of %(front_size)d, "
                    "perfQ %(best_perfQ).4f reliability %(best_reliability).4f", record)
        if self.progress is not None:
            self.progress(record)

    def run(self):
        population = [self._evaluate(self.problem.random_solution(self.rng))
                      for _ in range(self.ga.population_size)]
        assign_fitness(population)
        generation = 0
        self._record(generation, population)
        while self._budget_left(generation):
            offspring = [self._evaluate(g) for g in self._offspring(population)]
            population = self._survivors(population + offspring)
            generation += 1
            self._record(generation, population)
        front = [ind for ind in population if ind.rank == 0]
        front = [front[i] for i in unique_points([ind.point for ind in front])]
        return RunResult(front, population, generation, self.evaluations, self.failures, self.history)


def run(problem, ga, rng: Optional[np.random.Generator] = None, progress=None):
    rng = rng if rng is not None else np.random.default_rng(ga.seed)
    return Nsga2(problem, ga, rng, progress).run()
