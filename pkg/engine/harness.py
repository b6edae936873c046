"""Experiment orchestration: the configuration grid, persisted fronts and report tables.

Output layout under the output directory:

    <case>/<config-id>/run-<k>/front.csv       one independent run
    <case>/<config-id>/run-<k>/progress.jsonl  per-generation progress
    <case>/<config-id>/merged_front.csv        non-dominated union of the runs
    <case>/reference_front.csv                 non-dominated union of every config
    <case>/indicators.csv                      ranking table of every config
    <case>/shares.csv                          action kinds among front genes
    <case>/improvements.csv                    solutions improving perfQ and reliability
"""
import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import comb

from engine.config import probpas_label
from engine.errors import HarnessError
from engine.fixtures import load_case_study
from engine.indicators import INDICATORS, evaluate_all, ranking_table
from engine.nsga2 import run as run_nsga2
from engine.objectives import OBJECTIVE_NAMES, ObjectiveVector, RefactoringProblem
from engine.pareto import non_dominated, unique_points
from engine.refactoring import KINDS, RefactoringSequence, target_counts
from engine.reliability import system_reliability

logger = logging.getLogger(__name__)

FRONT_COLUMNS = ["solution", *OBJECTIVE_NAMES, "genotype"]
CONFIG_ID_PATTERN = re.compile(r"^brf-(yes|no)_evo-(\d+)_pas-(off|[0-9.]+)$")
# reliability differences below this are rounding noise
RELIABILITY_TOL = 1e-12


@dataclass
class RunOutcome:
    case_study: str
    config_id: str
    run_index: int
    seed: int
    status: str
    front: pd.DataFrame = None
    error: str = None
    evaluations: int = 0
    generations: int = 0
    started_at: str = None
    finished_at: str = None

    @property
    def front_size(self):
        return 0 if self.front is None else len(self.front)

    def ledger_row(self):
        return {
            "case_study": self.case_study,
            "config_id": self.config_id,
            "run_index": self.run_index,
            "seed": self.seed,
            "status": self.status,
            "error": self.error,
            "front_size": self.front_size,
            "evaluations": self.evaluations,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


@dataclass
class CaseResult:
    merged_fronts: Dict[str, pd.DataFrame]
    reference: pd.DataFrame
    indicators: pd.DataFrame
    shares: pd.DataFrame
    improvements: pd.DataFrame


@dataclass
class ExperimentResult:
    outcomes: List[RunOutcome]
    cases: Dict[str, CaseResult] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def failures(self):
        return [o for o in self.outcomes if o.status != "ok"]


# -- seeds and ids --------------------------------------------------------------

def derive_seed(master_seed, config_id, run_index):
    digest = int.from_bytes(hashlib.sha256(config_id.encode("utf-8")).digest()[:8], "big")
    return int(np.random.SeedSequence([master_seed, digest, run_index]).generate_state(1)[0])


def parse_config_id(config_id):
    match = CONFIG_ID_PATTERN.match(config_id)
    if match is None:
        raise HarnessError(f"not a configuration id: {config_id!r}")
    brf, evolutions, pas = match.groups()
    return {
        "brf": brf,
        "maxeval": int(evolutions),
        "probpas": probpas_label(None if pas == "off" else float(pas)),
    }


# -- fronts -----------------------------------------------------------------------

def front_frame(individuals):
    rows = []
    for k, ind in enumerate(individuals):
        rows.append({"solution": k, **ind.objectives.to_dict(),
                     "genotype": json.dumps(ind.genotype.to_list())})
    return pd.DataFrame(rows, columns=FRONT_COLUMNS)


def front_points(frame):
    """Canonical (all-minimize) objective vectors of a front table."""
    return np.array([ObjectiveVector(*row).canonical()
                     for row in frame[list(OBJECTIVE_NAMES)].itertuples(index=False)], dtype=float).reshape(-1, 4)


def front_genotypes(frame):
    return [RefactoringSequence.from_list(json.loads(g)) for g in frame["genotype"]]


def save_front(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def load_front(path):
    path = Path(path)
    if not path.exists():
        raise HarnessError(f"front file not found: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def merge_fronts(frames):
    """Non-dominated union of several front tables, duplicates removed, renumbered."""
    frames = [f for f in frames if f is not None and len(f)]
    if not frames:
        return pd.DataFrame(columns=FRONT_COLUMNS)
    union = pd.concat(frames, ignore_index=True)
    points = front_points(union)
    keep = unique_points(points)
    keep = [keep[i] for i in non_dominated(points[keep])]
    merged = union.iloc[keep].reset_index(drop=True)
    merged["solution"] = range(len(merged))
    return merged


# -- runs ---------------------------------------------------------------------------

def run_directory(config, run_index):
    return Path(config.output_dir) / config.case_study / config.config_id / f"run-{run_index}"


def run_one(config, run_index, master_seed):
    """One independent GA run; writes only inside its own run directory."""
    seed = derive_seed(master_seed, config.config_id, run_index)
    outcome = RunOutcome(config.case_study, config.config_id, run_index, seed, "running",
                         started_at=datetime.now().isoformat(timespec="seconds"))
    run_dir = run_directory(config, run_index)
    run_dir.mkdir(parents=True, exist_ok=True)
    progress_path = run_dir / "progress.jsonl"
    try:
        problem = RefactoringProblem(load_case_study(config.case_study), config)
        with progress_path.open("w", encoding="utf-8") as progress:
            result = run_nsga2(problem, config.ga, np.random.default_rng(seed),
                               progress=lambda record: progress.write(json.dumps(record) + "\n"))
        outcome.front = front_frame(result.front)
        save_front(outcome.front, run_dir / "front.csv")
        outcome.evaluations = result.evaluations
        outcome.generations = result.generations
        outcome.status = "ok"
    except Exception as e:
        logger.warning("%s run %d failed: %s", config.config_id, run_index, e)
        outcome.status = "failed"
        outcome.error = f"{type(e).__name__}: {e}"
    outcome.finished_at = datetime.now().isoformat(timespec="seconds")
    return outcome


def run_grid(configs, master_seed=0, jobs=1, on_run=None):
    """Run every config's independent runs, then merge fronts and build the report tables.

    on_run is called in this process with each RunOutcome, in submission order.
    """
    configs = list(configs)
    if not configs:
        raise HarnessError("nothing to run")
    for config in configs:
        config.validate()
    started = time.monotonic()
    tasks = [(config, k) for config in configs for k in range(config.ga.independent_runs)]
    logger.info("running %d configurations, %d runs, %d jobs", len(configs), len(tasks), jobs)
    outcomes = Parallel(n_jobs=jobs)(delayed(run_one)(config, k, master_seed) for config, k in tasks)
    for outcome in outcomes:
        if on_run is not None:
            on_run(outcome)

    by_config = {}
    for (config, _), outcome in zip(tasks, outcomes):
        by_config.setdefault(config, []).append(outcome)
    for config, runs in by_config.items():
        merged = merge_fronts([o.front for o in runs if o.status == "ok"])
        save_front(merged, Path(config.output_dir) / config.case_study / config.config_id / "merged_front.csv")

    result = ExperimentResult(list(outcomes))
    for output_dir, case in sorted({(str(c.output_dir), c.case_study) for c in configs}):
        result.cases[case] = recompute_indicators(output_dir, case)
    result.wall_clock = time.monotonic() - started
    if result.failures:
        logger.warning("%d of %d runs failed", len(result.failures), len(outcomes))
    return result


# -- report tables ------------------------------------------------------------------

def refactoring_share_table(merged_fronts):
    """Percentage of each action kind among all genes of each config's front, plus a Total row."""
    rows = []
    for config_id, frame in merged_fronts.items():
        counts = dict.fromkeys(KINDS, 0)
        for genotype in front_genotypes(frame):
            for kind in genotype.kinds:
                counts[kind] += 1
        total = sum(counts.values())
        row = {"config": config_id}
        for kind in KINDS:
            row[kind] = 100.0 * counts[kind] / total if total else 0.0
        rows.append(row)
    table = pd.DataFrame(rows, columns=["config", *KINDS])
    if rows:
        total_row = {"config": "Total", **{kind: float(table[kind].mean()) for kind in KINDS}}
        table = pd.concat([table, pd.DataFrame([total_row])], ignore_index=True)
    return table


def improvement_table(merged_fronts, reference, initial_reliability):
    """Solutions improving performance (perfQ > 0) without losing reliability."""
    rows = []
    for name, frame in [*merged_fronts.items(), ("reference", reference)]:
        improving = frame[(frame["perfQ"] > 0) & (frame["reliability"] >= initial_reliability - RELIABILITY_TOL)]
        rows.append({
            "config": name,
            "solutions": len(frame),
            "improving": len(improving),
            "share": 100.0 * len(improving) / len(frame) if len(frame) else 0.0,
            "max_perfQ": float(frame["perfQ"].max()) if len(frame) else float("nan"),
            "max_reliability_gain": float((frame["reliability"].max() - initial_reliability) / initial_reliability)
            if len(frame) else float("nan"),
        })
    return pd.DataFrame(rows)


def recompute_indicators(output_dir, case_study):
    """Rebuild reference front, indicators, shares and improvements from persisted merged fronts."""
    case_dir = Path(output_dir) / case_study
    paths = sorted(case_dir.glob("*/merged_front.csv"))
    merged = {p.parent.name: load_front(p) for p in paths if CONFIG_ID_PATTERN.match(p.parent.name)}
    if not merged:
        raise HarnessError(f"no persisted fronts under {case_dir}")

    labelled = []
    for config_id, frame in merged.items():
        frame = frame.copy()
        frame.insert(0, "config", config_id)
        labelled.append(frame)
    union = pd.concat(labelled, ignore_index=True)
    points = front_points(union)
    keep = unique_points(points)
    keep = [keep[i] for i in non_dominated(points[keep])] if keep else []
    reference = union.iloc[keep].reset_index(drop=True)
    reference.to_csv(case_dir / "reference_front.csv", index=False)
    reference_points = front_points(reference)

    records = []
    for config_id, frame in merged.items():
        if not len(frame):
            continue
        labels = parse_config_id(config_id)
        values = evaluate_all(front_points(frame), reference_points)
        for name in INDICATORS:
            records.append({**labels, "q_indicator": name, "value": values[name]})
    indicators = ranking_table(records)
    indicators.to_csv(case_dir / "indicators.csv", index=False)

    shares = refactoring_share_table({k: f for k, f in merged.items() if len(f)})
    shares.to_csv(case_dir / "shares.csv", index=False)

    initial = system_reliability(load_case_study(case_study))
    improvements = improvement_table(merged, reference.drop(columns="config"), initial)
    improvements.to_csv(case_dir / "improvements.csv", index=False)
    return CaseResult(merged, reference, indicators, shares, improvements)


# -- solution space -------------------------------------------------------------------

def solution_space_size(model, chromosome_length):
    """Product over action kinds of C(valid targets, chromosome length)."""
    if chromosome_length < 1:
        raise HarnessError(f"chromosome length must be >= 1, got {chromosome_length}")
    counts = target_counts(model)
    omega = 1
    for kind, n in counts.items():
        factor = comb(n, chromosome_length, exact=True)
        if factor == 0:
            logger.warning("only %d valid %s targets for sequences of %d actions: solution space is empty",
                           n, kind, chromosome_length)
        omega *= factor
    return omega
