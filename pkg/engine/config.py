"""Typed configuration for the genetic algorithm and the optimization problem."""
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from engine.errors import ConfigError

CASE_STUDIES = ("ttbs", "cocome")
FUZZINESS_LEVELS = (None, 0.55, 0.80, 0.95)
EVOLUTION_LEVELS = (72, 82, 102)
BUDGET_UNITS = ("generations", "evaluations")


def probpas_label(fuzziness):
    """Fuzziness as the integer percentage used in report tables (0 when disabled)."""
    return 0 if fuzziness is None else int(round(fuzziness * 100))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 16
    max_evolutions: int = 72
    p_crossover: float = 0.8
    p_mutation: float = 0.2
    sequence_length: int = 4
    independent_runs: int = 3
    seed: int = 0
    # "generations": max_evolutions counts generations; "evaluations": it counts fitness evaluations
    budget_unit: str = "generations"

    def validate(self):
        problems = []
        for name in ("p_crossover", "p_mutation"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must be in [0, 1], got {value}")
        if self.population_size < 2:
            problems.append(f"population_size must be >= 2, got {self.population_size}")
        if self.sequence_length < 1:
            problems.append(f"sequence_length must be >= 1, got {self.sequence_length}")
        if self.max_evolutions < 1:
            problems.append(f"max_evolutions must be >= 1, got {self.max_evolutions}")
        if self.independent_runs < 1:
            problems.append(f"independent_runs must be >= 1, got {self.independent_runs}")
        if self.budget_unit not in BUDGET_UNITS:
            problems.append(f"budget_unit must be one of {BUDGET_UNITS}, got {self.budget_unit!r}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


@dataclass(frozen=True)
class ProblemConfig:
    case_study: str = "ttbs"
    brf_enabled: bool = True
    # None disables antipattern detection (the pas objective is fixed at 0)
    fuzziness: Optional[float] = 0.95
    ga: GaConfig = field(default_factory=GaConfig)
    output_dir: Path = Path("results")
    utilization_knee: float = 0.8
    pas_count_mode: bool = False
    solver_tol: float = 1e-6
    solver_max_iter: int = 1000

    @property
    def max_evolutions(self):
        return self.ga.max_evolutions

    @property
    def antipatterns_enabled(self):
        return self.fuzziness is not None

    @property
    def config_id(self):
        brf = "yes" if self.brf_enabled else "no"
        pas = "off" if self.fuzziness is None else f"{self.fuzziness:.2f}"
        return f"brf-{brf}_evo-{self.max_evolutions}_pas-{pas}"

    @property
    def probpas_label(self):
        return probpas_label(self.fuzziness)

    def validate(self):
        self.ga.validate()
        problems = []
        if self.fuzziness is not None and not 0.0 < self.fuzziness <= 1.0:
            problems.append(f"fuzziness must be in (0, 1] or disabled, got {self.fuzziness}")
        if not 0.0 <= self.utilization_knee < 1.0:
            problems.append(f"utilization_knee must be in [0, 1), got {self.utilization_knee}")
        if self.solver_tol <= 0:
            problems.append(f"solver_tol must be > 0, got {self.solver_tol}")
        if self.solver_max_iter < 1:
            problems.append(f"solver_max_iter must be >= 1, got {self.solver_max_iter}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def with_ga(self, **changes):
        return replace(self, ga=replace(self.ga, **changes))

    def to_dict(self):
        data = asdict(self)
        data["output_dir"] = str(self.output_dir)
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        ga_data = data.pop("ga", {}) or {}
        ga_unknown = set(ga_data) - {f for f in GaConfig.__dataclass_fields__}
        if ga_unknown:
            raise ConfigError(f"unknown ga configuration keys: {sorted(ga_unknown)}")
        fuzziness = data.get("fuzziness", 0.95)
        # 0 is the "antipatterns disabled" sentinel used on the command line and in reports
        if fuzziness is not None and float(fuzziness) == 0.0:
            data["fuzziness"] = None
        if "output_dir" in data:
            data["output_dir"] = Path(data["output_dir"])
        return cls(ga=GaConfig(**ga_data), **data).validate()


def configuration_grid(case_study, brf_values=(True, False), fuzziness_values=FUZZINESS_LEVELS,
                       evolution_values=EVOLUTION_LEVELS, ga=None, output_dir=Path("results")):
    """All (brf, fuzziness, evolutions) combinations for one case study, in a stable order."""
    if case_study not in CASE_STUDIES:
        raise ConfigError(f"unknown case study {case_study!r}; expected one of {CASE_STUDIES}")
    ga = ga or GaConfig()
    configs = []
    for brf in brf_values:
        for evolutions in evolution_values:
            for fuzziness in fuzziness_values:
                configs.append(ProblemConfig(
                    case_study=case_study,
                    brf_enabled=brf,
                    fuzziness=fuzziness,
                    ga=replace(ga, max_evolutions=evolutions),
                    output_dir=Path(output_dir),
                ).validate())
    return configs
