"""One-call simulation from parameters and initial mass."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .history import HistoryConfig, build_history
from .integrator import IntegratorConfig, integrate
from .model import ModelParams
from .trajectory import Trajectory


@dataclass(frozen=True)
class RunSpec:
    params: ModelParams = field(default_factory=ModelParams)
    mu: float = 1.0
    t_end: float = 1000.0
    step: float = 0.01
    history_step: float | None = None
    correction_passes: int = 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d


def simulate(spec: RunSpec) -> Trajectory:
    hist = build_history(spec.params, HistoryConfig(spec.mu, spec.history_step))
    cfg = IntegratorConfig(t_end=spec.t_end, step=spec.step,
                           correction_passes=spec.correction_passes)
    return integrate(spec.params, hist, cfg)


def run(params: ModelParams | None = None, *, mu: float = 1.0, t_end: float = 1000.0,
        step: float = 0.01, history_step: float | None = None) -> Trajectory:
    """Shorthand for ``simulate(RunSpec(...))``."""
    return simulate(RunSpec(params or ModelParams(), mu, t_end, step, history_step))
