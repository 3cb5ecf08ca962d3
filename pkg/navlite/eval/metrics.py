"""
Metricas de tarefa: SR, taxa de conclusao, tempo e suavidade (jerk)
"""

from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.errors import EmptyTrials, TooShort
from ..sim.trajlog import TrajectoryLog


class TrialRecord(BaseModel):
    """s passos bem sucedidos de n"""
    s: int = Field(ge=0)
    n: int = Field(ge=1)

    @model_validator(mode="after")
    def _bounded(self) -> "TrialRecord":
        if self.s > self.n:
            raise ValueError(f"s={self.s} maior que n={self.n}")
        return self

    @property
    def complete(self) -> bool:
        return self.s == self.n


def _check(trials: Sequence[TrialRecord]) -> None:
    if not trials:
        raise EmptyTrials("Lista de tentativas vazia")


def success_rate(trials: Sequence[TrialRecord]) -> float:
    """(1/N) * soma de [s_i == n]"""
    _check(trials)
    return sum(1 for t in trials if t.complete) / len(trials)


def completion_rate(trials: Sequence[TrialRecord]) -> float:
    """(1/N) * soma de s_i / n"""
    _check(trials)
    return sum(t.s / t.n for t in trials) / len(trials)


def smoothness(positions, dt: float) -> float:
    """Media da norma do jerk (terceira diferenca / dt^3)"""
    p = np.asarray(positions, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if len(p) < 4:
        raise TooShort(f"{len(p)} amostras; jerk exige ao menos 4")
    if dt <= 0:
        raise ValueError("dt deve ser positivo")
    jerk = np.diff(p, n=3, axis=0) / dt**3
    return float(np.linalg.norm(jerk, axis=1).mean())


def log_smoothness(log: TrajectoryLog) -> Optional[float]:
    """Jerk medio nos trechos continuos do log, ponderado pelo numero de amostras"""
    total, count = 0.0, 0
    for segment in log.motion_segments():
        if len(segment) < 4:
            continue
        k = len(segment) - 3
        total += smoothness(segment, log.dt) * k
        count += k
    return total / count if count else None


def trial_from_log(log: TrajectoryLog) -> TrialRecord:
    return TrialRecord(s=log.successful_steps, n=max(len(log.steps), 1))


class MetricsReport(BaseModel):
    """Linha de tabela de um (tarefa, metodo)"""
    task: str
    method: str
    trials: int
    sr: float = Field(ge=0, le=1, description="Success rate")
    avg_int: float = Field(ge=0, le=1, description="Taxa de conclusao (Avg.Int.)")
    interventions: float = Field(ge=0, description="Intervencoes por tentativa")
    time_s: float = Field(ge=0, description="Tempo simulado medio (s)")
    smoothness: Optional[float] = Field(default=None, ge=0, description="Jerk medio (m/s^3)")
    throughput: Optional[float] = Field(default=None, description="Chamadas da rede por segundo")

    @classmethod
    def from_logs(cls, task: str, method: str, logs: Sequence[TrajectoryLog]) -> "MetricsReport":
        trials = [trial_from_log(log) for log in logs]
        jerks = [j for j in (log_smoothness(log) for log in logs) if j is not None]
        calls = sum(log.forward_calls for log in logs)
        wall = sum(log.wall_seconds for log in logs)
        return cls(
            task=task, method=method, trials=len(trials),
            sr=success_rate(trials), avg_int=completion_rate(trials),
            interventions=float(np.mean([log.interventions for log in logs])),
            time_s=float(np.mean([log.time_s for log in logs])),
            smoothness=float(np.mean(jerks)) if jerks else None,
            throughput=calls / wall if calls and wall > 0 else None,
        )
