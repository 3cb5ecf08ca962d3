"""
Execucao de episodios por semente, em serie ou em processos paralelos
"""

import multiprocessing
from pathlib import Path
from typing import Literal, NamedTuple, Optional, Sequence

from pydantic import BaseModel, Field

from ..core.config import SimConfig, config
from ..core.errors import ParseError
from ..core.log import get_logger
from ..decision.checkpoint import load_checkpoint
from ..sim.episode import ExpertPolicy, NetPolicy, PathTrackerPolicy, Policy, run_episode
from ..sim.fixtures import resolve_map
from ..sim.scenario import Scenario
from ..sim.trajlog import TrajectoryLog

logger = get_logger(__name__)


class PolicySpec(BaseModel):
    """Politica serializavel para os processos de avaliacao"""
    kind: Literal["expert", "path_tracker", "net"] = "expert"
    checkpoint: Optional[str] = Field(default=None, description="Checkpoint da rede")
    name: Optional[str] = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "net" and self.checkpoint:
            return Path(self.checkpoint).stem
        return self.kind


def build_policy(spec: PolicySpec) -> Policy:
    if spec.kind == "expert":
        return ExpertPolicy(name=spec.label)
    if spec.kind == "path_tracker":
        return PathTrackerPolicy(name=spec.label)
    if not spec.checkpoint:
        raise ParseError("Politica 'net' exige um checkpoint", location="checkpoint")
    return NetPolicy(load_checkpoint(Path(spec.checkpoint)), name=spec.label)


class Job(NamedTuple):
    scenario: Scenario
    policy: PolicySpec
    seed: int
    sim: SimConfig


def _run_job(job: Job) -> TrajectoryLog:
    return run_episode(build_policy(job.policy), job.scenario, job.seed, sim=job.sim)


def _run_serial(jobs: Sequence[Job]) -> list[TrajectoryLog]:
    """Reaproveita politicas e mapas entre episodios do mesmo processo"""
    policies: dict[str, Policy] = {}
    bundles: dict[str, object] = {}
    logs = []
    for job in jobs:
        key = job.policy.model_dump_json()
        if key not in policies:
            policies[key] = build_policy(job.policy)
        if job.scenario.map not in bundles:
            bundles[job.scenario.map] = resolve_map(job.scenario)
        log = run_episode(policies[key], job.scenario, job.seed,
                          bundle=bundles[job.scenario.map], sim=job.sim)
        logger.debug(f"{job.scenario.name}/{job.policy.label}/{job.seed}: "
                     f"{log.ticks} ticks, {log.interventions} intervencoes")
        logs.append(log)
    return logs


def run_jobs(jobs: Sequence[Job], workers: int = 1) -> list[TrajectoryLog]:
    """Logs na mesma ordem dos jobs, qualquer que seja o paralelismo"""
    if workers <= 1 or len(jobs) <= 1:
        return _run_serial(jobs)
    ctx = multiprocessing.get_context("spawn")
    with ctx.Pool(processes=min(workers, len(jobs))) as pool:
        return pool.map(_run_job, jobs, chunksize=1)


def run_trials(scenario: Scenario, policy: PolicySpec, seeds: Sequence[int], jobs: int = 1,
               sim: Optional[SimConfig] = None) -> list[TrajectoryLog]:
    sim = sim or config.sim
    return run_jobs([Job(scenario, policy, seed, sim) for seed in seeds], jobs)


def run_grid(
    scenarios: Sequence[Scenario],
    policies: Sequence[PolicySpec],
    seeds: Sequence[int],
    jobs: int = 1,
    sim: Optional[SimConfig] = None,
) -> dict[str, dict[str, list[TrajectoryLog]]]:
    """metodo -> tarefa -> logs por semente (ordem das sementes)"""
    sim = sim or config.sim
    grid = [Job(s, p, seed, sim) for p in policies for s in scenarios for seed in sorted(seeds)]
    logs = iter(run_jobs(grid, jobs))
    runs: dict[str, dict[str, list[TrajectoryLog]]] = {}
    for p in policies:
        for s in scenarios:
            runs.setdefault(p.label, {})[s.name] = [next(logs) for _ in seeds]
    return runs


def save_logs(runs: dict[str, dict[str, list[TrajectoryLog]]], directory: Path) -> list[Path]:
    """logs/<metodo>/<tarefa>_<semente>.csv|json"""
    written = []
    for method, tasks in runs.items():
        for task, logs in tasks.items():
            for log in logs:
                written.extend(log.save(Path(directory) / method, f"{task}_{log.seed}"))
    return written
