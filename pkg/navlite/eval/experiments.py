"""
Experimentos de avaliacao

- tarefas A-E: especialista, rastreador de caminho e redes nos mapas embutidos
- ablacao no ponto cego (5 cestos a 5 m)
- separacao multimodal no problema sintetico
- deriva e reancoragem no predio de 3 plantas
"""

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..core.config import SimConfig, TrainConfig
from ..core.log import get_logger
from ..decision.checkpoint import save_checkpoint
from ..decision.data import DemoDataset, split_dataset, synthetic_mode_task
from ..decision.features import mode_separation
from ..decision.net import DecisionNet, build_baseline
from ..decision.train import desk_train_config, tbptt_train
from ..sim.fixtures import FIXTURE_MAPS, TASKS, fixture_scenario
from ..sim.odometry import OdometryModel
from ..sim.trajlog import TrajectoryLog
from .harness import PolicySpec, run_grid, run_trials
from .reports import ReportTable, ablation_report, task_report

logger = get_logger(__name__)

Runs = dict[str, dict[str, list[TrajectoryLog]]]


def tasks_experiment(policies: Sequence[PolicySpec], seeds: Sequence[int], jobs: int = 1,
                     sim: Optional[SimConfig] = None) -> tuple[Runs, ReportTable]:
    """Tabela de comparacao nas cinco tarefas"""
    scenarios = [fixture_scenario(name) for name in TASKS]
    runs = run_grid(scenarios, policies, seeds, jobs, sim)
    return runs, task_report(runs, title="Tarefas A-E")


def blind_spot_experiment(policies: Sequence[PolicySpec], seeds: Sequence[int], jobs: int = 1,
                          sim: Optional[SimConfig] = None) -> tuple[Runs, ReportTable]:
    runs = run_grid([fixture_scenario("blind_spot")], policies, seeds, jobs, sim)
    return runs, ablation_report(runs, throughput=True, title="Ponto cego (5 cestos)")


def train_policy_net(kind: str, dataset: DemoDataset, cfg: Optional[TrainConfig] = None,
                     seed: int = 0, checkpoint: Optional[Path] = None,
                     **net_overrides) -> tuple[DecisionNet, list[float]]:
    """Treina uma rede do tipo pedido nas demonstracoes e salva o checkpoint"""
    cfg = cfg or desk_train_config()
    net = build_baseline(kind, input_side=dataset.side, in_channels=dataset.channels, seed=seed,
                         **net_overrides)
    net, losses = tbptt_train(net, dataset, cfg, np.random.default_rng(seed))
    logger.info(f"{kind}: {len(losses)} iteracoes, perda {losses[0]:.4f} -> {losses[-1]:.4f}")
    if checkpoint is not None:
        save_checkpoint(net, checkpoint, meta={"kind": kind, "iterations": len(losses)})
    return net, losses


class SeparationResult(BaseModel):
    """|theta(TurnLeft) - theta(TurnRight)| por tipo de rede"""
    separation: dict[str, float]
    initial_loss: dict[str, float]
    final_loss: dict[str, float]


def separation_experiment(
    kinds: Sequence[str] = ("decision", "no_multimodal_memory"),
    iters: int = 200,
    seed: int = 0,
    side: int = 16,
) -> SeparationResult:
    """Mesmo treino para cada tipo; separacao medida nas entradas de teste"""
    rng = np.random.default_rng(seed)
    dataset = synthetic_mode_task(rng, side=side)
    train, test = split_dataset(dataset, rng)
    images = test.images(slice(None))
    sep, first, last = {}, {}, {}
    for kind in kinds:
        net, losses = train_policy_net(
            kind, train, desk_train_config(max_iters=iters), seed=seed,
            channels=[4, 8, 8], max_groups=4, head_hidden=16, intention_latent=8,
        )
        sep[kind] = mode_separation(net, images)
        first[kind], last[kind] = losses[0], losses[-1]
    return SeparationResult(separation=sep, initial_loss=first, final_loss=last)


class DriftResult(BaseModel):
    """Erros de estimativa com e sem reancoragem"""
    anchoring: bool
    sigma_t: float
    max_margin_m: float
    terminal_errors: list[float]
    exits_detected: list[int]
    error_after_anchor: float = Field(description="Maior erro logo apos uma reancoragem")

    @property
    def exceed_fraction(self) -> float:
        if not self.terminal_errors:
            return 0.0
        return float(np.mean([e > self.max_margin_m for e in self.terminal_errors]))


def drift_experiment(seeds: Sequence[int], sigma_t: float = 0.05, anchoring: bool = True,
                     jobs: int = 1, sim: Optional[SimConfig] = None) -> DriftResult:
    """Especialista no predio; rota planejada uma vez, estimativa so por odometria"""
    scenario = fixture_scenario("building").model_copy(update={
        "odometry": OdometryModel(sigma_t=sigma_t),
        "plan_once": True,
        "anchoring": anchoring,
        "name": f"building_{'anchor' if anchoring else 'drift'}",
    })
    bundle = FIXTURE_MAPS["building"]()
    logs = run_trials(scenario, PolicySpec(kind="expert"), seeds, jobs, sim)
    after = [a.error_after for log in logs for a in log.anchors]
    return DriftResult(
        anchoring=anchoring, sigma_t=sigma_t,
        max_margin_m=max(e.margin_m for e in bundle.exits.values()),
        terminal_errors=[log.terminal_error for log in logs],
        exits_detected=[len(log.anchors) for log in logs],
        error_after_anchor=max(after) if after else 0.0,
    )
