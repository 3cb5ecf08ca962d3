"""
Interface CLI do NAVLITE
"""

import csv
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import typer
from pydantic import BaseModel, Field, ValidationError
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from ..core.config import NavLiteConfig, config
from ..core.errors import BundleValidationError, NavLiteError, ParseError, Unreachable
from ..core.log import console, get_logger, setup_logging
from ..decision.checkpoint import save_checkpoint
from ..decision.data import DemoDataset, synthetic_mode_task
from ..decision.net import build_baseline
from ..decision.train import desk_train_config, tbptt_train
from ..eval.harness import PolicySpec, run_grid, save_logs
from ..eval.reports import (
    ReportTable, ablation_report, experiment_summary, task_report, write_summary,
)
from ..intention.plan import build_route_intentions
from ..mapsys.manifest import build_from_manifest, load_manifest
from ..mapsys.storage import load_bundle, save_bundle
from ..mapsys.types import EdgeKind, MapBundle, Pose2D
from ..mapsys.validate import validate_bundle
from ..planner.route import RoutePlan, Transition, stitch
from ..planner.topo import plan_topological
from ..planner.grid import GridPath, inflation_cells
from ..sim.episode import collect_demonstrations
from ..sim.fixtures import FIXTURE_SCENARIOS, TASKS, fixture_scenario
from ..sim.scenario import Scenario, load_scenario
from ..sim.trajlog import TrajectoryLog

app = typer.Typer(
    name="navlite",
    help="NAVLITE - Navegacao hierarquica com mapas leves",
    add_completion=False,
)
map_app = typer.Typer(help="Construcao e validacao de bundles de mapa")
app.add_typer(map_app, name="map")

logger = get_logger(__name__)

OUTPUT_DIRS = ("dataset", "checkpoints", "logs", "reports")


class RunConfig(BaseModel):
    """Configuracao de collect/train/eval; flags explicitas sobrescrevem o arquivo"""
    map: Optional[str] = Field(default=None, description="Bundle de mapa (opcional)")
    scenarios: list[str] = Field(default_factory=list, description="Nomes embutidos ou arquivos")
    policy: Literal["expert", "path_tracker", "net"] = "expert"
    kind: str = Field(default="decision", description="Tipo de rede para treino")
    checkpoint: Optional[str] = None
    dataset: Optional[str] = None
    train: dict = Field(default_factory=dict, description="Sobrescritas do TrainConfig")
    seeds: list[int] = Field(default_factory=lambda: list(range(config.eval.seeds)))
    jobs: int = Field(default_factory=lambda: config.eval.jobs, ge=1)
    out: str = "runs"

    def check(self) -> "RunConfig":
        if not self.seeds:
            raise ParseError("Lista de sementes vazia", location="seeds")
        for field in ("map", "checkpoint", "dataset"):
            value = getattr(self, field)
            if value is not None and not Path(value).exists():
                raise ParseError(f"Arquivo inexistente: {value}", location=field)
        return self

    def output(self, name: str) -> Path:
        path = Path(self.out) / name
        path.mkdir(parents=True, exist_ok=True)
        return path


def load_run_config(path: Optional[Path], **flags) -> RunConfig:
    """Arquivo (se houver) + flags nao nulas"""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ParseError("JSON invalido", location=f"linha {e.lineno}, coluna {e.colno}") from e
    data.update({k: v for k, v in flags.items() if v is not None and v != []})
    try:
        return RunConfig(**data).check()
    except ValidationError as e:
        where = ".".join(str(p) for p in e.errors()[0]["loc"]) if e.errors() else None
        raise ParseError(f"Configuracao invalida: {e}", location=where) from e


@contextmanager
def handled():
    """Erros viram mensagens e codigos de saida (2 validacao, 1 demais)"""
    try:
        yield
    except BundleValidationError as e:
        console.print(f"[red]{escape(str(e))}[/red]")
        for v in e.violations:
            console.print(f"  [yellow]{escape(str(v))}[/yellow]")
        raise typer.Exit(2)
    except Unreachable as e:
        console.print(f"[red]Objetivo inalcancavel (unreachable): {escape(str(e))}[/red]")
        raise typer.Exit(1)
    except (NavLiteError, OSError) as e:
        console.print(f"[red]Erro: {escape(str(e))}[/red]")
        raise typer.Exit(1)


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log detalhado"),
):
    """NAVLITE - Navegacao hierarquica com mapas leves"""
    setup_logging(logging.DEBUG if verbose else logging.INFO)


# --- mapa ---

@map_app.command("build")
def map_build(
    manifest: Path = typer.Argument(..., help="Manifesto JSON (plantas, saidas, ruas)"),
    output: Path = typer.Option(Path("bundle.json"), "--output", "-o", help="Bundle de saida"),
):
    """Gera um bundle validado a partir de rasters e anotacoes"""
    with handled():
        bundle = build_from_manifest(load_manifest(manifest), manifest.parent)
        violations = validate_bundle(bundle)
        if violations:
            raise BundleValidationError(violations)
        save_bundle(bundle, output)
    counts = {k.value: sum(1 for e in bundle.edges if e.kind == k) for k in EdgeKind}
    console.print(f"[green]Bundle salvo em {output}[/green]")
    console.print(f"  plantas: {len(bundle.floorplans)}  saidas: {len(bundle.exits)}  "
                  + "  ".join(f"{k}: {n}" for k, n in counts.items()))


@map_app.command("validate")
def map_validate(bundle_path: Path = typer.Argument(..., help="Bundle JSON")):
    """Lista violacoes; sai com 2 se houver alguma"""
    with handled():
        bundle = load_bundle(bundle_path, validate=False)
        violations = validate_bundle(bundle)
        if violations:
            raise BundleValidationError(violations)
    console.print("[green]Bundle valido[/green]")


# --- planejamento e intencoes ---

def parse_endpoint(text: str, bundle: MapBundle) -> Union[Pose2D, str]:
    """ID de saida ou 'planta,x,y[,rumo]' em metros"""
    if text in bundle.exits:
        return text
    parts = text.split(",")
    if len(parts) not in (3, 4):
        raise ParseError(f"Ponto invalido: '{text}'", location="planta,x,y[,rumo]")
    try:
        values = [float(p) for p in parts[1:]]
    except ValueError as e:
        raise ParseError(f"Ponto invalido: '{text}'", location="planta,x,y[,rumo]") from e
    return Pose2D(frame=parts[0], x=values[0], y=values[1],
                  heading=values[2] if len(values) == 3 else 0.0)


def _route(bundle: MapBundle, start: str, goal: str, inflation_m: float) -> RoutePlan:
    a, b = parse_endpoint(start, bundle), parse_endpoint(goal, bundle)
    frame = a.frame if isinstance(a, Pose2D) else bundle.exits[a].floorplan_id
    cells = inflation_cells(bundle.floorplans[frame], inflation_m) if inflation_m > 0 else None
    return stitch(bundle, plan_topological(bundle, a, b, cells), inflation=cells)


def _print_route(route: RoutePlan) -> None:
    console.print(f"[bold]Saidas:[/bold] {' -> '.join(route.exits) or '(nenhuma)'}")
    table = Table(title=f"Rota (peso {route.weight:.2f})")
    table.add_column("#", justify="right")
    table.add_column("Tipo")
    table.add_column("Referencial")
    table.add_column("Detalhe")
    for i, item in enumerate(route.items):
        if isinstance(item, GridPath):
            table.add_row(str(i), "grid", item.floorplan_id,
                          f"{len(item.cells)} celulas, custo {item.cost:.2f} m")
        elif isinstance(item, Transition):
            table.add_row(str(i), "transicao", item.kind.value,
                          f"{item.from_id} -> {item.to_id} ({item.exit_type.value})")
        else:
            table.add_row(str(i), "rua", "road", f"{len(item.node_ids)} nos")
    console.print(table)


@app.command()
def plan(
    bundle_path: Path = typer.Argument(..., help="Bundle JSON"),
    start: str = typer.Option(..., "--start", "-s", help="Saida ou 'planta,x,y'"),
    goal: str = typer.Option(..., "--goal", "-g", help="Saida ou 'planta,x,y'"),
    inflation: float = typer.Option(0.0, "--inflation", help="Inflacao de obstaculos (m)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Salva a rota em JSON"),
):
    """Sequencia de saidas e caminhos por segmento"""
    with handled():
        route = _route(load_bundle(bundle_path), start, goal, inflation)
        if output is not None:
            output.write_text(route.to_json())
    _print_route(route)


@app.command()
def intent(
    bundle_path: Path = typer.Argument(..., help="Bundle JSON"),
    start: str = typer.Option(..., "--start", "-s", help="Saida ou 'planta,x,y'"),
    goal: str = typer.Option(..., "--goal", "-g", help="Saida ou 'planta,x,y'"),
    inflation: float = typer.Option(0.0, "--inflation", help="Inflacao de obstaculos (m)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Salva o plano em JSON"),
):
    """Pontos de controle com intencao e raio de influencia"""
    with handled():
        intentions = build_route_intentions(_route(load_bundle(bundle_path), start, goal, inflation))
        if output is not None:
            output.write_text(intentions.to_json())
    table = Table(title="Intencoes")
    for col in ("#", "Referencial", "x", "y", "DLM", "Raio (m)"):
        table.add_column(col)
    for i, p in enumerate(intentions.points):
        table.add_row(str(i), p.frame, f"{p.x:.2f}", f"{p.y:.2f}", p.dlm.value, f"{p.radius:.2f}")
    console.print(table)


# --- pipeline ---

def resolve_scenarios(refs: list[str]) -> list[Scenario]:
    """Nomes embutidos, 'tasks' (A-E) ou arquivos JSON"""
    scenarios = []
    for ref in refs:
        if ref == "tasks":
            scenarios.extend(fixture_scenario(name) for name in TASKS)
        elif ref in FIXTURE_SCENARIOS:
            scenarios.append(fixture_scenario(ref))
        else:
            scenarios.append(load_scenario(Path(ref)))
    if not scenarios:
        raise ParseError("Nenhum cenario informado", location="scenarios")
    return scenarios


def _with_map(scenario: Scenario, run: RunConfig) -> Scenario:
    if run.map is None:
        return scenario
    return scenario.model_copy(update={"map": str(Path(run.map).resolve())})


@app.command()
def collect(
    scenario: list[str] = typer.Option([], "--scenario", help="Cenario (repetivel)"),
    episodes: Optional[int] = typer.Option(None, "--episodes", "-n", help="Episodios por cenario"),
    out: Optional[str] = typer.Option(None, "--out", help="Diretorio de saida"),
    run_config: Optional[Path] = typer.Option(None, "--config", help="RunConfig JSON"),
):
    """Demonstracoes do especialista -> dataset/demos.bin + indice"""
    with handled():
        seeds = list(range(episodes)) if episodes is not None else None
        run = load_run_config(run_config, scenarios=scenario, seeds=seeds, out=out)
        scenarios = [_with_map(s, run) for s in resolve_scenarios(run.scenarios)]
        dataset = collect_demonstrations(scenarios, run.seeds)
        path = dataset.save(run.output("dataset") / "demos.bin")
    counts = ", ".join(f"{m.value}: {n}" for m, n in dataset.mode_counts().items())
    console.print(f"[green]{len(dataset)} registros em {len(dataset.sequences)} sequencias[/green]")
    console.print(f"  modos: {counts}")
    console.print(f"  dataset: {path}")


@app.command()
def train(
    dataset: Optional[str] = typer.Option(None, "--dataset", help="Dataset binario"),
    synthetic: bool = typer.Option(False, "--synthetic", help="Usa o problema sintetico"),
    kind: Optional[str] = typer.Option(None, "--kind", help="Tipo de rede"),
    iters: Optional[int] = typer.Option(None, "--iters", help="Limite de iteracoes"),
    seed: int = typer.Option(0, "--seed", help="Semente do treino"),
    out: Optional[str] = typer.Option(None, "--out", help="Diretorio de saida"),
    run_config: Optional[Path] = typer.Option(None, "--config", help="RunConfig JSON"),
):
    """TBPTT nas demonstracoes -> checkpoint + curva de perda CSV"""
    with handled():
        run = load_run_config(run_config, dataset=dataset, kind=kind, out=out)
        rng = np.random.default_rng(seed)
        overrides = dict(run.train)
        if iters is not None:
            overrides["max_iters"] = iters
        cfg = desk_train_config(**overrides)
        if synthetic:
            data = synthetic_mode_task(rng)
            net_overrides = dict(channels=[4, 8, 8], max_groups=4, head_hidden=16,
                                 intention_latent=8)
        elif run.dataset is not None:
            data = DemoDataset.load(Path(run.dataset))
            net_overrides = {}
        else:
            raise ParseError("Informe --dataset ou --synthetic", location="dataset")
        net = build_baseline(run.kind, input_side=data.side, in_channels=data.channels,
                             seed=seed, **net_overrides)
        with console.status(f"[cyan]Treinando {run.kind}...[/cyan]"):
            net, losses = tbptt_train(net, data, cfg, rng)
        ckpt = save_checkpoint(net, run.output("checkpoints") / f"{run.kind}.ckpt",
                               meta={"iterations": len(losses), "seed": seed})
        curve = run.output("reports") / f"loss_{run.kind}.csv"
        with open(curve, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "loss"])
            writer.writerows((i + 1, repr(loss)) for i, loss in enumerate(losses))
    if losses:
        console.print(f"[green]{len(losses)} iteracoes: perda {losses[0]:.4f} -> "
                      f"{losses[-1]:.4f}[/green]")
    console.print(f"  checkpoint: {ckpt}\n  curva: {curve}")


@app.command("eval")
def eval_cmd(
    scenario: list[str] = typer.Option([], "--scenario", help="Cenario (repetivel) ou 'tasks'"),
    policy: Optional[str] = typer.Option(None, "--policy", help="expert | path_tracker | net"),
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", help="Checkpoint da rede"),
    seeds: Optional[int] = typer.Option(None, "--seeds", help="Numero de sementes (0..N-1)"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Processos paralelos"),
    out: Optional[str] = typer.Option(None, "--out", help="Diretorio de saida"),
    run_config: Optional[Path] = typer.Option(None, "--config", help="RunConfig JSON"),
):
    """Episodios com sementes -> logs/ e reports/"""
    with handled():
        run = load_run_config(
            run_config, scenarios=scenario, policy=policy, checkpoint=checkpoint,
            seeds=list(range(seeds)) if seeds is not None else None, jobs=jobs, out=out,
        )
        scenarios = [_with_map(s, run) for s in resolve_scenarios(run.scenarios)]
        spec = PolicySpec(kind=run.policy, checkpoint=run.checkpoint)
        runs = run_grid(scenarios, [spec], run.seeds, run.jobs)
        save_logs(runs, run.output("logs"))
        table = task_report(runs)
        table.write(run.output("reports"), "metrics")
        write_summary(experiment_summary("eval", [table], run.seeds, config),
                      run.output("reports") / "summary.json")
    console.print(table.to_text())


def load_runs(logs_dir: Path) -> dict[str, dict[str, list[TrajectoryLog]]]:
    """logs/<metodo>/<tarefa>_<semente>.csv -> metodo -> tarefa -> logs"""
    runs: dict[str, dict[str, list[TrajectoryLog]]] = {}
    for csv_path in sorted(Path(logs_dir).glob("*/*.csv")):
        log = TrajectoryLog.load(csv_path)
        runs.setdefault(csv_path.parent.name, {}).setdefault(log.scenario, []).append(log)
    for tasks in runs.values():
        for logs in tasks.values():
            logs.sort(key=lambda log: log.seed)
    if not runs:
        raise ParseError(f"Nenhum log em {logs_dir}", location=str(logs_dir))
    return runs


@app.command()
def report(
    logs_dir: Path = typer.Argument(..., help="Diretorio logs/ de execucoes anteriores"),
    kind: str = typer.Option("task", "--kind", help="task | ablation"),
    out: Path = typer.Option(Path("reports"), "--out", help="Diretorio de saida"),
):
    """Tabelas a partir de logs salvos"""
    with handled():
        runs = load_runs(logs_dir)
        if kind == "ablation":
            table: ReportTable = ablation_report(runs)
        elif kind == "task":
            table = task_report(runs)
        else:
            raise ParseError(f"Tipo de relatorio desconhecido: '{kind}'", location="--kind")
        table.write(out, kind)
    console.print(table.to_text())


@app.command("config")
def config_cmd(
    show: bool = typer.Option(False, "--show", "-s", help="Mostra configuracao atual"),
    init: bool = typer.Option(False, "--init", "-i", help="Cria configuracao inicial"),
):
    """Gerencia configuracao do NAVLITE"""
    config_path = Path.home() / ".navlite" / "config.json"
    if show:
        if config_path.exists():
            console.print(Panel(config_path.read_text(), title="Configuracao"))
        else:
            console.print("[yellow]Nenhuma configuracao encontrada[/yellow]")
    elif init:
        NavLiteConfig().save()
        console.print(f"[green]Configuracao criada em: {config_path}[/green]")


@app.command()
def version():
    """Mostra versao do NAVLITE"""
    from .. import __version__
    console.print(f"NAVLITE v{__version__}")


def main():
    """Entrypoint principal"""
    app()


if __name__ == "__main__":
    main()
