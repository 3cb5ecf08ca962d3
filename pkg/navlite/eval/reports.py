"""
Tabelas de comparacao (texto alinhado + CSV) e resumo JSON de experimentos
"""

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence

from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table

from ..core.config import NavLiteConfig
from ..core.errors import MismatchedScenarios
from ..sim.trajlog import TrajectoryLog
from .metrics import MetricsReport

MISSING = "--"

# metodo -> tarefa -> logs (None = execucao ausente)
Runs = Mapping[str, Mapping[str, Optional[Sequence[TrajectoryLog]]]]


class ReportTable(BaseModel):
    """Tabela pronta para texto e CSV"""
    title: str
    columns: list[str]
    rows: list[list[str]] = Field(default_factory=list)
    reports: list[Optional[MetricsReport]] = Field(default_factory=list)
    text_only: list[str] = Field(default_factory=list, description="Colunas fora do CSV")

    def to_text(self, width: int = 120) -> str:
        table = Table(title=self.title, show_lines=False)
        for col in self.columns:
            table.add_column(col, justify="left" if col in ("Task", "Method") else "right")
        for row in self.rows:
            table.add_row(*row)
        console = Console(record=True, width=width, color_system=None, file=io.StringIO())
        console.print(table)
        return console.export_text()

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        keep = [i for i, c in enumerate(self.columns) if c not in self.text_only]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([self.columns[i] for i in keep])
            for row in self.rows:
                writer.writerow([row[i] for i in keep])
        return path

    def write(self, directory: Path, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        text = directory / f"{stem}.txt"
        text.write_text(self.to_text())
        return text, self.to_csv(directory / f"{stem}.csv")


def _tasks(runs: Runs) -> list[str]:
    sets = {method: tuple(sorted(tasks)) for method, tasks in runs.items()}
    distinct = set(sets.values())
    if len(distinct) > 1:
        detail = "; ".join(f"{m}: {', '.join(t)}" for m, t in sets.items())
        raise MismatchedScenarios(f"Metodos com tarefas diferentes ({detail})")
    return list(next(iter(runs.values()))) if runs else []


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def task_report(runs: Runs, title: str = "Comparacao por tarefa") -> ReportTable:
    """Uma linha por (tarefa, metodo): Success, Intervention, Time, Smoothness"""
    table = ReportTable(title=title,
                        columns=["Task", "Method", "Success", "Intervention", "Time (s)",
                                 "Smoothness"])
    for task in _tasks(runs):
        for method, tasks in runs.items():
            logs = tasks[task]
            if not logs:
                table.rows.append([task, method, MISSING, MISSING, MISSING, MISSING])
                table.reports.append(None)
                continue
            report = MetricsReport.from_logs(task, method, logs)
            finished = any(log.goal_reached for log in logs)
            table.rows.append([
                task, method, _pct(report.sr), f"{report.interventions:.1f}",
                f"{report.time_s:.1f}" if finished else MISSING,
                f"{report.smoothness:.3f}" if finished and report.smoothness is not None
                else MISSING,
            ])
            table.reports.append(report)
    return table


def ablation_report(runs: Runs, throughput: bool = False,
                    title: str = "Ablacao sob observabilidade parcial") -> ReportTable:
    """SR e Avg.Int. por tarefa; vazao opcional (so no texto)"""
    columns = ["Task", "Method", "SR", "Avg.Int."]
    if throughput:
        columns.append("Throughput")
    table = ReportTable(title=title, columns=columns, text_only=["Throughput"])
    for task in _tasks(runs):
        for method, tasks in runs.items():
            logs = tasks[task]
            if not logs:
                table.rows.append([task, method] + [MISSING] * (len(columns) - 2))
                table.reports.append(None)
                continue
            report = MetricsReport.from_logs(task, method, logs)
            row = [task, method, _pct(report.sr), _pct(report.avg_int)]
            if throughput:
                row.append(MISSING if report.throughput is None else f"{report.throughput:.1f}")
            table.rows.append(row)
            table.reports.append(report)
    return table


def config_hash(cfg: NavLiteConfig) -> str:
    payload = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def experiment_summary(name: str, tables: Sequence[ReportTable], seeds: Sequence[int],
                       cfg: NavLiteConfig, extra: Optional[dict] = None) -> dict:
    """Resumo reproduzivel: hash da configuracao, sementes e metricas (sem vazao)"""
    return {
        "experiment": name,
        "config_hash": config_hash(cfg),
        "seeds": list(seeds),
        "tables": [
            {
                "title": t.title,
                "rows": [r.model_dump(exclude={"throughput"}) for r in t.reports if r is not None],
            }
            for t in tables
        ],
        **(extra or {}),
    }


def write_summary(summary: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    return path
