"""
Log de trajetoria: CSV por tick mais resumo JSON
"""

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from ..core.errors import ParseError

CSV_COLUMNS = (
    "tick", "t", "frame", "x", "y", "heading",
    "est_frame", "est_x", "est_y", "est_heading",
    "v", "theta", "intention", "events",
)


class TickRow(BaseModel):
    """Estado depois do passo de um tick"""
    tick: int
    t: float
    frame: str
    x: float
    y: float
    heading: float
    est_frame: str
    est_x: float
    est_y: float
    est_heading: float
    v: float = Field(description="Comando normalizado")
    theta: float = Field(description="Comando normalizado")
    intention: str
    events: list[str] = Field(default_factory=list)


class AnchorRecord(BaseModel):
    """Reancoragem: erro de posicao antes e depois"""
    tick: int
    exit_id: str
    error_before: float
    error_after: float


class TrajectoryLog(BaseModel):
    """Registro completo de um episodio"""
    scenario: str
    policy: str
    seed: int
    dt: float
    rows: list[TickRow] = Field(default_factory=list)
    steps: list[bool] = Field(default_factory=list, description="Sucesso s_i de cada passo")
    interventions: int = 0
    goal_reached: bool = False
    anchors: list[AnchorRecord] = Field(default_factory=list)
    terminal_error: float = Field(default=0.0, description="Erro da estimativa no fim (m)")
    forward_calls: int = 0
    # relogio de parede fica fora dos arquivos deterministicos
    wall_seconds: float = Field(default=0.0, exclude=True)

    @property
    def ticks(self) -> int:
        return len(self.rows)

    @property
    def time_s(self) -> float:
        return self.ticks * self.dt

    @property
    def successful_steps(self) -> int:
        return sum(self.steps)

    def positions(self) -> np.ndarray:
        return np.array([(r.x, r.y) for r in self.rows], dtype=np.float64).reshape(-1, 2)

    def motion_segments(self) -> list[np.ndarray]:
        """Trechos continuos: quebra em troca de planta e em intervencao"""
        segments, current, frame = [], [], None
        for row in self.rows:
            jump = any(e.startswith("intervention") or e.startswith("transition") for e in row.events)
            if current and (row.frame != frame or jump):
                segments.append(np.array(current))
                current = []
            current.append((row.x, row.y))
            frame = row.frame
        if current:
            segments.append(np.array(current))
        return segments

    def events(self, prefix: str = "") -> list[tuple[int, str]]:
        return [(r.tick, e) for r in self.rows for e in r.events if e.startswith(prefix)]

    # --- arquivos ---

    def write_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([
                    r.tick, repr(r.t), r.frame, repr(r.x), repr(r.y), repr(r.heading),
                    r.est_frame, repr(r.est_x), repr(r.est_y), repr(r.est_heading),
                    repr(r.v), repr(r.theta), r.intention, "|".join(r.events),
                ])
        return path

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "policy": self.policy,
            "seed": self.seed,
            "dt": self.dt,
            "ticks": self.ticks,
            "time_s": self.time_s,
            "steps": self.steps,
            "interventions": self.interventions,
            "goal_reached": self.goal_reached,
            "anchors": [a.model_dump() for a in self.anchors],
            "terminal_error": self.terminal_error,
            "forward_calls": self.forward_calls,
        }

    def write_summary(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2))
        return path

    def save(self, directory: Path, stem: Optional[str] = None) -> tuple[Path, Path]:
        """<stem>.csv e <stem>.json no diretorio"""
        directory = Path(directory)
        stem = stem or f"{self.scenario}_{self.policy}_{self.seed}"
        return (self.write_csv(directory / f"{stem}.csv"),
                self.write_summary(directory / f"{stem}.json"))

    @classmethod
    def load(cls, csv_path: Path) -> "TrajectoryLog":
        """Reconstroi o log a partir do CSV e do JSON irmao"""
        csv_path = Path(csv_path)
        json_path = csv_path.with_suffix(".json")
        try:
            meta = json.loads(json_path.read_text())
            with open(csv_path, newline="") as f:
                reader = csv.DictReader(f)
                rows = [
                    TickRow(
                        tick=int(r["tick"]), t=float(r["t"]), frame=r["frame"],
                        x=float(r["x"]), y=float(r["y"]), heading=float(r["heading"]),
                        est_frame=r["est_frame"], est_x=float(r["est_x"]),
                        est_y=float(r["est_y"]), est_heading=float(r["est_heading"]),
                        v=float(r["v"]), theta=float(r["theta"]), intention=r["intention"],
                        events=[e for e in r["events"].split("|") if e],
                    )
                    for r in reader
                ]
            return cls(
                scenario=meta["scenario"], policy=meta["policy"], seed=meta["seed"], dt=meta["dt"],
                rows=rows, steps=meta["steps"], interventions=meta["interventions"],
                goal_reached=meta["goal_reached"],
                anchors=[AnchorRecord(**a) for a in meta.get("anchors", [])],
                terminal_error=meta.get("terminal_error", 0.0),
                forward_calls=meta.get("forward_calls", 0),
            )
        except OSError as e:
            raise ParseError(f"Log ilegivel: {e}", str(csv_path)) from e
        except (KeyError, ValueError) as e:
            raise ParseError(f"Log invalido: {e}", str(csv_path)) from e
