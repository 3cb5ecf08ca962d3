"""
Cenarios: mapa, inicio, objetivos, objetos, agentes e regras de passo
"""

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError

from ..core.errors import ParseError
from ..mapsys.types import Pose2D
from .agents import AdversarySpec
from .odometry import OdometryModel
from .world import Prop

FIXTURE_PREFIX = "fixture:"


class Scenario(BaseModel):
    """
    Tarefa reproduzivel a partir de (arquivo, semente)

    Sem adversario, cada objetivo e um passo da tarefa; com adversario, cada
    bloqueio e um passo.
    """
    name: str
    map: str = Field(description="'fixture:<nome>' ou caminho de um bundle JSON")
    start: Pose2D
    goals: list[Pose2D] = Field(min_length=1, description="Sequencia de objetivos")
    props: list[Prop] = Field(default_factory=list)
    adversary: Optional[AdversarySpec] = None
    intervention_rule: Literal["continue", "terminate"] = "continue"
    max_ticks: int = Field(default=1500, ge=0)
    replan_every: int = Field(default=10, ge=1, description="Ticks entre replanejamentos")
    plan_once: bool = Field(default=False, description="Planeja uma vez por objetivo")
    anchoring: bool = Field(default=True, description="Reancora nas saidas reconhecidas")
    odometry: OdometryModel = Field(default_factory=OdometryModel)
    seeds: list[int] = Field(default_factory=list, description="Sementes sugeridas")

    @property
    def steps(self) -> int:
        return self.adversary.blocks if self.adversary is not None else len(self.goals)


def load_scenario(path: Path) -> Scenario:
    """Le um cenario JSON; caminhos de mapa relativos ao arquivo"""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ParseError(f"Cenario ilegivel: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise ParseError("JSON invalido", location=f"linha {e.lineno}, coluna {e.colno}") from e
    try:
        scenario = Scenario(**data)
    except (ValidationError, TypeError) as e:
        where = None
        if isinstance(e, ValidationError) and e.errors():
            where = ".".join(str(p) for p in e.errors()[0]["loc"])
        raise ParseError(f"Cenario invalido: {e}", location=where) from e
    if not scenario.map.startswith(FIXTURE_PREFIX) and not Path(scenario.map).is_absolute():
        scenario = scenario.model_copy(update={"map": str((path.parent / scenario.map).resolve())})
    return scenario


def save_scenario(scenario: Scenario, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario.model_dump(mode="json"), indent=2))
    return path
