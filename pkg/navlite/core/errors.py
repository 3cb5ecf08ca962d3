"""
Erros do NAVLITE

Cada erro herda de NavLiteError e do builtin mais proximo.
"""

from typing import Any, Optional


class NavLiteError(Exception):
    """Erro base do NAVLITE"""


# --- mapas ---

class EmptyImage(NavLiteError, ValueError):
    """Raster vazio"""


class InvalidResolution(NavLiteError, ValueError):
    """Resolucao nao positiva"""


class DanglingWayReference(NavLiteError, LookupError):
    """Rua referencia um no inexistente"""

    def __init__(self, way_id: str, node_id: str):
        self.way_id = way_id
        self.node_id = node_id
        super().__init__(f"Rua '{way_id}' referencia no inexistente '{node_id}'")


class MixedFloorplans(NavLiteError, ValueError):
    """Saidas de plantas diferentes"""


class ImplausibleMeasurement(NavLiteError, ValueError):
    """Medicao abaixo do limite em linha reta"""


class FrameMismatch(NavLiteError, ValueError):
    """Pose em referencial diferente do esperado"""


class ParseError(NavLiteError, ValueError):
    """Arquivo invalido, com localizacao do problema"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        text = f"{message} (em {location})" if location else message
        super().__init__(text)


class BundleValidationError(NavLiteError, ValueError):
    """Bundle carregado viola invariantes"""

    def __init__(self, violations: list[Any]):
        self.violations = violations
        super().__init__(f"Bundle invalido: {len(violations)} violacao(oes)")


# --- planejamento ---

class UnknownId(NavLiteError, LookupError):
    """Identificador desconhecido"""


class Unreachable(NavLiteError, RuntimeError):
    """Objetivo inalcancavel no grafo topologico"""


class StartOccupied(NavLiteError, ValueError):
    """Celula inicial ocupada"""


class GoalOccupied(NavLiteError, ValueError):
    """Celula objetivo ocupada"""


class NoPath(NavLiteError, RuntimeError):
    """Sem caminho na grade"""

    def __init__(self, message: str, segment: Optional[str] = None):
        self.segment = segment
        super().__init__(f"{message} [segmento {segment}]" if segment else message)


# --- intencoes ---

class TooFewPoints(NavLiteError, ValueError):
    """Polilinha com menos de 2 pontos"""


class DegenerateWindow(NavLiteError, ValueError):
    """Pontos coincidentes na janela de curvatura"""


class UnknownTransition(NavLiteError, ValueError):
    """Transicao sem intencao correspondente"""


# --- decisao ---

class IndivisibleChannels(NavLiteError, ValueError):
    """Canais nao divisiveis pelos grupos"""


class ShapeMismatch(NavLiteError, ValueError):
    """Formas inconsistentes"""


class UnknownMode(NavLiteError, LookupError):
    """Modo sem celula de memoria"""


class EmptyDataset(NavLiteError, ValueError):
    """Dataset sem sequencias utilizaveis"""


class EmptyMode(NavLiteError, ValueError):
    """Modo solicitado sem registros"""


class UnknownKind(NavLiteError, ValueError):
    """Tipo de rede desconhecido"""


# --- simulacao e avaliacao ---

class NoFeasibleControl(NavLiteError, RuntimeError):
    """Nenhum controle livre de colisao"""


class EmptyTrials(NavLiteError, ValueError):
    """Lista de tentativas vazia"""


class TooShort(NavLiteError, ValueError):
    """Trajetoria curta demais"""


class MismatchedScenarios(NavLiteError, ValueError):
    """Execucoes sobre conjuntos de cenarios diferentes"""
