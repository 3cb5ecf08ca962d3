"""
Configuracoes do NAVLITE
"""

from pathlib import Path
from typing import Optional
import json

from pydantic import BaseModel, Field, model_validator


class MapConfig(BaseModel):
    """Configuracoes de construcao de mapas"""
    default_resolution: float = Field(default=0.3, description="Resolucao padrao (m/celula)")
    free_luminance: float = Field(default=0.5, description="Luminancia minima para celula livre (0-1)")
    inter_edge_weight: float = Field(default=0.0, description="Peso padrao de arestas entre plantas")
    layer_edge_weight: float = Field(default=0.0, description="Peso padrao de arestas para a rede viaria")
    default_margin: int = Field(default=10, description="Margem padrao das saidas (pixels)")


class PlannerConfig(BaseModel):
    """Configuracoes do planejador"""
    robot_radius_cells: int = Field(default=1, description="Inflacao de obstaculos (celulas)")


class IntentionConfig(BaseModel):
    """Configuracoes do gerador de intencoes"""
    curvature_threshold: float = Field(default=0.25, description="Limiar de curvatura (1/m)")
    rdp_epsilon_cells: float = Field(default=2.0, description="Epsilon do RDP em celulas")
    curvature_window: int = Field(default=3, description="Janela da curvatura (vertices)")
    min_influence_radius: float = Field(default=5.0, description="Raio minimo de influencia (m)")
    turn_angle_deg: float = Field(default=30.0, description="Angulo minimo de curva em ruas (graus)")
    lpe_side: int = Field(default=224, description="Lado da imagem LPE (pixels)")
    lpe_window_m: float = Field(default=10.0, description="Janela da LPE (m por lado)")


class DecisionConfig(BaseModel):
    """Configuracoes da rede DECISION"""
    input_side: int = Field(default=56, description="Lado da imagem de entrada")
    in_channels: int = Field(default=1, description="Canais da observacao")
    channels: list[int] = Field(default=[16, 32, 64], description="Canais dos 3 blocos")
    max_groups: int = Field(default=32, description="Grupos maximos do GroupNorm")
    gn_eps: float = Field(default=1e-5, description="Epsilon do GroupNorm")
    dropout: float = Field(default=0.3, description="Taxa de dropout por canal")
    head_hidden: int = Field(default=32, description="Neuronios ocultos de cada cabeca")
    intention_latent: int = Field(default=16, description="Dimensao do latente de intencao")
    frames: int = Field(default=5, description="Quadros empilhados no MF-CNN")
    lstm_layers: int = Field(default=3, description="Camadas LSTM do CNN-LSTM")


class TrainConfig(BaseModel):
    """Configuracoes de treino TBPTT"""
    sequence_length: int = Field(default=35, description="Comprimento L das sequencias")
    frame_stride: int = Field(default=3, description="Passo entre quadros")
    k1: int = Field(default=5, description="Predicoes por iteracao")
    k2: int = Field(default=10, description="Passos de retropropagacao")
    base_lr: float = Field(default=1e-7, description="BaseLR")
    batch_size: int = Field(default=36, description="Tamanho do lote")
    weight_decay: float = Field(default=5e-4, description="Decaimento de pesos desacoplado")
    dropout: float = Field(default=0.3, description="Taxa de dropout")
    input_side: int = Field(default=112, description="Lado da imagem de entrada")
    epochs: int = Field(default=200, description="Numero de epocas")
    lr_decay_epochs: list[int] = Field(default=[70, 140], description="Epocas de decaimento x0.1")
    lr_decay_factor: float = Field(default=0.1, description="Fator de decaimento")
    betas: tuple[float, float] = Field(default=(0.9, 0.999), description="Betas do AdamW")
    adam_eps: float = Field(default=1e-8, description="Epsilon do AdamW")
    balance: bool = Field(default=True, description="Rebalancear o pool a cada epoca")
    max_iters: Optional[int] = Field(default=None, description="Limite de iteracoes")
    elevator_multiplier: int = Field(default=3, description="Multiplicador de L, k1 e k2 no elevador")
    train_fraction: float = Field(default=0.8, description="Fracao de treino (4:1)")

    @model_validator(mode="after")
    def _check_windows(self) -> "TrainConfig":
        if self.sequence_length < self.k1:
            raise ValueError("sequence_length deve ser >= k1")
        if self.k2 < self.k1:
            raise ValueError("k2 deve ser >= k1")
        return self

    @property
    def lr(self) -> float:
        """LR = BaseLR * BS * k2"""
        return self.base_lr * self.batch_size * self.k2


class CameraConfig(BaseModel):
    """Configuracoes da camera simulada"""
    side: int = Field(default=56, description="Lado da observacao (pixels)")
    fov_deg: float = Field(default=70.0, description="Campo de visao (graus)")
    range_m: float = Field(default=4.0, description="Alcance maximo (m)")
    blind_range_m: float = Field(default=0.6, description="Cone cego para objetos baixos (m)")


class OdometryConfig(BaseModel):
    """Configuracoes do modelo de odometria"""
    sigma_t: float = Field(default=0.02, description="Ruido translacional por metro")
    sigma_r: float = Field(default=0.01, description="Ruido rotacional por radiano")
    bias_t: float = Field(default=0.0, description="Vies de escala translacional")
    bias_r: float = Field(default=0.0, description="Vies de guinada por metro (rad/m)")


class SimConfig(BaseModel):
    """Configuracoes do simulador"""
    dt: float = Field(default=0.1, description="Passo de tempo (s)")
    v_max: float = Field(default=1.0, description="Velocidade maxima (m/s)")
    theta_max: float = Field(default=1.0, description="Taxa de giro maxima (rad/s)")
    safe_distance: float = Field(default=0.2, description="Distancia segura (m)")
    goal_tolerance: float = Field(default=0.5, description="Tolerancia de chegada (m)")
    plan_inflation_m: float = Field(default=0.5, description="Inflacao usada no replanejamento (m)")
    max_ticks: int = Field(default=1500, description="Limite de ticks por episodio")
    camera: CameraConfig = Field(default_factory=CameraConfig)
    odometry: OdometryConfig = Field(default_factory=OdometryConfig)


class EvalConfig(BaseModel):
    """Configuracoes de avaliacao"""
    seeds: int = Field(default=10, description="Sementes por celula da tabela")
    jobs: int = Field(default=1, description="Processos paralelos")


class NavLiteConfig(BaseModel):
    """Configuracao principal do NAVLITE"""
    map: MapConfig = Field(default_factory=MapConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    intention: IntentionConfig = Field(default_factory=IntentionConfig)
    decision: DecisionConfig = Field(default_factory=DecisionConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "NavLiteConfig":
        """Carrega configuracao de arquivo ou usa padrao"""
        if path is None:
            path = Path.home() / ".navlite" / "config.json"
        if path.exists():
            with open(path) as f:
                data = json.load(f)
            return cls(**data)
        return cls()

    def save(self, path: Optional[Path] = None) -> None:
        """Salva configuracao em arquivo"""
        if path is None:
            path = Path.home() / ".navlite" / "config.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.model_dump(mode="json"), f, indent=2, default=str)


# Instancia global de configuracao
config = NavLiteConfig()
