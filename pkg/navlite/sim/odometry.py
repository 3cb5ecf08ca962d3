"""
Odometria com deriva e reancoragem nas saidas
"""

import math
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, Field

from ..core.config import OdometryConfig
from ..mapsys.types import ExitNode, Pose2D
from .world import integrate_unicycle


class OdometryModel(BaseModel):
    """
    Ruido gaussiano com variancia proporcional a distancia e a rotacao

    var(trans) = sigma_t^2 |trans|
    var(rot)   = sigma_r^2 |rot| + sigma_t^2 |trans|
    """
    sigma_t: float = Field(default=0.0, ge=0)
    sigma_r: float = Field(default=0.0, ge=0)
    bias_t: float = Field(default=0.0, description="Erro de escala translacional")
    bias_r: float = Field(default=0.0, description="Guinada por metro (rad/m)")

    @classmethod
    def from_config(cls, cfg: OdometryConfig) -> "OdometryModel":
        return cls(**cfg.model_dump())


class OdometryDelta(NamedTuple):
    trans: float
    rot: float


def odometry_read(model: OdometryModel, true_delta: OdometryDelta,
                  rng: np.random.Generator) -> OdometryDelta:
    """Perturba um deslocamento verdadeiro (duas amostras normais por chamada)"""
    z_t, z_r = rng.standard_normal(2)
    distance = abs(true_delta.trans)
    trans = true_delta.trans * (1.0 + model.bias_t) + model.sigma_t * math.sqrt(distance) * z_t
    rot_std = math.sqrt(model.sigma_r**2 * abs(true_delta.rot) + model.sigma_t**2 * distance)
    rot = true_delta.rot + model.bias_r * distance + rot_std * z_r
    return OdometryDelta(trans, rot)


def integrate_odometry(pose_est: Pose2D, noisy_delta: OdometryDelta) -> Pose2D:
    return integrate_unicycle(pose_est, noisy_delta.trans, noisy_delta.rot)


def re_anchor(pose_est: Pose2D, exit: ExitNode, detected: bool) -> Pose2D:
    """Com deteccao, a posicao estimada vai para a saida; a orientacao fica"""
    if not detected:
        return pose_est
    x, y = exit.metric_position
    return Pose2D(frame=exit.floorplan_id, x=x, y=y, heading=pose_est.heading)


def position_error(pose_est: Pose2D, truth: Pose2D) -> float:
    return math.hypot(pose_est.x - truth.x, pose_est.y - truth.y)
