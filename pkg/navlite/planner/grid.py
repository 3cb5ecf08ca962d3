"""
Busca em grade de ocupacao: A* 8-conectado e oraculo Dijkstra
"""

import heapq
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel
from scipy import ndimage

from ..core.config import config
from ..core.errors import GoalOccupied, NoPath, StartOccupied
from ..mapsys.types import Cell, FloorplanGrid, Point

SQRT2 = math.sqrt(2.0)
_MOVES = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


class GridPath(BaseModel):
    """Caminho em celulas numa planta"""
    type: Literal["grid"] = "grid"
    floorplan_id: str
    resolution: float
    cells: list[Cell]
    straight_moves: int = 0
    diagonal_moves: int = 0

    @property
    def cost(self) -> float:
        """Custo em metros"""
        return (self.straight_moves + self.diagonal_moves * SQRT2) * self.resolution

    @property
    def polyline(self) -> list[Point]:
        return [(x * self.resolution, y * self.resolution) for x, y in self.cells]

    def extend(self, other: "GridPath") -> "GridPath":
        """Concatena caminhos que compartilham a celula de juncao"""
        tail = other.cells[1:] if self.cells and other.cells[:1] == self.cells[-1:] else other.cells
        return self.model_copy(update={
            "cells": self.cells + tail,
            "straight_moves": self.straight_moves + other.straight_moves,
            "diagonal_moves": self.diagonal_moves + other.diagonal_moves,
        })


def inflate(cells: np.ndarray, radius: int) -> np.ndarray:
    """Dilata obstaculos por um disco de raio em celulas"""
    if radius <= 0:
        return np.array(cells, dtype=bool)
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    disk = xx * xx + yy * yy <= r * r
    return ndimage.binary_dilation(cells, structure=disk)


def nearest_free(blocked: np.ndarray, cell: Cell) -> Cell:
    """Celula livre mais proxima (a propria, se livre)"""
    h, w = blocked.shape
    x = min(max(int(cell[0]), 0), w - 1)
    y = min(max(int(cell[1]), 0), h - 1)
    if not blocked[y, x]:
        return (x, y)
    if blocked.all():
        raise NoPath("Planta sem celulas livres")
    _, (iy, ix) = ndimage.distance_transform_edt(blocked, return_indices=True)
    return (int(ix[y, x]), int(iy[y, x]))


def _neighbors(blocked: np.ndarray, cell: Cell):
    h, w = blocked.shape
    x, y = cell
    for dx, dy in _MOVES:
        nx_, ny_ = x + dx, y + dy
        if not (0 <= nx_ < w and 0 <= ny_ < h) or blocked[ny_, nx_]:
            continue
        if dx and dy:
            # sem cortar quinas
            if blocked[y, nx_] or blocked[ny_, x]:
                continue
            yield (nx_, ny_), SQRT2, True
        else:
            yield (nx_, ny_), 1.0, False


def _search_grid(grid: FloorplanGrid, start: Cell, goal: Cell, inflation: Optional[int]):
    if not grid.is_free(start):
        raise StartOccupied(f"Inicio {start} ocupado em '{grid.id}'")
    if not grid.is_free(goal):
        raise GoalOccupied(f"Objetivo {goal} ocupado em '{grid.id}'")
    radius = config.planner.robot_radius_cells if inflation is None else inflation
    blocked = inflate(grid.cells, radius)
    blocked[start[1], start[0]] = False
    blocked[goal[1], goal[0]] = False
    return blocked


def _build_path(grid: FloorplanGrid, came_from: dict, goal: Cell) -> GridPath:
    cells = [goal]
    straight = diagonal = 0
    node = goal
    while node in came_from:
        prev = came_from[node]
        if prev[0] != node[0] and prev[1] != node[1]:
            diagonal += 1
        else:
            straight += 1
        cells.append(prev)
        node = prev
    cells.reverse()
    return GridPath(floorplan_id=grid.id, resolution=grid.resolution, cells=cells,
                    straight_moves=straight, diagonal_moves=diagonal)


def plan_grid(
    grid: FloorplanGrid, start: Cell, goal: Cell, inflation: Optional[int] = None
) -> GridPath:
    """A* 8-conectado com heuristica euclidiana; desempate por (f, h, celula)"""
    start, goal = (int(start[0]), int(start[1])), (int(goal[0]), int(goal[1]))
    blocked = _search_grid(grid, start, goal, inflation)

    def h(c: Cell) -> float:
        return math.hypot(c[0] - goal[0], c[1] - goal[1])

    g = {start: 0.0}
    came_from: dict[Cell, Cell] = {}
    closed: set[Cell] = set()
    heap = [(h(start), h(start), start)]
    while heap:
        _, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        if cell == goal:
            return _build_path(grid, came_from, goal)
        closed.add(cell)
        for nbr, step, _ in _neighbors(blocked, cell):
            if nbr in closed:
                continue
            cand = g[cell] + step
            if cand < g.get(nbr, math.inf):
                g[nbr] = cand
                came_from[nbr] = cell
                hn = h(nbr)
                heapq.heappush(heap, (cand + hn, hn, nbr))
    raise NoPath(f"Sem caminho de {start} para {goal} em '{grid.id}'")


def dijkstra_grid(
    grid: FloorplanGrid, start: Cell, goal: Cell, inflation: Optional[int] = None
) -> GridPath:
    """Oraculo Dijkstra com a mesma vizinhanca do A*"""
    start, goal = (int(start[0]), int(start[1])), (int(goal[0]), int(goal[1]))
    blocked = _search_grid(grid, start, goal, inflation)
    dist = {start: 0.0}
    came_from: dict[Cell, Cell] = {}
    done: set[Cell] = set()
    heap = [(0.0, start)]
    while heap:
        d, cell = heapq.heappop(heap)
        if cell in done:
            continue
        if cell == goal:
            return _build_path(grid, came_from, goal)
        done.add(cell)
        for nbr, step, _ in _neighbors(blocked, cell):
            cand = d + step
            if cand < dist.get(nbr, math.inf):
                dist[nbr] = cand
                came_from[nbr] = cell
                heapq.heappush(heap, (cand, nbr))
    raise NoPath(f"Sem caminho de {start} para {goal} em '{grid.id}'")


def inflation_cells(grid: FloorplanGrid, meters: float) -> int:
    """Raio de inflacao em celulas para uma folga metrica"""
    return int(math.ceil(meters / grid.resolution - 1e-9))
