"""
Geometria de polilinhas: RDP e curvatura com sinal
"""

import math
from typing import Sequence

from pydantic import BaseModel

from ..core.errors import DegenerateWindow, TooFewPoints
from ..mapsys.types import Point


class SignedCurvatureSample(BaseModel):
    """Curvatura local (1/m) na posicao de arco s"""
    s: float
    kappa: float


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = b[0] - a[0], b[1] - a[1]
    px, py = p[0] - a[0], p[1] - a[1]
    norm2 = ax * ax + ay * ay
    if norm2 == 0.0:
        return math.hypot(px, py)
    t = max(0.0, min(1.0, (px * ax + py * ay) / norm2))
    return math.hypot(px - t * ax, py - t * ay)


def rdp_indices(polyline: Sequence[Point], epsilon: float) -> list[int]:
    """Indices mantidos pelo Ramer-Douglas-Peucker (iterativo)"""
    n = len(polyline)
    if n < 2:
        raise TooFewPoints(f"Polilinha com {n} ponto(s)")
    if epsilon < 0:
        raise ValueError("epsilon deve ser >= 0")
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        best, dmax = -1, -1.0
        for k in range(i + 1, j):
            d = point_segment_distance(polyline[k], polyline[i], polyline[j])
            if d > dmax:
                best, dmax = k, d
        if best >= 0 and dmax > epsilon:
            keep[best] = True
            stack.append((best, j))
            stack.append((i, best))
    return [k for k in range(n) if keep[k]]


def rdp_simplify(polyline: Sequence[Point], epsilon: float) -> list[Point]:
    """Simplifica mantendo pontas; descartados ficam a <= epsilon"""
    return [tuple(polyline[k]) for k in rdp_indices(polyline, epsilon)]


def arc_lengths(polyline: Sequence[Point]) -> list[float]:
    out = [0.0]
    for p, q in zip(polyline, polyline[1:]):
        out.append(out[-1] + math.hypot(q[0] - p[0], q[1] - p[1]))
    return out


def signed_curvature(polyline: Sequence[Point], index: int, window: int = 3) -> SignedCurvatureSample:
    """Curvatura do circulo circunscrito a (p[i-w], p[i], p[i+w])"""
    n = len(polyline)
    w = min(window, index, n - 1 - index)
    if w < 1:
        raise DegenerateWindow(f"Janela nao cabe no indice {index} de {n}")
    p0, p1, p2 = polyline[index - w], polyline[index], polyline[index + w]
    ax, ay = p1[0] - p0[0], p1[1] - p0[1]
    bx, by = p2[0] - p1[0], p2[1] - p1[1]
    a = math.hypot(ax, ay)
    b = math.hypot(bx, by)
    c = math.hypot(p2[0] - p0[0], p2[1] - p0[1])
    if a == 0.0 or b == 0.0 or c == 0.0:
        raise DegenerateWindow(f"Pontos coincidentes na janela do indice {index}")
    cross = ax * by - ay * bx
    s = arc_lengths(polyline[: index + 1])[-1]
    return SignedCurvatureSample(s=s, kappa=2.0 * cross / (a * b * c))
