"""
Vetores pooled para projecao externa e medidas de separacao por modo
"""

import csv
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from ..intention.dlm import CODE_DLM, DLM
from .data import DemoDataset
from .net import DecisionNet
from .tensor import no_grad


class FeatureRecord(BaseModel):
    """Vetor pooled antes das cabecas com o modo de condicionamento"""
    vector: list[float]
    mode: DLM


def dump_pooled_features(net: DecisionNet, dataset: DemoDataset) -> list[FeatureRecord]:
    """Um vetor por registro, com o estado recorrente carregado por sequencia"""
    records: list[FeatureRecord] = []
    with no_grad():
        for s, e in dataset.sequences:
            state = None
            for i in range(s, e):
                mode = CODE_DLM[int(dataset.records["mode"][i])]
                pooled, state = net.forward_features(dataset.records["image"][i:i + 1], [mode], state)
                records.append(FeatureRecord(vector=pooled.data[0].astype(float).tolist(), mode=mode))
    return records


def write_features_csv(records: Sequence[FeatureRecord], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    size = len(records[0].vector) if records else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"f{k}" for k in range(size)] + ["mode"])
        for r in records:
            writer.writerow([repr(x) for x in r.vector] + [r.mode.value])
    return path


def centroid_spread(records: Sequence[FeatureRecord]) -> tuple[float, float]:
    """(distancia media entre centroides de modos, dispersao media intra-modo)"""
    groups: dict[DLM, list[list[float]]] = {}
    for r in records:
        groups.setdefault(r.mode, []).append(r.vector)
    centroids = {m: np.mean(v, axis=0) for m, v in groups.items()}
    intra = float(np.mean([
        np.linalg.norm(np.asarray(v) - centroids[m], axis=1).mean() for m, v in groups.items()
    ]))
    modes = sorted(centroids, key=lambda m: m.value)
    pairs = [
        np.linalg.norm(centroids[a] - centroids[b])
        for i, a in enumerate(modes) for b in modes[i + 1:]
    ]
    inter = float(np.mean(pairs)) if pairs else 0.0
    return inter, intra


def mode_separation(net: DecisionNet, images: np.ndarray,
                    a: DLM = DLM.TURN_LEFT, b: DLM = DLM.TURN_RIGHT) -> float:
    """Media de |theta(a) - theta(b)| nas mesmas entradas, estado inicial"""
    with no_grad():
        out_a, _ = net.forward(images, [a] * len(images))
        out_b, _ = net.forward(images, [b] * len(images))
    return float(np.mean(np.abs(out_a.data[:, 1] - out_b.data[:, 1])))
