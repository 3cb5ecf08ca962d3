"""
Demonstracoes (X_t, I_t, mu_t): dataset binario, divisao, balanceamento
"""

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..core.errors import EmptyDataset, EmptyMode, ParseError
from ..core.log import get_logger
from ..intention.dlm import CODE_DLM, DLM, DLM_CODES
from .memory import memory_mode

logger = get_logger(__name__)

MAGIC = b"NAVDSET\x00"
VERSION = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S8"), ("version", "<u4"), ("side", "<u4"), ("channels", "<u4"), ("count", "<u8"),
])


def record_dtype(side: int, channels: int) -> np.dtype:
    """Registro fixo: tempo, codigo do modo, v, theta e a imagem crua"""
    return np.dtype([
        ("t", "<f4"), ("mode", "<i4"), ("v", "<f4"), ("theta", "<f4"),
        ("image", "u1", (channels, side, side)),
    ])


class DemoRecord(BaseModel):
    """Uma observacao com intencao e controle do especialista"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float
    mode: DLM
    v: float = Field(ge=-1.0, le=1.0)
    theta: float = Field(ge=-1.0, le=1.0)
    image: np.ndarray = Field(description="Imagem uint8 (C, lado, lado)")

    @field_validator("image", mode="before")
    @classmethod
    def _as_chw(cls, value):
        arr = np.asarray(value, dtype=np.uint8)
        return arr.reshape(1, *arr.shape) if arr.ndim == 2 else arr


class DemoDataset(BaseModel):
    """Registros em ordem de sequencia com fronteiras [inicio, fim)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: np.ndarray
    sequences: list[tuple[int, int]] = Field(default_factory=list)

    @classmethod
    def empty(cls, side: int, channels: int = 1) -> "DemoDataset":
        return cls(records=np.zeros(0, dtype=record_dtype(side, channels)), sequences=[])

    @classmethod
    def from_sequences(cls, sequences: Sequence[Sequence[DemoRecord]]) -> "DemoDataset":
        sequences = [s for s in sequences if len(s)]
        if not sequences:
            raise EmptyDataset("Nenhuma sequencia com registros")
        channels, side, _ = sequences[0][0].image.shape
        records = np.zeros(sum(len(s) for s in sequences), dtype=record_dtype(side, channels))
        bounds = []
        i = 0
        for seq in sequences:
            start = i
            for r in seq:
                records[i] = (r.t, DLM_CODES[r.mode], r.v, r.theta, r.image)
                i += 1
            bounds.append((start, i))
        return cls(records=records, sequences=bounds)

    def __len__(self) -> int:
        return int(len(self.records))

    @property
    def side(self) -> int:
        return int(self.records.dtype["image"].shape[-1])

    @property
    def channels(self) -> int:
        return int(self.records.dtype["image"].shape[0])

    @property
    def modes(self) -> list[DLM]:
        return [CODE_DLM[int(c)] for c in self.records["mode"]]

    def mode_counts(self) -> dict[DLM, int]:
        codes, counts = np.unique(self.records["mode"], return_counts=True)
        return {CODE_DLM[int(c)]: int(n) for c, n in zip(codes, counts)}

    def images(self, index) -> np.ndarray:
        return self.records["image"][index]

    def subset(self, sequence_ids: Sequence[int]) -> "DemoDataset":
        """Novo dataset com as sequencias pedidas (repeticoes permitidas)"""
        return self.slices([self.sequences[k] for k in sequence_ids])

    def slices(self, bounds_in: Sequence[tuple[int, int]]) -> "DemoDataset":
        """Novo dataset com cada trecho [inicio, fim) virando uma sequencia"""
        parts, bounds, i = [], [], 0
        for s, e in bounds_in:
            parts.append(self.records[s:e])
            bounds.append((i, i + e - s))
            i += e - s
        records = np.concatenate(parts) if parts else self.records[:0].copy()
        return DemoDataset(records=records, sequences=bounds)

    # --- arquivo ---

    def save(self, path: Path) -> Path:
        """Grava o binario e o indice JSON ao lado"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = np.array([(MAGIC, VERSION, self.side, self.channels, len(self))], dtype=HEADER_DTYPE)
        with open(path, "wb") as f:
            f.write(header.tobytes())
            f.write(np.ascontiguousarray(self.records).tobytes())
        index = {
            "version": VERSION,
            "records": len(self),
            "sequences": [list(b) for b in self.sequences],
            "modes": {str(code): mode.value for mode, code in DLM_CODES.items()},
        }
        index_path(path).write_text(json.dumps(index, indent=2))
        return path

    @classmethod
    def load(cls, path: Path) -> "DemoDataset":
        path = Path(path)
        try:
            raw = path.read_bytes()
            index = json.loads(index_path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ParseError(f"Dataset ilegivel: {e}", str(path)) from e
        if len(raw) < HEADER_DTYPE.itemsize:
            raise ParseError("Cabecalho truncado", str(path))
        header = np.frombuffer(raw[:HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
        if bytes(header["magic"]).rstrip(b"\x00") != MAGIC.rstrip(b"\x00"):
            raise ParseError("Assinatura invalida", str(path))
        if int(header["version"]) != VERSION:
            raise ParseError(f"Versao {int(header['version'])} nao suportada", str(path))
        dtype = record_dtype(int(header["side"]), int(header["channels"]))
        count = int(header["count"])
        body = raw[HEADER_DTYPE.itemsize:]
        if len(body) != count * dtype.itemsize:
            raise ParseError(f"Esperados {count} registros", str(path))
        records = np.frombuffer(body, dtype=dtype).copy()
        sequences = [tuple(b) for b in index.get("sequences", [])]
        for s, e in sequences:
            if not 0 <= s <= e <= count:
                raise ParseError(f"Fronteira invalida [{s}, {e})", str(index_path(path)))
        return cls(records=records, sequences=sequences)


def index_path(path: Path) -> Path:
    return Path(path).with_suffix(".index.json")


def sequence_label(dataset: DemoDataset, start: int, end: int) -> Optional[DLM]:
    """Modo de memoria majoritario de um trecho (empate pelo menor codigo)"""
    counts: dict[DLM, int] = {}
    for code in dataset.records["mode"][start:end]:
        mode = memory_mode(CODE_DLM[int(code)])
        if mode is not None:
            counts[mode] = counts.get(mode, 0) + 1
    if not counts:
        return None
    return max(sorted(counts, key=lambda m: DLM_CODES[m]), key=lambda m: counts[m])


def balanced_choice(labels: Sequence, rng: np.random.Generator,
                    required: Sequence = ()) -> list[int]:
    """Indices reamostrados com a mesma quantidade por rotulo (pool de mesmo tamanho)"""
    present = sorted({l for l in labels if l is not None}, key=str)
    missing = [m for m in required if m not in present]
    if missing:
        raise EmptyMode(f"Modos sem registros: {', '.join(str(getattr(m, 'value', m)) for m in missing)}")
    units = [i for i, l in enumerate(labels) if l is not None]
    if len(present) <= 1:
        return units
    per_mode, extra = divmod(len(units), len(present))
    chosen: list[int] = []
    for k, mode in enumerate(present):
        pool = [i for i, l in enumerate(labels) if l == mode]
        take = per_mode + (1 if k < extra else 0)
        chosen.extend(int(i) for i in rng.choice(pool, size=take, replace=True))
    rng.shuffle(chosen)
    return chosen


def mode_runs(dataset: DemoDataset) -> list[tuple[int, int, Optional[DLM]]]:
    """Trechos contiguos com o mesmo modo de memoria, sem cruzar fronteiras de sequencia"""
    modes = [memory_mode(CODE_DLM[int(c)]) for c in dataset.records["mode"]]
    runs = []
    for s, e in dataset.sequences:
        start = s
        for i in range(s + 1, e + 1):
            if i == e or modes[i] != modes[start]:
                runs.append((start, i, modes[start]))
                start = i
    return runs


def balance_dataset(dataset: DemoDataset, rng: np.random.Generator,
                    required_modes: Sequence[DLM] = ()) -> DemoDataset:
    """Reamostra trechos de modo unico ate a mesma quantidade de registros por modo

    O ultimo trecho sorteado de cada modo e cortado no que falta para a cota, entao
    as contagens finais diferem no maximo em um registro.
    """
    if len(dataset) == 0:
        raise EmptyDataset("Dataset vazio")
    runs = [r for r in mode_runs(dataset) if r[2] is not None]
    present = sorted({mode for _, _, mode in runs}, key=lambda m: DLM_CODES[m])
    missing = [m for m in required_modes if memory_mode(m) not in present]
    if missing:
        raise EmptyMode(f"Modos sem registros: {', '.join(DLM(m).value for m in missing)}")
    if len(present) <= 1:
        logger.warning("Dataset com um unico modo; balanceamento ignorado")
        return dataset
    total = sum(e - s for s, e, _ in runs)
    per_mode, extra = divmod(total, len(present))
    pieces: list[tuple[int, int]] = []
    for k, mode in enumerate(present):
        pool = [(s, e) for s, e, m in runs if m == mode]
        left = per_mode + (1 if k < extra else 0)
        while left > 0:
            s, e = pool[int(rng.integers(len(pool)))]
            take = min(e - s, left)
            pieces.append((s, s + take))
            left -= take
    order = rng.permutation(len(pieces))
    return dataset.slices([pieces[i] for i in order])


def split_dataset(dataset: DemoDataset, rng: np.random.Generator,
                  train_fraction: float = 0.8) -> tuple[DemoDataset, DemoDataset]:
    """Divisao 4:1 por sequencia"""
    order = rng.permutation(len(dataset.sequences))
    cut = int(round(train_fraction * len(order)))
    return dataset.subset(sorted(order[:cut].tolist())), dataset.subset(sorted(order[cut:].tolist()))


SYNTHETIC_THETA = {DLM.TURN_LEFT: 0.8, DLM.TURN_RIGHT: -0.8, DLM.GO_FORWARD: 0.0}
SYNTHETIC_V = 0.5


def synthetic_mode_task(
    rng: np.random.Generator,
    sequences: int = 24,
    length: int = 20,
    side: int = 16,
    channels: int = 1,
    modes: Sequence[DLM] = (DLM.GO_FORWARD, DLM.TURN_LEFT, DLM.TURN_RIGHT),
) -> DemoDataset:
    """Imagens de ruido; theta constante por modo, resolvivel so pela troca de modo"""
    seqs = []
    for k in range(sequences):
        mode = DLM(modes[k % len(modes)])
        seqs.append([
            DemoRecord(
                t=float(t), mode=mode, v=SYNTHETIC_V, theta=SYNTHETIC_THETA[mode],
                image=rng.integers(0, 256, size=(channels, side, side), dtype=np.uint8),
            )
            for t in range(length)
        ])
    return DemoDataset.from_sequences(seqs)
