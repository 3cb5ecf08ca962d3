"""
Checkpoint binario autodescritivo: assinatura, versao, cabecalho JSON e blobs
"""

import json
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.errors import ParseError
from .net import DecisionNet, NetSpec

MAGIC = b"NAVCKPT\x00"
VERSION = 1
PREFIX_DTYPE = np.dtype([("magic", "S8"), ("version", "<u4"), ("header_len", "<u4")])


def save_checkpoint(net: DecisionNet, path: Path, meta: Optional[dict] = None) -> Path:
    """Grava a especificacao, a tabela de formas e os parametros nomeados"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table, blobs, offset = [], [], 0
    for name, value in net.state_dict().items():
        blob = np.ascontiguousarray(value).tobytes()
        table.append({
            "name": name, "shape": list(value.shape), "dtype": value.dtype.str,
            "offset": offset, "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({
        "spec": net.spec.model_dump(mode="json"), "params": table, "meta": meta or {},
    }, sort_keys=True).encode("utf-8")
    prefix = np.array([(MAGIC, VERSION, len(header))], dtype=PREFIX_DTYPE)
    with open(path, "wb") as f:
        f.write(prefix.tobytes())
        f.write(header)
        for blob in blobs:
            f.write(blob)
    return path


def read_checkpoint(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Cabecalho e parametros sem construir a rede"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ParseError(f"Checkpoint ilegivel: {e}", str(path)) from e
    if len(raw) < PREFIX_DTYPE.itemsize:
        raise ParseError("Checkpoint truncado", str(path))
    prefix = np.frombuffer(raw[:PREFIX_DTYPE.itemsize], dtype=PREFIX_DTYPE)[0]
    if bytes(prefix["magic"]).rstrip(b"\x00") != MAGIC.rstrip(b"\x00"):
        raise ParseError("Assinatura invalida", str(path))
    if int(prefix["version"]) != VERSION:
        raise ParseError(f"Versao {int(prefix['version'])} nao suportada", str(path))
    start = PREFIX_DTYPE.itemsize
    end = start + int(prefix["header_len"])
    try:
        header = json.loads(raw[start:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"Cabecalho invalido: {e}", str(path)) from e
    body = raw[end:]
    params = {}
    for entry in header.get("params", []):
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        if hi > len(body):
            raise ParseError(f"Blob truncado: {entry['name']}", str(path))
        params[entry["name"]] = np.frombuffer(
            body[lo:hi], dtype=np.dtype(entry["dtype"])
        ).reshape(entry["shape"]).copy()
    return header, params


def load_checkpoint(path: Path) -> DecisionNet:
    header, params = read_checkpoint(path)
    net = DecisionNet(NetSpec(**header["spec"]))
    net.load_state_dict(params)
    return net
