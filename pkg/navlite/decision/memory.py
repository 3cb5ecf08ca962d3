"""
Memoria ConvLSTM multimodal

Cada camada de memoria tem uma celula por modo de comportamento; so a
celula do modo selecionado avanca a cada passo.
"""

from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..core.errors import ShapeMismatch, UnknownMode
from ..intention.dlm import DLM
from .layers import DropoutContext, GroupNorm, Module, Parameter, he_normal
from .tensor import DEFAULT_DTYPE, Tensor, concat, conv2d, replace_rows

MEMORY_MODES = (DLM.GO_FORWARD, DLM.TURN_LEFT, DLM.TURN_RIGHT, DLM.TAKE_ELEVATOR)

# transicoes sem celula propria seguem em frente
_MODE_ALIASES = {DLM.UPSTAIRS: DLM.GO_FORWARD, DLM.LINKWAY: DLM.GO_FORWARD}


def as_dlm(mode) -> DLM:
    try:
        return DLM(mode)
    except ValueError:
        raise UnknownMode(f"Modo desconhecido: {mode!r}") from None


def memory_mode(mode) -> Optional[DLM]:
    """Modo de memoria usado por uma intencao (None para Stop)"""
    mode = as_dlm(mode)
    if mode == DLM.STOP:
        return None
    return _MODE_ALIASES.get(mode, mode)


class MemoryCellState(NamedTuple):
    c: Tensor
    h: Tensor


class MemoryCell(Module):
    """Celula ConvLSTM com peephole Hadamard e GroupNorm por porta"""

    def __init__(self, in_channels: int, channels: int, height: int, width: int,
                 max_groups: int = 32, eps: float = 1e-5, kernel: int = 3,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE):
        rng = rng or np.random.default_rng(0)
        self.channels = channels
        self.spatial = (height, width)
        self.padding = kernel // 2
        fan_x = in_channels * kernel * kernel
        fan_h = channels * kernel * kernel
        for gate in "ifco":
            setattr(self, f"w_x{gate}", Parameter(
                he_normal(rng, (channels, in_channels, kernel, kernel), fan_x, dtype) * 0.5))
            setattr(self, f"w_h{gate}", Parameter(
                he_normal(rng, (channels, channels, kernel, kernel), fan_h, dtype) * 0.5))
        for gate in "ifo":
            setattr(self, f"w_c{gate}", Parameter(np.zeros((channels, height, width), dtype=dtype)))
        for gate in "ifco":
            setattr(self, f"b_{gate}", Parameter(np.zeros(channels, dtype=dtype)))
        for gate in "ifco":
            setattr(self, f"gn_{gate}", GroupNorm(channels, max_groups, eps, dtype))

    def initial_state(self, batch: int, dtype=DEFAULT_DTYPE) -> MemoryCellState:
        zero = np.zeros((batch, self.channels) + self.spatial, dtype=dtype)
        return MemoryCellState(Tensor(zero), Tensor(zero))

    def _bias(self, gate: str) -> Tensor:
        return getattr(self, f"b_{gate}").reshape(1, self.channels, 1, 1)

    def step(self, state: MemoryCellState, x: Tensor,
             ctx: Optional[DropoutContext] = None, key: str = "") -> tuple[MemoryCellState, Tensor]:
        c_prev, h_prev = state
        expected = (self.channels,) + self.spatial
        if c_prev.shape[1:] != expected or h_prev.shape != c_prev.shape:
            raise ShapeMismatch(f"Estado {c_prev.shape} incompativel com celula {expected}")
        if x.shape[0] != c_prev.shape[0] or x.shape[2:] != self.spatial:
            raise ShapeMismatch(f"Entrada {x.shape} incompativel com estado {c_prev.shape}")
        if ctx is not None:
            x = ctx.input(x)
            h_prev = ctx.recurrent(f"{key}.h", h_prev)
        n = self.channels
        w_x = concat([getattr(self, f"w_x{g}") for g in "ifco"], axis=0)
        w_h = concat([getattr(self, f"w_h{g}") for g in "ifco"], axis=0)
        z = conv2d(x, w_x, None, 1, self.padding) + conv2d(h_prev, w_h, None, 1, self.padding)
        i = self.gn_i(z[:, 0:n] + self.w_ci * c_prev + self._bias("i")).sigmoid()
        f = self.gn_f(z[:, n:2 * n] + self.w_cf * c_prev + self._bias("f")).sigmoid()
        g = self.gn_c(z[:, 2 * n:3 * n] + self._bias("c")).tanh()
        if ctx is not None:
            g = ctx.recurrent(f"{key}.g", g)
        c = f * c_prev + i * g
        o = self.gn_o(z[:, 3 * n:] + self.w_co * c + self._bias("o")).sigmoid()
        h = o * c.tanh()
        return MemoryCellState(c, h), h


def memory_cell_step(cell: MemoryCell, state: MemoryCellState, x: Tensor,
                     ctx: Optional[DropoutContext] = None) -> tuple[MemoryCellState, Tensor]:
    return cell.step(state, x, ctx)


LayerState = dict[DLM, MemoryCellState]


class MemoryLayer(Module):
    """Banco de celulas por modo (ou uma celula compartilhada)"""

    def __init__(self, in_channels: int, channels: int, height: int, width: int,
                 modes: Sequence[DLM] = MEMORY_MODES, shared: bool = False,
                 max_groups: int = 32, eps: float = 1e-5,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE):
        rng = rng or np.random.default_rng(0)
        self.modes = tuple(DLM(m) for m in modes)
        self.shared = shared
        self.channels = channels
        self.spatial = (height, width)
        if shared:
            self.cells = {DLM.GO_FORWARD: MemoryCell(in_channels, channels, height, width,
                                                     max_groups, eps, rng=rng, dtype=dtype)}
        else:
            self.cells = {m: MemoryCell(in_channels, channels, height, width, max_groups, eps,
                                        rng=rng, dtype=dtype) for m in self.modes}

    def cell_for(self, mode) -> Optional[DLM]:
        """Chave da celula usada por um modo (None para Stop)"""
        m = memory_mode(mode)
        if m is None:
            return None
        if m not in self.modes:
            raise UnknownMode(f"Sem celula de memoria para {m.value}")
        return DLM.GO_FORWARD if self.shared else m

    def initial_state(self, batch: int, dtype=DEFAULT_DTYPE) -> LayerState:
        return {k: cell.initial_state(batch, dtype) for k, cell in self.cells.items()}

    def step(self, state: LayerState, modes: Sequence, x: Tensor,
             ctx: Optional[DropoutContext] = None, key: str = "") -> tuple[Tensor, LayerState]:
        """Roteia cada linha do lote pela celula do seu modo"""
        if len(modes) != x.shape[0]:
            raise ShapeMismatch(f"{len(modes)} modos para lote de {x.shape[0]}")
        keys = [self.cell_for(m) for m in modes]
        n, _, h, w = x.shape
        out = Tensor(np.zeros((n, self.channels, h, w), dtype=x.dtype))
        new_state = dict(state)
        for k in self.cells:
            rows = np.array([r for r, kr in enumerate(keys) if kr == k], dtype=np.int64)
            if rows.size == 0:
                continue
            c_all, h_all = state[k]
            sub = MemoryCellState(c_all[rows], h_all[rows])
            (c_new, h_new), out_rows = self.cells[k].step(sub, x[rows], ctx, f"{key}.{k.value}")
            new_state[k] = MemoryCellState(
                replace_rows(c_all, rows, c_new), replace_rows(h_all, rows, h_new)
            )
            out = replace_rows(out, rows, out_rows)
        return out, new_state


def memory_layer_step(layer: MemoryLayer, mode, x: Tensor, state: LayerState,
                      ctx: Optional[DropoutContext] = None) -> tuple[Tensor, LayerState]:
    """Um passo com o mesmo modo para todo o lote"""
    return layer.step(state, [mode] * x.shape[0], x, ctx)
