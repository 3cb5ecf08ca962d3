"""
Rede DECISION e baselines

Tres blocos (convolucao -> memoria -> reducao), vetor pooled e cabecas
por modo que produzem (v, theta) em [-1, 1].
"""

from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..core.config import config
from ..core.errors import ShapeMismatch, UnknownKind, UnknownMode
from ..intention.dlm import DLM
from .layers import LSTM, Conv2d, DropoutContext, Linear, Module, one_hot
from .memory import MEMORY_MODES, LayerState, MemoryLayer, as_dlm, memory_mode
from .tensor import Tensor, avg_pool2, concat, global_avg_pool, replace_rows

NET_KINDS = (
    "decision", "cnn_reactive", "mf_cnn", "cnn_lstm",
    "ablation_l123", "ablation_l23", "ablation_l12",
    "no_multimodal_memory", "no_intention", "lpe_net",
)

# blocos com memoria por tipo de rede
# no_multimodal_memory divide a celula e tambem a cabeca: a rede nao recebe o modo
_MEMORY_BLOCKS = {
    "decision": (True, True, True),
    "no_multimodal_memory": (True, True, True),
    "ablation_l23": (True, False, False),
    "ablation_l12": (False, False, True),
}


class NetSpec(BaseModel):
    """Arquitetura e escala de uma rede"""
    kind: str = Field(default="decision", description="Tipo de rede")
    input_side: int = Field(default_factory=lambda: config.decision.input_side)
    in_channels: int = Field(default_factory=lambda: config.decision.in_channels)
    channels: list[int] = Field(default_factory=lambda: list(config.decision.channels))
    max_groups: int = Field(default_factory=lambda: config.decision.max_groups)
    gn_eps: float = Field(default_factory=lambda: config.decision.gn_eps)
    dropout: float = Field(default_factory=lambda: config.decision.dropout)
    head_hidden: int = Field(default_factory=lambda: config.decision.head_hidden)
    intention_latent: int = Field(default_factory=lambda: config.decision.intention_latent)
    frames: int = Field(default_factory=lambda: config.decision.frames)
    lstm_layers: int = Field(default_factory=lambda: config.decision.lstm_layers)
    modes: list[DLM] = Field(default_factory=lambda: list(MEMORY_MODES))
    seed: int = 0
    dtype: Literal["float32", "float64"] = "float32"

    @classmethod
    def full(cls, kind: str = "decision", **overrides) -> "NetSpec":
        """Escala completa: entrada 112 e vetor pooled de 1024"""
        values = dict(kind=kind, input_side=112, channels=[256, 512, 1024], max_groups=32,
                      head_hidden=256, intention_latent=64)
        values.update(overrides)
        return cls(**values)


class NetState(NamedTuple):
    """Estado recorrente de uma rede"""
    memory: list[Optional[LayerState]]
    lstm: Optional[list[tuple[Tensor, Tensor]]] = None
    frames: Optional[list[Tensor]] = None


def detach_state(state: NetState) -> NetState:
    memory = [
        None if layer is None else {k: type(s)(s.c.detach(), s.h.detach()) for k, s in layer.items()}
        for layer in state.memory
    ]
    lstm = None if state.lstm is None else [(h.detach(), c.detach()) for h, c in state.lstm]
    frames = None if state.frames is None else [f.detach() for f in state.frames]
    return NetState(memory, lstm, frames)


class Head(Module):
    """Linear -> ReLU -> Linear -> tanh"""

    def __init__(self, in_features: int, hidden: int, rng, dtype):
        self.hidden = Linear(in_features, hidden, rng, dtype)
        self.out = Linear(hidden, 2, rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.out(self.hidden(x).relu()).tanh()


class DecisionNet(Module):
    """Controlador condicionado por intencao com memoria multimodal"""

    def __init__(self, spec: NetSpec):
        if spec.kind not in NET_KINDS:
            raise UnknownKind(f"Tipo de rede desconhecido: '{spec.kind}'")
        if len(spec.channels) != 3:
            raise ShapeMismatch("A rede tem exatamente 3 blocos")
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        dtype = np.dtype(spec.dtype)
        self._dtype = dtype
        kind = spec.kind
        stacked = spec.frames if kind == "mf_cnn" else 1
        self.stacked_frames = stacked
        memory_blocks = _MEMORY_BLOCKS.get(kind, (False, False, False))
        shared = kind == "no_multimodal_memory"

        self.convs = []
        self.memory = []
        in_ch = spec.in_channels * stacked
        side = spec.input_side
        for b, ch in enumerate(spec.channels):
            self.convs.append(Conv2d(in_ch, ch, 3, 1, rng, dtype))
            if memory_blocks[b]:
                self.memory.append(MemoryLayer(ch, ch, side, side, spec.modes, shared,
                                               spec.max_groups, spec.gn_eps, rng, dtype))
            else:
                self.memory.append(None)
            in_ch = ch
            side //= 2
        self.pooled_size = spec.channels[-1]

        features = self.pooled_size
        self.lstm = None
        if kind == "cnn_lstm":
            self.lstm = LSTM(features, features, spec.lstm_layers, rng, dtype)
        self.intent_embed = None
        if kind == "cnn_reactive":
            self.intent_embed = Linear(len(spec.modes), spec.intention_latent, rng, dtype)
            features += spec.intention_latent
        if kind == "lpe_net":
            features *= 2
        # uma cabeca so: estas redes ignoram o modo
        self.shared_head = kind in ("no_multimodal_memory", "no_intention", "lpe_net")
        if self.shared_head:
            self.heads = {DLM.GO_FORWARD: Head(features, spec.head_hidden, rng, dtype)}
        else:
            self.heads = {DLM(m): Head(features, spec.head_hidden, rng, dtype) for m in spec.modes}

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def has_memory(self) -> bool:
        return any(m is not None for m in self.memory) or self.lstm is not None

    def initial_state(self, batch: int) -> NetState:
        memory = [None if m is None else m.initial_state(batch, self._dtype) for m in self.memory]
        lstm = None if self.lstm is None else self.lstm.initial_state(batch, self._dtype)
        frames = None
        if self.stacked_frames > 1:
            shape = (batch, self.spec.in_channels, self.spec.input_side, self.spec.input_side)
            frames = [Tensor(np.zeros(shape, dtype=self._dtype))
                      for _ in range(self.stacked_frames - 1)]
        return NetState(memory, lstm, frames)

    def _input(self, image) -> Tensor:
        """Imagem uint8 (ou float) -> tensor (N, C, H, W) no dtype da rede"""
        if isinstance(image, Tensor):
            x = image
        else:
            arr = np.asarray(image)
            if arr.dtype == np.uint8:
                arr = arr.astype(self._dtype) / 255.0
            x = Tensor(arr.astype(self._dtype, copy=False))
        if x.ndim == 2:
            x = x.reshape(1, 1, *x.shape)
        elif x.ndim == 3:
            x = x.reshape(1, *x.shape)
        side = self.spec.input_side
        if x.shape[1:] != (self.spec.in_channels, side, side):
            raise ShapeMismatch(
                f"Entrada {x.shape[1:]} != {(self.spec.in_channels, side, side)}"
            )
        return x

    def _backbone(self, x: Tensor, modes, state: NetState, ctx, new_memory) -> Tensor:
        for b, conv in enumerate(self.convs):
            x = conv(x).relu()
            layer = self.memory[b]
            if layer is not None:
                x, layer_state = layer.step(state.memory[b], modes, x, ctx, key=f"m{b}")
                new_memory[b] = layer_state
            x = avg_pool2(x)
        return global_avg_pool(x)

    def forward_features(self, image, modes: Sequence, state: Optional[NetState] = None,
                         ctx: Optional[DropoutContext] = None, lpe=None) -> tuple[Tensor, NetState]:
        """Vetor pooled antes das cabecas"""
        x = self._input(image)
        n = x.shape[0]
        modes = [as_dlm(m) for m in modes]
        if len(modes) != n:
            raise ShapeMismatch(f"{len(modes)} modos para lote de {n}")
        for m in modes:
            mm = memory_mode(m)
            if mm is not None and not self.shared_head and mm not in self.heads:
                raise UnknownMode(f"Sem cabeca para {mm.value}")
        if state is None:
            state = self.initial_state(n)
        frames = state.frames
        if self.stacked_frames > 1:
            x_stack = concat(list(state.frames) + [x], axis=1)
            frames = list(state.frames[1:]) + [x]
            x = x_stack
        new_memory = list(state.memory)
        pooled = self._backbone(x, modes, state, ctx, new_memory)
        if self.kind == "lpe_net":
            if lpe is None:
                raise ShapeMismatch("lpe_net exige a imagem LPE")
            pooled = concat([pooled, self._backbone(self._input(lpe), modes, state, ctx, [None] * 3)],
                            axis=1)
        lstm_state = state.lstm
        if self.lstm is not None:
            pooled, lstm_state = self.lstm(pooled, state.lstm)
        return pooled, NetState(new_memory, lstm_state, frames)

    def heads_forward(self, features: Tensor, modes: Sequence) -> Tensor:
        """Seletor de cabeca por modo; Stop sai (0, 0)"""
        modes = [as_dlm(m) for m in modes]
        n = features.shape[0]
        if self.intent_embed is not None:
            codes = np.array([self.spec.modes.index(memory_mode(m) or DLM.GO_FORWARD)
                              for m in modes], dtype=np.int64)
            latent = self.intent_embed(one_hot(codes, len(self.spec.modes), self._dtype)).relu()
            features = concat([features, latent], axis=1)
        out = Tensor(np.zeros((n, 2), dtype=self._dtype))
        keys = [None if memory_mode(m) is None else
                (DLM.GO_FORWARD if self.shared_head else memory_mode(m)) for m in modes]
        for key, head in self.heads.items():
            rows = np.array([r for r, k in enumerate(keys) if k == key], dtype=np.int64)
            if rows.size:
                out = replace_rows(out, rows, head(features[rows]))
        return out

    def forward(self, image, modes: Sequence, state: Optional[NetState] = None,
                ctx: Optional[DropoutContext] = None, lpe=None) -> tuple[Tensor, NetState]:
        features, state = self.forward_features(image, modes, state, ctx, lpe)
        return self.heads_forward(features, modes), state

    __call__ = forward


def build_net(spec: NetSpec) -> DecisionNet:
    return DecisionNet(spec)


def build_baseline(kind: str, **overrides) -> DecisionNet:
    """Rede do tipo pedido com a escala padrao de mesa"""
    if kind not in NET_KINDS:
        raise UnknownKind(f"Tipo de rede desconhecido: '{kind}'")
    return DecisionNet(NetSpec(kind=kind, **overrides))


def forward(net: DecisionNet, image, mode, state: Optional[NetState] = None,
            ctx: Optional[DropoutContext] = None, lpe=None) -> tuple[tuple[float, float], NetState]:
    """Um passo para uma unica observacao"""
    out, state = net.forward(image, [mode], state, ctx, lpe)
    v, theta = out.data[0]
    return (float(v), float(theta)), state
