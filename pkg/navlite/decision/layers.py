"""
Camadas: convolucao, GroupNorm, dropout por canal, linear e LSTM
"""

from enum import Enum
from typing import Iterator, Optional

import numpy as np

from ..core.errors import IndivisibleChannels, ShapeMismatch
from .tensor import DEFAULT_DTYPE, Tensor, conv2d, group_norm


class Parameter(Tensor):
    """Tensor treinavel"""

    def __init__(self, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)


class Module:
    """Base com enumeracao deterministica de parametros"""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            yield from _walk(f"{prefix}{name}", value)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def zero_(self) -> "Module":
        """Zera todos os pesos, biases e afins"""
        for p in self.parameters():
            p.data[...] = 0
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        if missing:
            raise ShapeMismatch(f"Parametros ausentes: {', '.join(missing[:5])}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ShapeMismatch(f"{name}: forma {value.shape} != {p.shape}")
            p.data = value.astype(p.dtype, copy=True)


def _walk(name: str, value) -> Iterator[tuple[str, Parameter]]:
    if isinstance(value, Parameter):
        yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(f"{name}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(f"{name}.{i}", item)
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _walk(f"{name}.{getattr(key, 'value', key)}", item)


def he_normal(rng: np.random.Generator, shape: tuple, fan_in: int, dtype=DEFAULT_DTYPE) -> np.ndarray:
    return (rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)).astype(dtype)


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int = 3, stride: int = 1,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE, bias: bool = True):
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel * kernel
        self.weight = Parameter(he_normal(rng, (out_channels, in_channels, kernel, kernel), fan_in, dtype))
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None
        self.stride = stride
        self.padding = kernel // 2

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.stride, self.padding)


def groups_for(channels: int, max_groups: int) -> int:
    """G = min(max_groups, C); exige divisibilidade"""
    groups = min(max_groups, channels)
    if channels % groups:
        raise IndivisibleChannels(f"{channels} canais nao divisiveis em {groups} grupos")
    return groups


class GroupNorm(Module):
    def __init__(self, channels: int, max_groups: int = 32, eps: float = 1e-5, dtype=DEFAULT_DTYPE):
        self.groups = groups_for(channels, max_groups)
        self.eps = eps
        self.gamma = Parameter(np.ones(channels, dtype=dtype))
        self.beta = Parameter(np.zeros(channels, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        c = x.shape[1]
        y = group_norm(x, self.groups, self.eps)
        return y * self.gamma.reshape(1, c, 1, 1) + self.beta.reshape(1, c, 1, 1)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE):
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(he_normal(rng, (in_features, out_features), in_features, dtype))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class Phase(str, Enum):
    """Fase do dropout"""
    TRAIN = "train"
    EVAL = "eval"
    MC = "mc"


def dropout_mask(shape: tuple, rate: float, rng: np.random.Generator, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Mascara por canal (N, C, 1, 1) com sobreviventes escalados por 1/(1-rate)"""
    keep = rng.random((shape[0], shape[1]) + (1,) * (len(shape) - 2)) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def channel_dropout(x: Tensor, rate: float, rng: np.random.Generator,
                    phase: Phase = Phase.TRAIN) -> Tensor:
    """Zera canais inteiros com probabilidade rate (train e mc)"""
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate deve estar em [0, 1)")
    if Phase(phase) == Phase.EVAL or rate == 0.0:
        return x
    return x * Tensor(dropout_mask(x.shape, rate, rng, x.dtype))


class DropoutContext:
    """
    Mascaras de dropout de uma sequencia

    Mascaras recorrentes (h e g) ficam fixas ate reset(); mascaras da
    entrada sao sorteadas a cada passo.
    """

    def __init__(self, rate: float, rng: Optional[np.random.Generator] = None,
                 phase: Phase = Phase.TRAIN):
        self.rate = rate
        self.rng = rng or np.random.default_rng(0)
        self.phase = Phase(phase)
        self._recurrent: dict[tuple, np.ndarray] = {}

    @property
    def active(self) -> bool:
        return self.phase != Phase.EVAL and self.rate > 0.0

    def reset(self) -> None:
        self._recurrent.clear()

    def input(self, x: Tensor) -> Tensor:
        if not self.active:
            return x
        return x * Tensor(dropout_mask(x.shape, self.rate, self.rng, x.dtype))

    def recurrent(self, key: str, x: Tensor) -> Tensor:
        if not self.active:
            return x
        slot = (key, x.shape)
        if slot not in self._recurrent:
            self._recurrent[slot] = dropout_mask(x.shape, self.rate, self.rng, x.dtype)
        return x * Tensor(self._recurrent[slot])


class LSTMCell(Module):
    def __init__(self, in_features: int, hidden: int,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE):
        rng = rng or np.random.default_rng(0)
        self.hidden = hidden
        self.w_x = Parameter(he_normal(rng, (in_features, 4 * hidden), in_features, dtype) * 0.5)
        self.w_h = Parameter(he_normal(rng, (hidden, 4 * hidden), hidden, dtype) * 0.5)
        bias = np.zeros(4 * hidden, dtype=dtype)
        bias[hidden:2 * hidden] = 1.0
        self.bias = Parameter(bias)

    def __call__(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        h, c = state
        z = x @ self.w_x + h @ self.w_h + self.bias
        n = self.hidden
        i = z[:, :n].sigmoid()
        f = z[:, n:2 * n].sigmoid()
        g = z[:, 2 * n:3 * n].tanh()
        o = z[:, 3 * n:].sigmoid()
        c = f * c + i * g
        return o * c.tanh(), c


class LSTM(Module):
    """LSTM empilhada sobre vetores"""

    def __init__(self, in_features: int, hidden: int, layers: int,
                 rng: Optional[np.random.Generator] = None, dtype=DEFAULT_DTYPE):
        rng = rng or np.random.default_rng(0)
        self.hidden = hidden
        self.cells = [
            LSTMCell(in_features if k == 0 else hidden, hidden, rng, dtype) for k in range(layers)
        ]

    def initial_state(self, batch: int, dtype=DEFAULT_DTYPE) -> list[tuple[Tensor, Tensor]]:
        zero = np.zeros((batch, self.hidden), dtype=dtype)
        return [(Tensor(zero), Tensor(zero)) for _ in self.cells]

    def __call__(self, x: Tensor, state):
        new_state = []
        for cell, s in zip(self.cells, state):
            h, c = cell(x, s)
            new_state.append((h, c))
            x = h
        return x, new_state


def one_hot(codes: np.ndarray, size: int, dtype=DEFAULT_DTYPE) -> Tensor:
    out = np.zeros((len(codes), size), dtype=dtype)
    out[np.arange(len(codes)), codes] = 1.0
    return Tensor(out)


