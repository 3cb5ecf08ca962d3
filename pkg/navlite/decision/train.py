"""
Treino por imitacao com TBPTT(k1, k2) e AdamW
"""

from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from ..core.config import TrainConfig
from ..core.errors import EmptyDataset
from ..core.log import get_logger
from ..intention.dlm import CODE_DLM, DLM
from .data import DemoDataset, balanced_choice, sequence_label
from .layers import DropoutContext, Parameter, Phase
from .net import DecisionNet, NetState, detach_state
from .tensor import Tensor, mse_loss, stack

logger = get_logger(__name__)


class AdamW:
    """Adam com decaimento de pesos desacoplado"""

    def __init__(self, params: Sequence[Parameter], weight_decay: float = 5e-4,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float) -> None:
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            p.data *= 1.0 - lr * self.weight_decay
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """LR = BaseLR * BS * k2, decaido nas epocas configuradas"""
    decays = sum(1 for e in cfg.lr_decay_epochs if epoch >= e)
    return cfg.lr * cfg.lr_decay_factor**decays


class Window(NamedTuple):
    """Janela de L quadros espacados de uma unica sequencia"""
    indices: np.ndarray
    elevator: bool


def build_windows(dataset: DemoDataset, cfg: TrainConfig) -> list[Window]:
    """Janelas de comprimento L a cada `frame_stride` quadros, sem cruzar sequencias"""
    windows: list[Window] = []
    skipped = 0
    codes = dataset.records["mode"]
    for s, e in dataset.sequences:
        elevator = any(CODE_DLM[int(c)] == DLM.TAKE_ELEVATOR for c in codes[s:e])
        length = cfg.sequence_length * (cfg.elevator_multiplier if elevator else 1)
        found = 0
        for offset in range(cfg.frame_stride):
            idx = np.arange(s + offset, e, cfg.frame_stride)
            for k in range(len(idx) // length):
                windows.append(Window(idx[k * length:(k + 1) * length], elevator))
                found += 1
        if not found:
            skipped += 1
    if skipped:
        logger.warning(f"{skipped} sequencia(s) curtas demais para L={cfg.sequence_length}")
    return windows


def _window_label(dataset: DemoDataset, window: Window) -> Optional[DLM]:
    sub = DemoDataset(records=dataset.records[window.indices], sequences=[])
    return sequence_label(sub, 0, len(window.indices))


def truncated_step(
    net: DecisionNet,
    state: NetState,
    images: np.ndarray,
    modes: Sequence[Sequence[DLM]],
    targets: np.ndarray,
    k1: int,
    ctx: Optional[DropoutContext] = None,
) -> tuple[Tensor, list[NetState]]:
    """
    Um segmento truncado: parte de um estado destacado, roda len(images) passos
    e calcula o MSE nas ultimas k1 predicoes.

    images (T, N, C, H, W), modes T x N, targets (T, N, 2). Retorna a perda e
    o estado destacado apos cada passo.
    """
    state = detach_state(state)
    outs, states = [], []
    steps = len(images)
    for j in range(steps):
        out, state = net.forward(images[j], modes[j], state, ctx)
        states.append(detach_state(state))
        if j >= steps - k1:
            outs.append(out)
    pred = stack(outs, axis=0)
    return mse_loss(pred, targets[steps - k1:]), states


def _train_batch(net: DecisionNet, opt: AdamW, dataset: DemoDataset, batch: Sequence[Window],
                 cfg: TrainConfig, lr: float, ctx: DropoutContext) -> float:
    mult = cfg.elevator_multiplier if batch[0].elevator else 1
    k1, k2 = cfg.k1 * mult, cfg.k2 * mult
    index = np.stack([w.indices for w in batch], axis=1)  # (L, N)
    recs = dataset.records[index]
    images = recs["image"]
    modes = [[CODE_DLM[int(c)] for c in row] for row in recs["mode"]]
    targets = np.stack([recs["v"], recs["theta"]], axis=-1).astype(net.spec.dtype)
    length = index.shape[0]
    ctx.reset()
    history = {0: net.initial_state(len(batch))}
    losses = []
    for u in range(k1, length + 1, k1):
        s0 = max(0, u - k2)
        loss, states = truncated_step(net, history[s0], images[s0:u], modes[s0:u],
                                      targets[s0:u], k1, ctx)
        for j, st in enumerate(states):
            history[s0 + j + 1] = st
        net.zero_grad()
        loss.backward()
        opt.step(lr)
        losses.append(loss.item())
    return float(np.mean(losses)) if losses else 0.0


def tbptt_train(
    net: DecisionNet,
    dataset: DemoDataset,
    cfg: TrainConfig,
    rng: np.random.Generator,
    on_iteration: Optional[Callable[[int, float], None]] = None,
) -> tuple[DecisionNet, list[float]]:
    """Treina a rede no pool (rebalanceado a cada epoca); curva de perda por iteracao"""
    if len(dataset) == 0:
        raise EmptyDataset("Dataset vazio")
    windows = build_windows(dataset, cfg)
    if not windows:
        raise EmptyDataset(f"Nenhuma sequencia com L={cfg.sequence_length} quadros")
    labels = [_window_label(dataset, w) for w in windows]
    opt = AdamW(net.parameters(), cfg.weight_decay, cfg.betas, cfg.adam_eps)
    ctx = DropoutContext(cfg.dropout, rng, Phase.TRAIN)
    losses: list[float] = []
    for epoch in range(cfg.epochs):
        lr = lr_at(cfg, epoch)
        chosen = balanced_choice(labels, rng) if cfg.balance else list(range(len(windows)))
        pool = [windows[i] for i in rng.permutation(chosen)] if chosen else list(windows)
        for elevator in (False, True):
            group = [w for w in pool if w.elevator == elevator]
            for b in range(0, len(group), cfg.batch_size):
                loss = _train_batch(net, opt, dataset, group[b:b + cfg.batch_size], cfg, lr, ctx)
                losses.append(loss)
                if on_iteration is not None:
                    on_iteration(len(losses), loss)
                logger.debug(f"epoca {epoch} iter {len(losses)} perda {loss:.5f} lr {lr:.2e}")
                if cfg.max_iters is not None and len(losses) >= cfg.max_iters:
                    return net, losses
    return net, losses


def desk_train_config(**overrides) -> TrainConfig:
    """Regime de mesa: janelas curtas, lote pequeno e LR efetivo de 1e-2"""
    values = dict(sequence_length=10, frame_stride=1, k1=5, k2=10, batch_size=8,
                  base_lr=1.25e-4, weight_decay=0.0, dropout=0.0, epochs=1000,
                  lr_decay_epochs=[], max_iters=200)
    values.update(overrides)
    return TrainConfig(**values)
