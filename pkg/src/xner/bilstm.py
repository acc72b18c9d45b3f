"""Bidirectional LSTM over a sentence of input vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Tensor

# row blocks of the stacked gate parameters
GATES = ("input", "forget", "output", "candidate")


@dataclass
class LstmCellParams:
    """Gate weights stacked in ``GATES`` order: W (4H x D), U (4H x H), b (4H)."""

    W: Param
    U: Param
    b: Param

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def params(self) -> list[Param]:
        return [self.W, self.U, self.b]

    @classmethod
    def create(cls, prefix: str, input_dim: int, hidden: int,
               rng: np.random.Generator) -> LstmCellParams:
        bound = np.sqrt(6.0 / (input_dim + hidden))
        W = rng.uniform(-bound, bound, (4 * hidden, input_dim))
        U = rng.uniform(-bound, bound, (4 * hidden, hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0
        return cls(Param(f"{prefix}.W", W), Param(f"{prefix}.U", U), Param(f"{prefix}.b", b))


@dataclass
class BiLstmParams:
    forward: LstmCellParams
    backward: LstmCellParams

    @property
    def hidden(self) -> int:
        return self.forward.hidden

    def params(self) -> list[Param]:
        return self.forward.params() + self.backward.params()

    @classmethod
    def create(cls, prefix: str, input_dim: int, hidden: int,
               rng: np.random.Generator) -> BiLstmParams:
        return cls(LstmCellParams.create(f"{prefix}.fwd", input_dim, hidden, rng),
                   LstmCellParams.create(f"{prefix}.bwd", input_dim, hidden, rng))


def _step(p: LstmCellParams, wx: Tensor, h_prev: Tensor, c_prev: Tensor) -> tuple[Tensor, Tensor]:
    H = p.hidden
    pre = ad.add(ad.add(wx, ad.matmul(p.U, h_prev)), p.b)
    ifo = ad.sigmoid(ad.slice_(pre, 0, 3 * H))
    i = ad.slice_(ifo, 0, H)
    f = ad.slice_(ifo, H, 2 * H)
    o = ad.slice_(ifo, 2 * H, 3 * H)
    cand = ad.tanh(ad.slice_(pre, 3 * H, 4 * H))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, cand))
    h = ad.mul(o, ad.tanh(c))
    return h, c


def cell_step(p: LstmCellParams, x: Tensor, h_prev: Tensor, c_prev: Tensor) -> tuple[Tensor, Tensor]:
    if x.shape != (p.input_dim,) or h_prev.shape != (p.hidden,) or c_prev.shape != (p.hidden,):
        raise ad.ShapeError(f"cell_step: x {x.shape}, h {h_prev.shape}, c {c_prev.shape} "
                            f"for D_in={p.input_dim}, H={p.hidden}")
    return _step(p, ad.matmul(p.W, x), h_prev, c_prev)


def run_direction(p: LstmCellParams, inputs: Sequence[Tensor]) -> list[Tensor]:
    """Hidden states for ``inputs`` read in the given order from a zero state."""
    if inputs[0].shape != (p.input_dim,):
        raise ad.ShapeError(f"LSTM input {inputs[0].shape}, expected ({p.input_dim},)")
    # input-to-hidden products for all positions in one matmul
    wx_all = ad.matmul(ad.stack(inputs), ad.transpose(p.W))
    h = ad.constant(np.zeros(p.hidden))
    c = ad.constant(np.zeros(p.hidden))
    out = []
    for t in range(len(inputs)):
        h, c = _step(p, ad.row(wx_all, t), h, c)
        out.append(h)
    return out


def encode_sentence(p: BiLstmParams, inputs: Sequence[Tensor]) -> list[Tensor]:
    """g_i = [forward state at i, backward state at i]."""
    if not inputs:
        raise ValueError("cannot encode an empty sentence")
    fwd = run_direction(p.forward, inputs)
    bwd = run_direction(p.backward, list(reversed(inputs)))[::-1]
    return [ad.concat([f, b]) for f, b in zip(fwd, bwd)]
