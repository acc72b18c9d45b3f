"""Locally normalised tag decoder with a transition matrix, plus Viterbi search.

log P(y_i | x, y_{i-1}) = log_softmax_t(W_t . g_i + A[y_{i-1}, t])[y_i]

Row ``len(tags)`` of A is a synthetic START state conditioning the first tag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Tensor, log_softmax_values


class TagSet:
    def __init__(self, labels: Sequence[str]):
        if len(set(labels)) != len(labels):
            raise ValueError("tag labels must be unique")
        self.labels = list(labels)
        self.index = {t: i for i, t in enumerate(self.labels)}

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def start(self) -> int:
        return len(self.labels)

    def encode(self, tags: Sequence[str]) -> list[int]:
        try:
            return [self.index[t] for t in tags]
        except KeyError as e:
            raise ValueError(f"tag {e.args[0]!r} not in tag set") from None

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.labels[i] for i in ids]


@dataclass
class DecoderParams:
    W: Param  # |T| x 2H
    A: Param  # (|T| + 1) x |T|, row = previous tag

    @property
    def n_tags(self) -> int:
        return self.W.shape[0]

    def params(self) -> list[Param]:
        return [self.W, self.A]

    @classmethod
    def create(cls, prefix: str, n_tags: int, input_dim: int,
               rng: np.random.Generator) -> DecoderParams:
        bound = np.sqrt(6.0 / (input_dim + n_tags))
        return cls(Param(f"{prefix}.W", rng.uniform(-bound, bound, (n_tags, input_dim))),
                   Param(f"{prefix}.A", np.zeros((n_tags + 1, n_tags))))


def step_log_probs(p: DecoderParams, g: Tensor, prev: int) -> Tensor:
    if not 0 <= prev <= p.n_tags:
        raise IndexError(f"previous tag {prev} out of range [0, {p.n_tags}]")
    return ad.log_softmax(ad.add(ad.matmul(p.W, g), ad.row(p.A, prev)))


def sentence_nll(p: DecoderParams, g: Sequence[Tensor], y: Sequence[int]) -> Tensor:
    """-sum_i log P(y_i | g_i, y_{i-1}) with y_0 = START."""
    if len(g) != len(y):
        raise ValueError(f"{len(g)} positions but {len(y)} tags")
    if not g:
        raise ValueError("empty sentence")
    scores = ad.matmul(ad.stack(g), ad.transpose(p.W))
    prev = p.n_tags
    terms = []
    for i, t in enumerate(y):
        lp = ad.log_softmax(ad.add(ad.row(scores, i), ad.row(p.A, prev)))
        terms.append(ad.pick(lp, t))
        prev = t
    return ad.scale(ad.add_all(terms), -1.0)


def log_prob_table(p: DecoderParams, g: np.ndarray) -> np.ndarray:
    """L[i, prev, t] = log P(t | g_i, prev) for every position and previous tag."""
    scores = g @ p.W.value.T
    return log_softmax_values(scores[:, None, :] + p.A.value[None, :, :])


def viterbi(table: np.ndarray) -> tuple[list[int], float]:
    """Exact best path through ``L[i, prev, t]`` (START row = last).

    Ties go to the smallest tag index, both for backpointers and the final tag.
    """
    n, _, T = table.shape
    delta = table[0, T].copy()
    back = np.zeros((n, T), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + table[i, :T, :]  # prev x cur
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(T)]
    best = int(np.argmax(delta))
    score = float(delta[best])
    path = [best]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    return path[::-1], score


def greedy(table: np.ndarray) -> tuple[list[int], float]:
    """Left-to-right argmax; for debugging only."""
    T = table.shape[2]
    prev, score, path = T, 0.0, []
    for i in range(table.shape[0]):
        t = int(np.argmax(table[i, prev]))
        score += float(table[i, prev, t])
        path.append(t)
        prev = t
    return path, score


def decode(p: DecoderParams, g: Sequence[Tensor] | np.ndarray,
           method: str = "viterbi") -> tuple[list[int], float]:
    G = g if isinstance(g, np.ndarray) else np.stack([x.value for x in g])
    if G.shape[0] == 0:
        raise ValueError("cannot decode an empty sentence")
    table = log_prob_table(p, G)
    return viterbi(table) if method == "viterbi" else greedy(table)
