"""Character-level word features: one-hot matrix, multi-width convolution, max pooling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Tensor

PAD = "<pad>"
UNK = "<unk>"


class CharVocab:
    """Case-sensitive character index with PAD at 0 and UNK at 1."""

    def __init__(self, chars: Iterable[str] = ()):
        self.index: dict[str, int] = {PAD: 0, UNK: 1}
        for ch in sorted(set(chars)):
            if ch not in self.index:
                self.index[ch] = len(self.index)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> CharVocab:
        return cls(ch for w in words for ch in w)

    @property
    def chars(self) -> list[str]:
        return list(self.index)

    @classmethod
    def from_chars(cls, chars: list[str]) -> CharVocab:
        v = cls()
        v.index = {c: i for i, c in enumerate(chars)}
        return v

    def __len__(self) -> int:
        return len(self.index)

    def ids(self, word: str) -> np.ndarray:
        unk = self.index[UNK]
        return np.array([self.index.get(ch, unk) for ch in word], dtype=np.int64)


def one_hot(word: str, vocab: CharVocab) -> np.ndarray:
    """k x |C| matrix with one 1.0 per row."""
    if not word:
        raise ValueError("cannot encode an empty word")
    m = np.zeros((len(word), len(vocab)))
    m[np.arange(len(word)), vocab.ids(word)] = 1.0
    return m


def unfold(word: str, vocab: CharVocab, width: int) -> np.ndarray:
    """Windows of ``width`` one-hot rows over the word padded by width-1 PAD rows per side.

    PAD rows are all-zero. Shape: (len(word) + width - 1) x (width * |C|).
    """
    m = one_hot(word, vocab)
    pad = np.zeros((width - 1, m.shape[1]))
    padded = np.vstack([pad, m, pad])
    n_pos = padded.shape[0] - width + 1
    return np.stack([padded[p:p + width].reshape(-1) for p in range(n_pos)])


@dataclass
class FilterBank:
    """Filters of width 1..max_width; ``weights[w-1]`` has one column per filter."""

    weights: list[Param]  # each (w * |C|) x k_w
    biases: list[Param]  # each k_w
    n_chars: int

    @property
    def max_width(self) -> int:
        return len(self.weights)

    @property
    def counts(self) -> list[int]:
        return [w.shape[1] for w in self.weights]

    @property
    def dim(self) -> int:
        return sum(self.counts)

    def params(self) -> list[Param]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    @classmethod
    def create(cls, prefix: str, n_chars: int, counts: list[int],
               rng: np.random.Generator) -> FilterBank:
        weights, biases = [], []
        for w, k in enumerate(counts, 1):
            fan_in = w * n_chars
            bound = np.sqrt(6.0 / (fan_in + k))
            weights.append(Param(f"{prefix}.w{w}.weight", rng.uniform(-bound, bound, (fan_in, k))))
            biases.append(Param(f"{prefix}.w{w}.bias", np.zeros(k)))
        return cls(weights, biases, n_chars)


def encode_word(word: str, bank: FilterBank, vocab: CharVocab,
                cache: dict | None = None) -> Tensor:
    """d1-dim feature: per width, tanh(conv + bias) max-pooled over positions.

    ``cache`` may map (word, width) to the unfolded input to avoid rebuilding it.
    """
    if len(vocab) != bank.n_chars:
        raise ValueError(f"vocab has {len(vocab)} chars, filters expect {bank.n_chars}")
    pooled = []
    for w, (weight, bias) in enumerate(zip(bank.weights, bank.biases), 1):
        key = (word, w)
        windows = cache.get(key) if cache is not None else None
        if windows is None:
            windows = unfold(word, vocab, w)
            if cache is not None:
                cache[key] = windows
        conv = ad.add_bias(ad.matmul(ad.constant(windows), weight), bias)
        pooled.append(ad.max_over_rows(ad.tanh(conv)))
    return ad.concat(pooled)
