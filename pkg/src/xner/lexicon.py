"""Word embeddings (lowercased lookup), per-language projection, and the token input vector."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Tensor
from .charcnn import CharVocab, FilterBank, encode_word

UNK_WORD = "<unk>"


class EmbeddingFormatError(ValueError):
    pass


def unk_bound(dim: int) -> float:
    return 0.25 / np.sqrt(dim)


@dataclass
class WordVocab:
    """Lowercased word -> row; row 0 is UNK."""

    index: dict[str, int] = field(default_factory=lambda: {UNK_WORD: 0})

    def __len__(self) -> int:
        return len(self.index)

    def lookup(self, word: str) -> int:
        return self.index.get(word.lower(), 0)

    @property
    def words(self) -> list[str]:
        return list(self.index)


@dataclass
class Embeddings:
    vocab: WordVocab
    table: Param

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    def extend(self, words: Iterable[str], rng: np.random.Generator) -> int:
        """Add unseen (lowercased) words with small uniform rows; returns how many."""
        new = []
        for w in words:
            key = w.lower()
            if key not in self.vocab.index:
                self.vocab.index[key] = len(self.vocab.index)
                new.append(key)
        if new:
            b = unk_bound(self.dim)
            rows = rng.uniform(-b, b, (len(new), self.dim))
            value = np.vstack([self.table.value, rows])
            self.table.value = value
            self.table.grad = np.zeros_like(value)
        return len(new)


def random_embeddings(name: str, words: Iterable[str], dim: int,
                      rng: np.random.Generator) -> Embeddings:
    b = unk_bound(dim)
    emb = Embeddings(WordVocab(), Param(name, rng.uniform(-b, b, (1, dim)), sparse=True))
    emb.extend(sorted({w.lower() for w in words}), rng)
    return emb


def load_embeddings(data: bytes | str, *, name: str = "emb.table",
                    rng: np.random.Generator | None = None, lowercase: bool = True) -> Embeddings:
    """Read ``word v1 ... vd`` lines (optional ``count dim`` header).

    Keys are lowercased; the first occurrence of a word wins. The UNK row is
    drawn from ``rng`` (seed 0 if not given).
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmbeddingFormatError("embedding file is empty")
    first = lines[0].split()
    start = 0
    if len(first) == 2 and all(f.lstrip("-").isdigit() for f in first):
        start = 1
    vocab = WordVocab()
    rows: list[np.ndarray] = []
    dim = None
    for lineno, line in enumerate(lines[start:], start + 1):
        parts = line.rstrip().split(" ")
        word, vals = parts[0], parts[1:]
        if dim is None:
            dim = len(vals)
            if dim == 0:
                raise EmbeddingFormatError(f"line {lineno}: no vector values")
        if len(vals) != dim:
            raise EmbeddingFormatError(f"line {lineno}: expected {dim} values, found {len(vals)}")
        key = word.lower() if lowercase else word
        if key in vocab.index:
            continue
        try:
            rows.append(np.array([float(v) for v in vals]))
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric value") from None
        vocab.index[key] = len(vocab.index)
    if dim is None:
        raise EmbeddingFormatError("embedding file has a header but no vectors")
    rng = rng if rng is not None else np.random.default_rng(0)
    b = unk_bound(dim)
    table = np.vstack([rng.uniform(-b, b, (1, dim))] + [r[None, :] for r in rows])
    return Embeddings(vocab, Param(name, table, sparse=True))


def save_embeddings(emb: Embeddings) -> str:
    """Text form readable by :func:`load_embeddings` (UNK row omitted)."""
    out = [f"{len(emb.vocab) - 1} {emb.dim}"]
    for word, i in emb.vocab.index.items():
        if i == 0:
            continue
        out.append(word + " " + " ".join(repr(float(x)) for x in emb.table.value[i]))
    return "\n".join(out) + "\n"


@dataclass
class LanguageProjection:
    """Per-language linear map into the shared input space; ``None`` weights = identity."""

    weight: Param | None = None
    bias: Param | None = None

    @property
    def mode(self) -> str:
        return "identity" if self.weight is None else "learned"

    @classmethod
    def learned(cls, prefix: str, dim: int) -> LanguageProjection:
        return cls(Param(f"{prefix}.weight", np.eye(dim)), Param(f"{prefix}.bias", np.zeros(dim)))

    def params(self) -> list[Param]:
        return [] if self.weight is None else [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        if self.weight is None:
            return x
        return ad.add(ad.matmul(self.weight, x), self.bias)


def embed(word: str, emb: Embeddings, proj: LanguageProjection) -> Tensor:
    return proj(ad.row(emb.table, emb.vocab.lookup(word)))


def input_vector(word: str, emb: Embeddings, proj: LanguageProjection, bank: FilterBank,
                 chars: CharVocab, cache: dict | None = None) -> Tensor:
    """[embedding of lowercased word, char-CNN features of the cased word]."""
    return ad.concat([embed(word, emb, proj), encode_word(word, bank, chars, cache)])
