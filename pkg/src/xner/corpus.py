"""CoNLL reading/writing, tag-scheme conversion, joint corpora and scoring."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

ENTITY_TYPES = ("PER", "LOC", "ORG", "MISC")
DOCSTART = "-DOCSTART-"


class CorpusFormatError(ValueError):
    """Raised for malformed CoNLL input or unusable tags."""


class TagScheme(str, Enum):
    IOB1 = "IOB1"
    IOBES = "IOBES"
    IO = "IO"

    @property
    def prefixes(self) -> tuple[str, ...]:
        return {"IOB1": ("I", "B"), "IOBES": ("B", "I", "E", "S"), "IO": ("I",)}[self.value]

    def tags(self, types: Sequence[str] = ENTITY_TYPES) -> list[str]:
        """All labels of the scheme, ``O`` first."""
        return ["O"] + [f"{p}-{t}" for t in types for p in self.prefixes]


@dataclass(frozen=True)
class Token:
    surface: str
    tag: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    lang: str = ""

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.tag for t in self.tokens]

    @classmethod
    def from_pairs(cls, words: Sequence[str], tags: Sequence[str], lang: str = "") -> Sentence:
        if len(words) != len(tags):
            raise ValueError("words and tags differ in length")
        return cls(tuple(Token(w, t) for w, t in zip(words, tags)), lang)


@dataclass(frozen=True)
class Corpus:
    language: str
    scheme: TagScheme
    sentences: tuple[Sentence, ...]
    repairs: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    @property
    def languages(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.sentences:
            seen.setdefault(s.lang, None)
        return list(seen)


@dataclass(frozen=True, order=True)
class EntitySpan:
    start: int
    end: int  # inclusive
    type: str


@dataclass(frozen=True)
class ColumnLayout:
    """Which whitespace-separated columns hold the word and the NER tag.

    ``n_columns=None`` means the count is taken from the first token line
    and enforced for the rest of the file.
    """

    word: int = 0
    tag: int = -1
    n_columns: int | None = None


CONLL2003 = ColumnLayout(word=0, tag=3, n_columns=4)
CONLL2002_ES = ColumnLayout(word=0, tag=1, n_columns=2)
CONLL2002_NL = ColumnLayout(word=0, tag=2, n_columns=3)
LAYOUTS = {"conll2003": CONLL2003, "conll2002-es": CONLL2002_ES,
           "conll2002-nl": CONLL2002_NL, "auto": ColumnLayout()}


# ---------------------------------------------------------------- tags and spans


def split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, sep, typ = tag.partition("-")
    if not sep or not typ:
        raise CorpusFormatError(f"unknown tag {tag!r}")
    return prefix, typ


def check_tag(tag: str, scheme: TagScheme, types: Sequence[str] = ENTITY_TYPES) -> None:
    prefix, typ = split_tag(tag)
    if prefix == "O":
        return
    if prefix not in scheme.prefixes or typ not in types:
        raise CorpusFormatError(f"tag {tag!r} is not a {scheme.value} tag")


def _starts_chunk(prev: str, cur: str) -> bool:
    p_prefix, p_type = split_tag(prev)
    c_prefix, c_type = split_tag(cur)
    if c_prefix == "O":
        return False
    if p_prefix == "O" or p_type != c_type:
        return True
    return c_prefix in ("B", "S") or p_prefix in ("E", "S")


def spans_from_tags(tags: Sequence[str]) -> list[EntitySpan]:
    """Maximal entity runs, read leniently (conlleval-style).

    A token opens a new entity when it is not O and the previous token is O,
    of another type, explicitly closed (E/S), or the token itself is B/S.
    The same rule covers IOB1, IOBES and IO.
    """
    spans = []
    start = None
    prev = "O"
    for i, tag in enumerate(tags):
        if _starts_chunk(prev, tag) or (tag == "O" and start is not None):
            if start is not None:
                spans.append(EntitySpan(start, i - 1, split_tag(prev)[1]))
                start = None
            if tag != "O":
                start = i
        prev = tag
    if start is not None:
        spans.append(EntitySpan(start, len(tags) - 1, split_tag(prev)[1]))
    return spans


def extract_spans(s: Sentence) -> list[EntitySpan]:
    return spans_from_tags(s.tags)


def tags_from_spans(spans: Iterable[EntitySpan], n: int, scheme: TagScheme) -> list[str]:
    tags = ["O"] * n
    prev_end, prev_type = -2, None
    for sp in sorted(spans):
        if scheme is TagScheme.IOBES:
            if sp.start == sp.end:
                tags[sp.start] = f"S-{sp.type}"
            else:
                tags[sp.start] = f"B-{sp.type}"
                for i in range(sp.start + 1, sp.end):
                    tags[i] = f"I-{sp.type}"
                tags[sp.end] = f"E-{sp.type}"
        else:
            for i in range(sp.start, sp.end + 1):
                tags[i] = f"I-{sp.type}"
            if (scheme is TagScheme.IOB1 and prev_end == sp.start - 1
                    and prev_type == sp.type):
                tags[sp.start] = f"B-{sp.type}"
        prev_end, prev_type = sp.end, sp.type
    return tags


def is_valid(tags: Sequence[str], scheme: TagScheme) -> bool:
    """True when ``tags`` is the canonical encoding of its own spans."""
    return list(tags) == tags_from_spans(spans_from_tags(tags), len(tags), scheme)


# ---------------------------------------------------------------- parsing


def read_conll_rows(data: bytes | str, layout: ColumnLayout = ColumnLayout(),
                    *, need_tag: bool = True) -> list[list[list[str]]]:
    """Split CoNLL text into sentences of column lists, checking column counts.

    Sentences containing a ``-DOCSTART-`` line are dropped.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    expected = layout.n_columns
    sentences: list[list[list[str]]] = []
    current: list[list[str]] = []
    drop = False
    for lineno, line in enumerate(text.splitlines(), 1):
        cols = line.split()
        if not cols:
            if current and not drop:
                sentences.append(current)
            current, drop = [], False
            continue
        if cols[0] == DOCSTART:
            drop = True
            continue
        if expected is None:
            expected = len(cols)
        if len(cols) != expected:
            raise CorpusFormatError(
                f"line {lineno}: expected {expected} columns, found {len(cols)}")
        try:
            cols[layout.word]
            if need_tag:
                cols[layout.tag]
        except IndexError:
            raise CorpusFormatError(f"line {lineno}: layout {layout} does not fit") from None
        current.append(cols)
    if current and not drop:
        sentences.append(current)
    return sentences


def parse_conll(data: bytes | str, layout: ColumnLayout = ColumnLayout(), *,
                scheme: TagScheme = TagScheme.IOB1, language: str = "",
                types: Sequence[str] = ENTITY_TYPES) -> Corpus:
    """Parse CoNLL text into a :class:`Corpus` declared to be in ``scheme``.

    Tag sequences that are not canonical for the scheme are repaired by the
    lenient span reading; the number of repaired sentences is kept in
    ``Corpus.repairs``.
    """
    sentences = []
    repairs = 0
    for rows in read_conll_rows(data, layout):
        words = [r[layout.word] for r in rows]
        tags = [r[layout.tag] for r in rows]
        for t in tags:
            check_tag(t, scheme, types)
        if not is_valid(tags, scheme):
            repairs += 1
            tags = tags_from_spans(spans_from_tags(tags), len(tags), scheme)
        sentences.append(Sentence.from_pairs(words, tags, language))
    if repairs:
        log.warning("%s: repaired %d invalid %s tag sequence(s)", language or "corpus",
                    repairs, scheme.value)
    return Corpus(language, scheme, tuple(sentences), repairs)


def write_conll(corpus: Corpus) -> str:
    out = []
    for s in corpus.sentences:
        out.extend(f"{t.surface} {t.tag}" for t in s.tokens)
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------- transforms


def convert_scheme(c: Corpus, target: TagScheme) -> Corpus:
    if c.scheme is TagScheme.IO and target is not TagScheme.IO:
        raise ValueError(f"cannot convert IO to {target.value}: entity boundaries are lost")
    sentences = tuple(
        Sentence.from_pairs(s.words, tags_from_spans(extract_spans(s), len(s), target), s.lang)
        for s in c.sentences)
    return Corpus(c.language, target, sentences)


def merge_shuffle(corpora: Sequence[Corpus], seed: int | np.random.Generator) -> Corpus:
    """Pool the sentences of several corpora and shuffle them with ``seed``."""
    if not corpora:
        raise ValueError("nothing to merge")
    scheme = corpora[0].scheme
    for c in corpora:
        if c.scheme is not scheme:
            raise ValueError(f"scheme mismatch: {scheme.value} vs {c.scheme.value}")
    pooled = [s if s.lang else replace(s, lang=c.language)
              for c in corpora for s in c.sentences]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(len(pooled))
    language = "+".join(c.language for c in corpora)
    return Corpus(language, scheme, tuple(pooled[i] for i in order))


def subsample(c: Corpus, fraction: float, seed: int | np.random.Generator) -> Corpus:
    """Keep ``round(fraction * N)`` sentences, chosen as a seeded permutation prefix.

    Original sentence order is kept, and under one seed a smaller fraction
    always selects a subset of a larger one.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return c
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = len(c.sentences)
    keep = sorted(rng.permutation(n)[: int(round(fraction * n))])
    return Corpus(c.language, c.scheme, tuple(c.sentences[i] for i in keep))


# ---------------------------------------------------------------- scoring


@dataclass
class Scores:
    precision: float
    recall: float
    f1: float
    per_type: dict[str, tuple[float, float, float]]
    counts: dict[str, tuple[int, int, int]]  # type -> (correct, predicted, gold)


def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
    if not predicted and not gold:
        return 100.0, 100.0, 100.0  # nothing to find and nothing found: perfect agreement
    p = 100.0 * correct / predicted if predicted else 0.0
    r = 100.0 * correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def evaluate_f1(gold: Corpus, pred: Corpus) -> Scores:
    """Entity-level precision/recall/F1 in percent; exact span + type match.

    A ratio with a zero denominator counts as 0, except that a prediction with
    no spans against a gold standard with no spans scores 100.
    """
    if gold.scheme is not pred.scheme:
        raise ValueError("gold and predictions use different tag schemes")
    if len(gold.sentences) != len(pred.sentences):
        raise ValueError(f"sentence count mismatch: {len(gold.sentences)} vs {len(pred.sentences)}")
    correct, predicted, gold_n = Counter(), Counter(), Counter()
    for k, (g, p) in enumerate(zip(gold.sentences, pred.sentences)):
        if g.words != p.words:
            raise ValueError(f"sentence {k}: tokens differ between gold and predictions")
        gs = set(extract_spans(g))
        ps = extract_spans(p)
        for sp in gs:
            gold_n[sp.type] += 1
        for sp in ps:
            predicted[sp.type] += 1
            if sp in gs:
                correct[sp.type] += 1
    types = sorted(set(gold_n) | set(predicted))
    counts = {t: (correct[t], predicted[t], gold_n[t]) for t in types}
    per_type = {t: _prf(*counts[t]) for t in types}
    p, r, f = _prf(sum(correct.values()), sum(predicted.values()), sum(gold_n.values()))
    return Scores(p, r, f, per_type, counts)


def format_scores(s: Scores) -> str:
    """conlleval-like text block followed by key=value lines."""
    c, p, g = (sum(v[i] for v in s.counts.values()) for i in range(3))
    lines = [
        f"found: {p} phrases; correct: {c}; gold: {g}",
        f"{'overall':>10}  precision: {s.precision:6.2f}%; recall: {s.recall:6.2f}%; "
        f"FB1: {s.f1:6.2f}",
    ]
    for t, (tp, tr, tf) in s.per_type.items():
        lines.append(f"{t:>10}  precision: {tp:6.2f}%; recall: {tr:6.2f}%; FB1: {tf:6.2f}  "
                     f"{s.counts[t][1]}")
    lines.append(f"scope=overall precision={s.precision:.2f} recall={s.recall:.2f} f1={s.f1:.2f}")
    for t, (tp, tr, tf) in s.per_type.items():
        lines.append(f"scope={t} precision={tp:.2f} recall={tr:.2f} f1={tf:.2f}")
    return "\n".join(lines) + "\n"
