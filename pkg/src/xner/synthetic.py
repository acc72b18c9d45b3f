"""Synthetic two-language NER data with shared orthographic entity cues.

Each toy language has its own function words, verbs and name stems, but
entity names in both carry the same surface signals: surnames end in
``son``, places in ``ia``, organisations in ``tex``, and nationality-style
adjectives in ``ese``; all are capitalised. Lower-case decoys with the same
endings (``reason``, ``mania``) and capitalised sentence-initial words keep
the cues from being trivially separable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Sentence, TagScheme, tags_from_spans, EntitySpan

SUFFIX = {"PER": "son", "LOC": "ia", "ORG": "tex", "MISC": "ese"}


@dataclass(frozen=True)
class ToyLanguage:
    name: str
    onsets: tuple[str, ...]
    vowels: tuple[str, ...]
    fillers: tuple[str, ...]
    verbs: tuple[str, ...]
    cue_words: dict  # entity type -> context words that tend to precede it
    decoys: tuple[str, ...]


LANG_A = ToyLanguage(
    name="aa",
    onsets=("b", "d", "g", "k", "l", "m", "n", "r", "t", "w"),
    vowels=("a", "e", "i", "o", "u"),
    fillers=("the", "a", "of", "and", "to", "was", "with", "for", "on", "at", "by", "this"),
    verbs=("met", "said", "visited", "joined", "left", "saw", "praised", "called"),
    cue_words={"PER": ("mr", "coach", "minister"), "LOC": ("in", "from", "near"),
               "ORG": ("firm", "club", "group"), "MISC": ("the",)},
    decoys=("reason", "season", "mania", "media", "latex", "cortex", "obese", "geese"),
)

LANG_B = ToyLanguage(
    name="bb",
    onsets=("c", "f", "h", "j", "p", "s", "v", "z", "ch", "qu"),
    vowels=("a", "e", "i", "o", "y"),
    fillers=("el", "la", "de", "y", "que", "con", "por", "un", "una", "es", "del", "se"),
    verbs=("vio", "dijo", "visito", "llamo", "dejo", "elogio", "unio", "conocio"),
    cue_words={"PER": ("sr", "don", "jefe"), "LOC": ("en", "desde", "cerca"),
               "ORG": ("empresa", "club", "grupo"), "MISC": ("los",)},
    decoys=("prison", "bison", "fobia", "magia", "vortex", "apex", "these", "chinese"),
)


def _stem(lang: ToyLanguage, rng: np.random.Generator) -> str:
    n = int(rng.integers(1, 3))
    return "".join(str(rng.choice(lang.onsets)) + str(rng.choice(lang.vowels)) for _ in range(n))


def _name(lang: ToyLanguage, typ: str, rng: np.random.Generator) -> list[str]:
    head = _stem(lang, rng).capitalize() + SUFFIX[typ]
    if typ in ("PER", "ORG") and rng.random() < 0.4:
        # two-token names: a bare capitalised stem before the cued word
        return [_stem(lang, rng).capitalize(), head]
    return [head]


def sentence(lang: ToyLanguage, rng: np.random.Generator,
             scheme: TagScheme = TagScheme.IOBES) -> Sentence:
    words: list[str] = []
    spans: list[EntitySpan] = []
    n_entities = int(rng.integers(1, 4))
    for k in range(n_entities):
        for _ in range(int(rng.integers(1, 3))):
            pool = lang.decoys if rng.random() < 0.2 else lang.fillers + lang.verbs
            words.append(str(rng.choice(pool)))
        typ = str(rng.choice(list(SUFFIX)))
        if rng.random() < 0.6:
            words.append(str(rng.choice(lang.cue_words[typ])))
        name = _name(lang, typ, rng)
        spans.append(EntitySpan(len(words), len(words) + len(name) - 1, typ))
        words.extend(name)
    words.append(str(rng.choice(lang.verbs)))
    words.append(".")
    words[0] = words[0][0].upper() + words[0][1:]
    return Sentence.from_pairs(words, tags_from_spans(spans, len(words), scheme), lang.name)


def corpus(lang: ToyLanguage, n: int, seed: int,
           scheme: TagScheme = TagScheme.IOBES) -> Corpus:
    rng = np.random.default_rng([seed, sum(map(ord, lang.name))])
    return Corpus(lang.name, scheme, tuple(sentence(lang, rng, scheme) for _ in range(n)))
