"""Full tagger: char-CNN + embeddings -> BiLSTM -> transition decoder, with cross-lingual sharing."""

from __future__ import annotations

import copy
import logging
import zlib
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Param, Tensor
from .bilstm import BiLstmParams, encode_sentence
from .charcnn import CharVocab, FilterBank
from .corpus import ENTITY_TYPES, Corpus, Sentence, TagScheme
from .decoder import DecoderParams, TagSet, decode, sentence_nll
from .lexicon import Embeddings, LanguageProjection, embed, input_vector, random_embeddings

log = logging.getLogger(__name__)

SHARED = "shared"
CHAR_CACHE_LIMIT = 50_000


def rng_stream(seed: int, stream: str) -> np.random.Generator:
    """Independent generator per named stage (init, shuffle, subsample, ...)."""
    return np.random.default_rng([seed, zlib.crc32(stream.encode())])


@dataclass(frozen=True)
class Hyperparams:
    lstm_size: int = 100
    max_filter_width: int = 4
    filters_per_width: int = 10
    learning_rate: float = 0.05
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    emb_dim: int = 200  # only used when no pre-trained embeddings are given
    clip_norm: float = 5.0


# full hyperparameter search space (LSTM size, max filter width, filters per width, lr)
SEARCH_GRID = {
    "lstm_size": [100, 150, 200, 250, 300],
    "max_filter_width": [4, 5, 6, 7, 8, 9],
    "filters_per_width": [10, 15, 20, 25, 30],
    "learning_rate": [round(0.05 * k, 2) for k in range(1, 11)],
}


@dataclass(frozen=True)
class SharingConfig:
    share_filters: bool = True
    share_decoder: bool = True
    share_lstm: bool = True
    shared_embedding_space: bool = False


class ConfigError(ValueError):
    pass


class Model:
    """Parameter registry plus the forward computation.

    Components that are shared across languages are the *same* objects in
    the per-language dicts, so a gradient from either language lands in one
    place.
    """

    def __init__(self, languages: Sequence[str], scheme: TagScheme, tagset: TagSet,
                 chars: CharVocab, filters: dict[str, FilterBank],
                 embeddings: dict[str, Embeddings], projections: dict[str, LanguageProjection],
                 lstm: BiLstmParams, decoders: dict[str, DecoderParams],
                 hp: Hyperparams, sharing: SharingConfig):
        self.languages = list(languages)
        self.scheme = scheme
        self.tagset = tagset
        self.chars = chars
        self.filters = filters
        self.embeddings = embeddings
        self.projections = projections
        self.lstm = lstm
        self.decoders = decoders
        self.hp = hp
        self.sharing = sharing
        self._char_cache: dict = {}

    def params(self) -> list[Param]:
        """Every Param exactly once, in a stable order."""
        seen: dict[int, Param] = {}
        for lang in self.languages:
            for p in (self.filters[lang].params() + [self.embeddings[lang].table]
                      + self.projections[lang].params()):
                seen.setdefault(id(p), p)
        for p in self.lstm.params():
            seen.setdefault(id(p), p)
        for lang in self.languages:
            for p in self.decoders[lang].params():
                seen.setdefault(id(p), p)
        return list(seen.values())

    def registry(self) -> dict[str, Param]:
        reg = {}
        for p in self.params():
            if p.name in reg:
                raise RuntimeError(f"duplicate parameter name {p.name}")
            reg[p.name] = p
        return reg

    def resolve(self, lang: str) -> str:
        if lang in self.filters:
            return lang
        if len(self.languages) == 1 and lang == "":
            return self.languages[0]
        raise KeyError(f"unknown language {lang!r}; model has {self.languages}")

    # ------------------------------------------------------------ forward

    def encode(self, words: Sequence[str], lang: str) -> list[Tensor]:
        lang = self.resolve(lang)
        cache = self._char_cache if len(self._char_cache) < CHAR_CACHE_LIMIT else None
        xs = [input_vector(w, self.embeddings[lang], self.projections[lang], self.filters[lang],
                           self.chars, cache) for w in words]
        return encode_sentence(self.lstm, xs)

    def embed(self, word: str, lang: str) -> Tensor:
        lang = self.resolve(lang)
        return embed(word, self.embeddings[lang], self.projections[lang])

    def sentence_loss(self, s: Sentence) -> Tensor:
        lang = self.resolve(s.lang)
        g = self.encode(s.words, lang)
        return sentence_nll(self.decoders[lang], g, self.tagset.encode(s.tags))

    def predict(self, words: Sequence[str], lang: str, method: str = "viterbi") -> list[str]:
        lang = self.resolve(lang)
        if not words:
            return []
        g = self.encode(words, lang)
        ids, _ = decode(self.decoders[lang], g, method)
        return self.tagset.decode(ids)

    def tag_corpus(self, c: Corpus) -> Corpus:
        out = tuple(Sentence.from_pairs(s.words, self.predict(s.words, s.lang or c.language), s.lang)
                    for s in c.sentences)
        return Corpus(c.language, c.scheme, out)


def _owner(shared: bool, lang: str) -> str:
    return SHARED if shared else lang


def build_model(hp: Hyperparams, corpora: Sequence[Corpus],
                embeddings: Mapping[str, Embeddings | None] | None = None,
                sharing: SharingConfig = SharingConfig()) -> Model:
    """Create fresh parameters for one or two training corpora.

    Empty corpora are ignored, so a joint run with an empty second language
    is exactly the monolingual model.
    """
    embeddings = dict(embeddings or {})
    active = [c for c in corpora if len(c.sentences)]
    for c in corpora:
        if not len(c.sentences):
            log.info("ignoring empty corpus for language %r", c.language)
    if not active:
        raise ConfigError("no training data")
    if len(active) > 2:
        raise ConfigError("at most two languages per model")
    langs = [c.language for c in active]
    if len(set(langs)) != len(langs):
        raise ConfigError(f"duplicate language ids {langs}")
    scheme = active[0].scheme
    for c in active:
        if c.scheme is not scheme:
            raise ConfigError(f"tag scheme mismatch: {scheme.value} vs {c.scheme.value}")
    tagset = TagSet(scheme.tags(ENTITY_TYPES))
    for c in active:
        for s in c.sentences:
            tagset.encode(s.tags)

    joint = len(active) == 2
    if joint and not sharing.share_lstm:
        log.warning("LSTM parameters are always shared in joint runs; forcing share_lstm")
        sharing = SharingConfig(sharing.share_filters, sharing.share_decoder, True,
                                sharing.shared_embedding_space)
    shared_space = joint and sharing.shared_embedding_space
    if shared_space:
        given = {id(e): e for lang in langs if (e := embeddings.get(lang)) is not None}
        if len(given) > 1:
            raise ConfigError("a shared embedding space needs one bilingual embedding file, "
                              "got per-language files")

    rng = rng_stream(hp.seed, "init")
    chars = CharVocab.from_words(w for c in active for s in c.sentences for w in s.words)
    counts = [hp.filters_per_width] * hp.max_filter_width

    filters: dict[str, FilterBank] = {}
    for lang in langs:
        owner = _owner(joint and sharing.share_filters, lang)
        if owner == SHARED and SHARED in filters:
            filters[lang] = filters[SHARED]
            continue
        bank = FilterBank.create(f"cnn.{owner}", len(chars), counts, rng)
        filters[lang] = bank
        if owner == SHARED:
            filters[SHARED] = bank
    filters.pop(SHARED, None)

    tables: dict[str, Embeddings] = {}
    for c in active:
        lang = c.language
        words = [w for s in c.sentences for w in s.words]
        if shared_space and SHARED in tables:
            tables[SHARED].extend(words, rng)
            tables[lang] = tables[SHARED]
            continue
        owner = SHARED if shared_space else lang
        src = embeddings.get(lang)
        if shared_space and src is None:
            src = next((e for e in embeddings.values() if e is not None), None)
        if src is None:
            emb = random_embeddings(f"emb.{owner}.table", words, hp.emb_dim, rng)
        else:
            emb = copy.deepcopy(src)
            emb.table.name = f"emb.{owner}.table"
            emb.table.sparse = True
            emb.extend(words, rng)
        tables[lang] = emb
        if shared_space:
            tables[SHARED] = emb
    tables.pop(SHARED, None)
    dims = {e.dim for e in tables.values()}
    if len(dims) != 1:
        raise ConfigError(f"embedding dimensions differ across languages: {sorted(dims)}")
    d_emb = dims.pop()

    learned = joint and not shared_space
    projections = {lang: (LanguageProjection.learned(f"proj.{lang}", d_emb) if learned
                          else LanguageProjection()) for lang in langs}

    d_in = d_emb + sum(counts)
    lstm = BiLstmParams.create("lstm", d_in, hp.lstm_size, rng)

    decoders: dict[str, DecoderParams] = {}
    shared_dec = None
    for lang in langs:
        if joint and sharing.share_decoder:
            if shared_dec is None:
                shared_dec = DecoderParams.create("dec.shared", len(tagset), 2 * hp.lstm_size, rng)
            decoders[lang] = shared_dec
        else:
            decoders[lang] = DecoderParams.create(f"dec.{lang}", len(tagset), 2 * hp.lstm_size, rng)

    return Model(langs, scheme, tagset, chars, filters, tables, projections, lstm, decoders,
                 hp, sharing)


def describe(model: Model) -> dict:
    return {"languages": model.languages, "scheme": model.scheme.value,
            "sharing": asdict(model.sharing), "hyperparams": asdict(model.hp),
            "n_params": int(sum(p.value.size for p in model.params()))}
