"""Checkpoint container.

Layout::

    b"XNERCKPT"  uint32 version  uint64 header_len  header (JSON, UTF-8)  payload

The header holds config, vocabularies, the language -> component map and a
``(name, shape, offset)`` index into the payload of little-endian float64
values. Shared components appear once and are referenced by name from each
language, which is how aliasing survives a round trip.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .autodiff import Param
from .bilstm import BiLstmParams, LstmCellParams
from .charcnn import CharVocab, FilterBank
from .corpus import TagScheme
from .decoder import DecoderParams, TagSet
from .lexicon import Embeddings, LanguageProjection, WordVocab
from .model import Hyperparams, Model, SharingConfig

MAGIC = b"XNERCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def _bank_prefix(bank: FilterBank) -> str:
    return bank.weights[0].name.rsplit(".", 2)[0]


def to_bytes(model: Model) -> bytes:
    params = sorted(model.params(), key=lambda p: p.name)
    index, chunks, offset = [], [], 0
    for p in params:
        raw = np.ascontiguousarray(p.value, dtype="<f8").tobytes()
        index.append({"name": p.name, "shape": list(p.value.shape), "offset": offset,
                      "sparse": p.sparse})
        chunks.append(raw)
        offset += len(raw)
    tables = {}
    components = {}
    for lang in model.languages:
        emb = model.embeddings[lang]
        tables[emb.table.name] = emb.vocab.words
        proj = model.projections[lang]
        components[lang] = {
            "filters": _bank_prefix(model.filters[lang]),
            "filter_counts": model.filters[lang].counts,
            "embeddings": emb.table.name,
            "projection": proj.weight.name.rsplit(".", 1)[0] if proj.weight is not None else None,
            "decoder": model.decoders[lang].W.name.rsplit(".", 1)[0],
        }
    header = {
        "format_version": VERSION,
        "config": {"hyperparams": asdict(model.hp), "sharing": asdict(model.sharing),
                   "scheme": model.scheme.value},
        "languages": model.languages,
        "tags": model.tagset.labels,
        "chars": model.chars.chars,
        "vocabs": tables,
        "components": components,
        "params": index,
        "payload_bytes": offset,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(blob)) + blob + b"".join(chunks)


def from_bytes(data: bytes) -> Model:
    if len(data) < _PREFIX.size:
        raise CheckpointError("truncated checkpoint (no header)")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if version != VERSION:
        raise CheckpointError(f"checkpoint format version {version}, expected {VERSION}")
    start = _PREFIX.size
    if len(data) < start + hlen:
        raise CheckpointError("truncated checkpoint (header)")
    header = json.loads(data[start:start + hlen].decode("utf-8"))
    payload = data[start + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise CheckpointError(f"truncated checkpoint: payload has {len(payload)} bytes, "
                              f"expected {header['payload_bytes']}")
    params: dict[str, Param] = {}
    for entry in header["params"]:
        n = int(np.prod(entry["shape"])) * 8
        arr = np.frombuffer(payload, dtype="<f8", count=n // 8, offset=entry["offset"])
        value = arr.astype(np.float64).reshape(entry["shape"])
        params[entry["name"]] = Param(entry["name"], value, sparse=entry["sparse"])

    cfg = header["config"]
    hp = Hyperparams(**cfg["hyperparams"])
    sharing = SharingConfig(**cfg["sharing"])
    chars = CharVocab.from_chars(header["chars"])
    filters, embeddings, projections, decoders = {}, {}, {}, {}
    banks: dict[str, FilterBank] = {}
    tables: dict[str, Embeddings] = {}
    decs: dict[str, DecoderParams] = {}
    for lang in header["languages"]:
        comp = header["components"][lang]
        pre = comp["filters"]
        if pre not in banks:
            widths = range(1, len(comp["filter_counts"]) + 1)
            banks[pre] = FilterBank([params[f"{pre}.w{w}.weight"] for w in widths],
                                    [params[f"{pre}.w{w}.bias"] for w in widths], len(chars))
        filters[lang] = banks[pre]
        tname = comp["embeddings"]
        if tname not in tables:
            vocab = WordVocab({w: i for i, w in enumerate(header["vocabs"][tname])})
            tables[tname] = Embeddings(vocab, params[tname])
        embeddings[lang] = tables[tname]
        pp = comp["projection"]
        projections[lang] = (LanguageProjection(params[f"{pp}.weight"], params[f"{pp}.bias"])
                             if pp else LanguageProjection())
        dp = comp["decoder"]
        if dp not in decs:
            decs[dp] = DecoderParams(params[f"{dp}.W"], params[f"{dp}.A"])
        decoders[lang] = decs[dp]
    lstm = BiLstmParams(
        *(LstmCellParams(params[f"lstm.{d}.W"], params[f"lstm.{d}.U"], params[f"lstm.{d}.b"])
          for d in ("fwd", "bwd")))
    return Model(header["languages"], TagScheme(cfg["scheme"]), TagSet(header["tags"]), chars,
                 filters, embeddings, projections, lstm, decoders, hp, sharing)


def save_checkpoint(model: Model, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_checkpoint(path: str | Path) -> Model:
    return from_bytes(Path(path).read_bytes())
