"""Command line: convert, train, tag, eval, sweep, grid.

Runs are described by an INI file (sections ``[run]``, ``[lang.<id>]``,
``[sharing]``, ``[hyperparams]``, ``[grid]``); ``--set section.key=value``
overrides any entry. Exit codes: 0 ok, 1 usage/config, 2 data format,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from . import checkpoint
from .corpus import (LAYOUTS, ColumnLayout, Corpus, CorpusFormatError, TagScheme, convert_scheme,
                     evaluate_f1, format_scores, parse_conll, read_conll_rows, subsample)
from .lexicon import EmbeddingFormatError, Embeddings, load_embeddings
from .model import ConfigError, Hyperparams, SharingConfig, rng_stream
from .training import DivergenceError, grid_search, run_training

log = logging.getLogger("xner")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- run config


@dataclass
class LangData:
    lang: str
    train: Path
    dev: Path | None = None
    test: Path | None = None
    embeddings: Path | None = None
    layout: ColumnLayout = ColumnLayout()
    input_scheme: TagScheme = TagScheme.IOB1


@dataclass
class RunConfig:
    command: str
    seed: int
    scheme: TagScheme
    langs: list[LangData]
    sharing: SharingConfig
    hp: Hyperparams
    out: Path
    shared_embeddings: Path | None = None
    target: str | None = None
    grid: dict[str, list] = field(default_factory=dict)

    def paths(self) -> list[Path]:
        ps = [self.shared_embeddings] if self.shared_embeddings else []
        for d in self.langs:
            ps += [p for p in (d.train, d.dev, d.test, d.embeddings) if p is not None]
        return ps


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def _coerce(cls, section: configparser.SectionProxy | dict, base):
    """Build a dataclass from a config section, starting at ``base``."""
    types = {f.name: f.type for f in fields(cls)}
    changes = {}
    for key, raw in section.items():
        if key not in types:
            raise UsageError(f"unknown {cls.__name__} key {key!r}")
        t = types[key] if isinstance(types[key], str) else types[key].__name__
        try:
            changes[key] = _bool(raw) if t == "bool" else int(raw) if t == "int" else float(raw)
        except ValueError:
            raise UsageError(f"bad value for {key}: {raw!r}") from None
    return replace(base, **changes)


def _layout(name: str) -> ColumnLayout:
    if name in LAYOUTS:
        return LAYOUTS[name]
    try:
        word, tag, n = (int(x) for x in name.split(","))
    except ValueError:
        raise UsageError(f"unknown column layout {name!r}") from None
    return ColumnLayout(word, tag, n)


def _scheme(name: str) -> TagScheme:
    try:
        return TagScheme(name.upper())
    except ValueError:
        raise UsageError(f"unknown tag scheme {name!r}") from None


def load_config(path: Path | None, overrides: Sequence[str], command: str,
                seed: int | None = None, out: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    if path is not None:
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.rpartition(".")
        if not sep or not dot:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value)
    run = cp["run"] if cp.has_section("run") else {}
    if seed is None:
        if "seed" not in run:
            raise UsageError("a seed is required ([run] seed or --seed)")
        seed = int(run["seed"])
    langs = []
    for sec in cp.sections():
        if not sec.startswith("lang."):
            continue
        s = cp[sec]
        if "train" not in s:
            raise UsageError(f"[{sec}] needs a train path")
        opt = lambda k: Path(s[k]) if s.get(k) else None  # noqa: E731
        langs.append(LangData(sec[5:], Path(s["train"]), opt("dev"), opt("test"), opt("embeddings"),
                              _layout(s.get("layout", "auto")),
                              _scheme(s.get("input_scheme", "IOB1"))))
    if not langs:
        raise UsageError("no [lang.<id>] sections configured")
    if len(langs) > 2:
        raise UsageError("at most two languages per run")
    sharing = _coerce(SharingConfig, cp["sharing"] if cp.has_section("sharing") else {},
                      SharingConfig())
    hp = _coerce(Hyperparams, cp["hyperparams"] if cp.has_section("hyperparams") else {},
                 Hyperparams())
    hp = replace(hp, seed=seed)
    grid = {}
    if cp.has_section("grid"):
        for key, raw in cp["grid"].items():
            vals = [v.strip() for v in raw.split(",") if v.strip()]
            grid[key] = [_coerce(Hyperparams, {key: v}, hp).__getattribute__(key) for v in vals]
    shared = Path(run["embeddings"]) if run.get("embeddings") else None
    target = run.get("target") or None
    if target is not None and target not in {d.lang for d in langs}:
        raise UsageError(f"target language {target!r} is not configured")
    return RunConfig(command, seed, _scheme(run.get("scheme", "IOBES")), langs, sharing, hp,
                     Path(out or run.get("out", "run")), shared, target, grid)


def check_paths(cfg: RunConfig) -> None:
    missing = [str(p) for p in cfg.paths() if not p.is_file()]
    if missing:
        raise UsageError("missing input file(s): " + ", ".join(missing))


# ---------------------------------------------------------------- data loading


def read_corpus(path: Path, layout: ColumnLayout, source: TagScheme, target: TagScheme,
                lang: str) -> Corpus:
    c = parse_conll(path.read_bytes(), layout, scheme=source, language=lang)
    return c if source is target else convert_scheme(c, target)


@dataclass
class Data:
    train: dict[str, Corpus]
    dev: dict[str, Corpus]
    test: dict[str, Corpus]
    embeddings: dict[str, Embeddings | None]


def load_data(cfg: RunConfig) -> Data:
    train, dev, test, embs = {}, {}, {}, {}
    shared = None
    if cfg.shared_embeddings:
        shared = load_embeddings(cfg.shared_embeddings.read_bytes(),
                                 rng=rng_stream(cfg.seed, "unk.shared"))
    for d in cfg.langs:
        read = lambda p: read_corpus(p, d.layout, d.input_scheme, cfg.scheme, d.lang)  # noqa: E731
        train[d.lang] = read(d.train)
        dev[d.lang] = read(d.dev) if d.dev else Corpus(d.lang, cfg.scheme, ())
        if d.test:
            test[d.lang] = read(d.test)
        if d.embeddings:
            embs[d.lang] = load_embeddings(d.embeddings.read_bytes(),
                                           rng=rng_stream(cfg.seed, f"unk.{d.lang}"))
        else:
            embs[d.lang] = shared
    return Data(train, dev, test, embs)


# ---------------------------------------------------------------- commands


def cmd_convert(args) -> int:
    src, dst = _scheme(args.from_scheme), _scheme(args.to_scheme)
    if src is TagScheme.IO and dst is not TagScheme.IO:
        raise UsageError(f"cannot convert IO to {dst.value}: entity boundaries are not recoverable")
    layout = _layout(args.layout)
    text = Path(args.input).read_text(encoding="utf-8")
    rows = read_conll_rows(text, layout)
    corpus = parse_conll(text, layout, scheme=src)
    converted = convert_scheme(corpus, dst)
    out_lines = []
    for sent_rows, sent in zip(rows, converted.sentences):
        for cols, tag in zip(sent_rows, sent.tags):
            cols = list(cols)
            cols[layout.tag] = tag
            out_lines.append(" ".join(cols))
        out_lines.append("")
    Path(args.output).write_text("\n".join(out_lines) + ("\n" if out_lines else ""),
                                 encoding="utf-8")
    return EXIT_OK


def _write_report(out: Path, report, model=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if model is not None:
        checkpoint.save_checkpoint(model, out / "model.ckpt")
    (out / "report.txt").write_text(report.text(), encoding="utf-8")
    (out / "report.kv").write_text("\n".join(report.records()) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    cfg = load_config(_opt_path(args.config), args.set, "train", args.seed, args.out)
    check_paths(cfg)
    data = load_data(cfg)
    model, report = run_training(cfg.hp, list(data.train.values()), list(data.dev.values()),
                                 data.embeddings, cfg.sharing, data.test)
    _write_report(cfg.out, report, model)
    print("\n".join(report.records()))
    return EXIT_OK


def cmd_tag(args) -> int:
    model = checkpoint.load_checkpoint(args.checkpoint)
    lang = args.lang
    if lang is None:
        if len(model.languages) != 1:
            raise UsageError(f"checkpoint holds {model.languages}; pass --lang")
        lang = model.languages[0]
    if lang not in model.languages:
        raise UsageError(f"checkpoint has no language {lang!r} (has {model.languages})")
    layout = _layout(args.layout)
    text = Path(args.input).read_text(encoding="utf-8")
    out_lines: list[str] = []
    block: list[list[str]] = []

    def flush():
        if not block:
            return
        if block[0][0] == "-DOCSTART-":
            out_lines.extend(" ".join(cols + ["O"]) for cols in block)
        else:
            tags = model.predict([cols[layout.word] for cols in block], lang)
            out_lines.extend(" ".join(cols + [t]) for cols, t in zip(block, tags))
        out_lines.append("")
        block.clear()

    for line in text.splitlines():
        cols = line.split()
        if not cols:
            flush()
        elif cols[0] == "-DOCSTART-" and block:
            flush()
            block.append(cols)
        else:
            if block and block[0][0] == "-DOCSTART-":
                flush()
            block.append(cols)
    flush()
    Path(args.output).write_text("\n".join(out_lines) + ("\n" if out_lines else ""),
                                 encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    gs, ps = _scheme(args.scheme), _scheme(args.pred_scheme or args.scheme)
    gold = parse_conll(Path(args.gold).read_bytes(), _layout(args.gold_layout), scheme=gs)
    pred = parse_conll(Path(args.pred).read_bytes(), _layout(args.pred_layout), scheme=ps)
    if ps is not gs:
        if ps is TagScheme.IO and gs is not TagScheme.IO:
            raise UsageError("cannot score IO predictions against a richer gold scheme")
        pred = convert_scheme(pred, gs)
    sys.stdout.write(format_scores(evaluate_f1(gold, pred)))
    return EXIT_OK


def _target(cfg: RunConfig) -> tuple[str, str]:
    if len(cfg.langs) != 2:
        raise UsageError("sweep needs a joint (two-language) config")
    names = [d.lang for d in cfg.langs]
    target = cfg.target or names[1]
    source = names[0] if target == names[1] else names[1]
    return source, target


def cmd_sweep(args) -> int:
    cfg = load_config(_opt_path(args.config), args.set, "sweep", args.seed, args.out)
    check_paths(cfg)
    try:
        fractions = [float(f) for f in args.fractions.split(",")]
    except ValueError:
        raise UsageError(f"bad fraction list {args.fractions!r}") from None
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise UsageError(f"fraction {f} outside (0, 1]")
    source, target = _target(cfg)
    data = load_data(cfg)
    if target not in data.test:
        raise UsageError(f"sweep needs a test file for target language {target!r}")
    test = {target: data.test[target]}
    lines = []
    for f in fractions:
        sub = subsample(data.train[target], f, rng_stream(cfg.seed, "subsample"))
        _, mono = run_training(cfg.hp, [sub], [data.dev[target]],
                               {target: data.embeddings[target]}, cfg.sharing, test)
        _, joint = run_training(cfg.hp, [data.train[source], sub],
                                [data.dev[source], data.dev[target]],
                                data.embeddings, cfg.sharing, test)
        for mode, rep in (("mono", mono), ("joint", joint)):
            lines.append(f"fraction={f!r} mode={mode} target={target} sentences={len(sub)} "
                         f"best_epoch={rep.best_epoch} test_f1={rep.test_f1[target]!r}")
        print("\n".join(lines[-2:]), flush=True)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "sweep.kv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = load_config(_opt_path(args.config), args.set, "grid", args.seed, args.out)
    check_paths(cfg)
    grid = dict(cfg.grid)
    for item in args.grid or ():
        key, _, raw = item.partition("=")
        grid[key] = [_coerce(Hyperparams, {key: v}, cfg.hp).__getattribute__(key)
                     for v in raw.split(",")]
    data = load_data(cfg)
    best, points = grid_search(grid, list(data.train.values()), list(data.dev.values()),
                               base=cfg.hp, embeddings=data.embeddings, sharing=cfg.sharing)
    lines = []
    keys = list(grid)
    for k, pt in enumerate(points):
        desc = " ".join(f"{key}={getattr(pt.hyperparams, key)!r}" for key in keys)
        lines.append(f"point={k} {desc} status={pt.report.status} "
                     f"best_dev_f1={pt.report.best_dev_f1!r}".replace("  ", " "))
    lines.append("best " + " ".join(f"{key}={getattr(best, key)!r}" for key in keys))
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "grid.kv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return EXIT_OK


def _opt_path(p: str | None) -> Path | None:
    return Path(p) if p else None


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="xner", description="Cross-lingual char-CNN/BiLSTM NER tagger")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convert", help="convert a CoNLL file between tag schemes")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--from", dest="from_scheme", default="IOB1")
    c.add_argument("--to", dest="to_scheme", default="IOBES")
    c.add_argument("--layout", default="auto")
    c.set_defaults(func=cmd_convert)

    def run_args(sp):
        sp.add_argument("--config")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    t = sub.add_parser("train", help="train a monolingual or joint model")
    run_args(t)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("tag", help="append predicted tags to a CoNLL file")
    g.add_argument("--checkpoint", required=True)
    g.add_argument("--lang")
    g.add_argument("--layout", default="auto")
    g.add_argument("input")
    g.add_argument("output")
    g.set_defaults(func=cmd_tag)

    e = sub.add_parser("eval", help="entity-level P/R/F1 of predictions against gold")
    e.add_argument("gold")
    e.add_argument("pred")
    e.add_argument("--scheme", default="IOBES")
    e.add_argument("--pred-scheme")
    e.add_argument("--gold-layout", default="auto")
    e.add_argument("--pred-layout", default="auto")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="training-fraction sweep: monolingual vs joint")
    run_args(s)
    s.add_argument("--fractions", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    s.set_defaults(func=cmd_sweep)

    gr = sub.add_parser("grid", help="hyperparameter grid search on dev F1")
    run_args(gr)
    gr.add_argument("--grid", action="append", metavar="KEY=V1,V2,...")
    gr.set_defaults(func=cmd_grid)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"xner: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusFormatError, EmbeddingFormatError, checkpoint.CheckpointError,
            UnicodeDecodeError) as e:
        print(f"xner: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, FloatingPointError) as e:
        print(f"xner: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"xner: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
