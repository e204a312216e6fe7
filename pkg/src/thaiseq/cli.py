"""Command-line entry point: ``thaiseq <command> ...``.

Every command takes an optional ``--config`` JSON file.  Unknown config
keys are rejected; flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from thaiseq import crf as crf_mod
from thaiseq import features, linear, metrics, subword
from thaiseq.errors import ConfigError, FitError, FormatError, ThaiSeqError
from thaiseq.io import (atomic_write_text, corpus_rows, load_container, read_conll, read_corpus,
                        save_container, write_jsonl)
from thaiseq.segment import Lexicon, build_lexicon, load_lexicon
from thaiseq.textproc import CleanConfig, Corpus, clean_corpus, clean_text, dedup, filter_by_length

logger = logging.getLogger("thaiseq")

DEFAULT_SEED = 2020


# --- run configs ---------------------------------------------------------------------------

@dataclass
class PreprocessConfig:
    input: str = ""
    output: str = ""
    lexicon: str = ""
    mode: str = "lm"
    rep_run_threshold: int = 3
    min_words: int = 5
    max_words: int = 300


@dataclass
class NbsvmConfig:
    train: str = ""
    valid: str = ""
    lexicon: str = ""
    model: str = ""
    grid_out: str = ""
    dataset: str = ""
    multilabel: bool = False
    label_sep: str = ","
    penalties: list = field(default_factory=lambda: ["l1", "l2"])
    Cs: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    min_df: int = 3
    max_df: float = 0.9
    alpha: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6


@dataclass
class CrfRunConfig:
    train: str = ""
    valid: str = ""
    model: str = ""
    grid_out: str = ""
    scheme: str = ""
    c1: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    c2: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    max_iter: int = 500
    sample: int = 0
    seed: int = DEFAULT_SEED
    window: int = 3


@dataclass
class SubwordConfig:
    input: str = ""
    model: str = ""
    output: str = ""
    vocab_size: int = 8000
    seed_multiplier: float = 4.0
    prune_fraction: float = 0.25
    max_piece_len: int = 8


@dataclass
class PredictConfig:
    model: str = ""
    input: str = ""
    output: str = ""
    report: str = ""
    json: str = ""


def load_run_config(cls, path: str | None, overrides: dict):
    """Build ``cls`` from defaults, then the JSON file, then explicit flags."""
    known = {f.name for f in fields(cls)}
    values = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        values.update(raw)
    values.update({k: v for k, v in overrides.items() if v is not None and k in known})
    return cls(**values)


def _require(cfg, *names):
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _floats(text: str | None):
    if text is None:
        return None
    return [float(x) for x in text.split(",") if x.strip()]


def _strs(text: str | None):
    if text is None:
        return None
    return [x.strip() for x in text.split(",") if x.strip()]


def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


# --- preprocess ----------------------------------------------------------------------------

def cmd_preprocess(cfg: PreprocessConfig, out=None) -> dict:
    out = out or sys.stdout
    _require(cfg, "input", "output", "lexicon")
    lex = load_lexicon(cfg.lexicon)
    clean_cfg = CleanConfig(mode=cfg.mode, rep_run_threshold=cfg.rep_run_threshold)
    corpus = read_corpus(cfg.input)
    counts = {"read": len(corpus)}
    cleaned = clean_corpus(corpus, clean_cfg, lex)
    cleaned = Corpus(tuple(r for r in cleaned if r.text))
    counts["cleaned"] = len(cleaned)
    unique = dedup(cleaned)
    counts["deduplicated"] = len(unique)
    markers = (clean_cfg.space_marker,) if cfg.mode == "lm" else clean_cfg.markers
    kept = filter_by_length(unique, cfg.min_words, cfg.max_words, lex, markers)
    counts["length_filtered"] = len(kept)
    write_jsonl(cfg.output, corpus_rows(kept))
    for stage, n in counts.items():
        print(f"{stage}\t{n}", file=out)
    return counts


# --- NBSVM ---------------------------------------------------------------------------------

def _label_targets(corpus: Corpus, classes, multilabel: bool, path):
    if multilabel:
        index = {c: k for k, c in enumerate(classes)}
        Y = np.zeros((len(corpus), len(classes)))
        for i, r in enumerate(corpus):
            for lab in r.labels or []:
                if lab in index:
                    Y[i, index[lab]] = 1.0
        return Y
    ys = []
    for r in corpus:
        if not r.labels:
            raise FormatError(f"record {r.id!r} has no label", path)
        ys.append(r.labels[0])
    return ys


def _nbsvm_tokens(corpus: Corpus, clean_cfg: CleanConfig, lex: Lexicon):
    return [clean_text(r.text, clean_cfg, lex) for r in corpus]


def cmd_train_nbsvm(cfg: NbsvmConfig, out=None) -> list[linear.GridCell]:
    out = out or sys.stdout
    _require(cfg, "train", "valid", "lexicon", "model", "grid_out")
    lex = load_lexicon(cfg.lexicon)
    clean_cfg = CleanConfig(mode="classifier")
    train = read_corpus(cfg.train, cfg.label_sep if cfg.multilabel else None)
    valid = read_corpus(cfg.valid, cfg.label_sep if cfg.multilabel else None)
    if len(train) == 0:
        raise FitError(f"{cfg.train}: no training records")

    if cfg.multilabel:
        classes = sorted({lab for r in train for lab in (r.labels or [])})
    else:
        classes = sorted({r.labels[0] for r in train if r.labels})
    y_tr = _label_targets(train, classes, cfg.multilabel, cfg.train)
    y_va = _label_targets(valid, classes, cfg.multilabel, cfg.valid)
    if not cfg.multilabel and len(set(y_tr)) < 2:
        raise FitError(f"{cfg.train}: training data contains a single class")

    vec = features.fit_vectorizer(_nbsvm_tokens(train, clean_cfg, lex), cfg.min_df, cfg.max_df)
    X_tr = features.transform(vec, _nbsvm_tokens(train, clean_cfg, lex))
    X_va = features.transform(vec, _nbsvm_tokens(valid, clean_cfg, lex))
    base = linear.ClassifierConfig(max_iter=cfg.max_iter, tol=cfg.tol)
    cells = linear.grid_search((X_tr, y_tr), (X_va, y_va), cfg.penalties, cfg.Cs,
                               multilabel=cfg.multilabel, alpha=cfg.alpha, classes=classes, base=base)

    dataset = cfg.dataset or Path(cfg.train).stem
    lines = ["dataset\tpenalty\tC\tf1"]
    lines += [f"{dataset}\t{c.config.penalty}\t{_fmt(c.config.C)}\t{_fmt(c.score)}" for c in cells]
    atomic_write_text(cfg.grid_out, "\n".join(lines) + "\n")

    best = cells[0]
    if best.failed:
        raise FitError(f"every grid cell failed; first error: {best.error}")
    thresholds = None
    if cfg.multilabel:
        proba = linear.predict_proba(best.model, X_va)
        thresholds = linear.search_thresholds(proba, y_va)
        if thresholds.flagged:
            logger.warning("labels without validation positives kept threshold 0.5: %s",
                           [classes[k] for k in thresholds.flagged])
    payload = {
        "clean": asdict(clean_cfg),
        "lexicon": list(lex),
        "vectorizer": vec.to_dict(),
        "model": best.model.to_dict(),
        "config": {"penalty": best.config.penalty, "C": best.config.C, "alpha": cfg.alpha},
        "thresholds": thresholds.to_dict() if thresholds is not None else None,
    }
    save_container(cfg.model, "nbsvm", payload)
    print(f"best\t{best.config.penalty}\t{_fmt(best.config.C)}\t{_fmt(best.score)}", file=out)
    return cells


def _load_nbsvm(doc):
    p = doc["payload"]
    lex = build_lexicon(p["lexicon"])
    clean_cfg = CleanConfig(**p["clean"])
    vec = features.Vectorizer.from_dict(p["vectorizer"])
    model = linear.LinearModel.from_dict(p["model"])
    thr = linear.ThresholdSet.from_dict(p["thresholds"]) if p.get("thresholds") else None
    return lex, clean_cfg, vec, model, thr


# --- CRF -----------------------------------------------------------------------------------

def _resolve_scheme(requested: str, seqs) -> str:
    if requested:
        if requested not in ("iob", "iobe", "token"):
            raise ConfigError(f"unknown scheme {requested!r}")
        return requested
    try:
        return metrics.detect_scheme(s.tags for s in seqs)
    except ThaiSeqError as exc:
        raise ConfigError(f"{exc}; pass --scheme explicitly") from None


def sample_sequences(seqs, n: int, seed: int):
    """Seeded sample without replacement, keeping file order."""
    if n <= 0 or n >= len(seqs):
        return list(seqs)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(seqs), size=n, replace=False))
    return [seqs[i] for i in idx]


def score_tags(gold, pred, scheme: str) -> metrics.Report:
    if scheme == "token":
        flat_g = [t for s in gold for t in s]
        flat_p = [t for s in pred for t in s]
        labels = sorted(set(flat_g) | set(flat_p))
        return metrics.classification_report(flat_g, flat_p, labels)
    return metrics.chunk_f1_report(gold, pred, scheme)


def cmd_train_crf(cfg: CrfRunConfig, out=None) -> list[dict]:
    out = out or sys.stdout
    _require(cfg, "train", "valid", "model", "grid_out")
    train = read_conll(cfg.train)
    valid = read_conll(cfg.valid)
    if not train:
        raise FitError(f"{cfg.train}: no sequences")
    scheme = _resolve_scheme(cfg.scheme, train + valid)
    labels = sorted({t for s in train for t in s.tags})
    grid_train = sample_sequences(train, cfg.sample, cfg.seed)

    rows = []
    for c1 in cfg.c1:
        for c2 in cfg.c2:
            ccfg = crf_mod.CrfConfig(c1=float(c1), c2=float(c2), max_iter=cfg.max_iter, window=cfg.window)
            model = crf_mod.train_crf(grid_train, ccfg, labels)
            pred = crf_mod.predict(model, [s.tokens for s in valid])
            rep = score_tags([s.tags for s in valid], pred, scheme)
            rows.append({"c1": float(c1), "c2": float(c2), "f1_micro": rep.micro["f1"],
                         "f1_macro": rep.macro["f1"], "model": model})
    rows.sort(key=lambda r: (-r["f1_micro"], r["c1"], r["c2"]))

    lines = ["c1\tc2\tf1_micro\tf1_macro"]
    lines += [f"{_fmt(r['c1'])}\t{_fmt(r['c2'])}\t{_fmt(r['f1_micro'])}\t{_fmt(r['f1_macro'])}" for r in rows]
    atomic_write_text(cfg.grid_out, "\n".join(lines) + "\n")

    best = rows[0]
    model = best["model"]
    if len(grid_train) < len(train):
        model = crf_mod.train_crf(train, model.config, labels)
    save_container(cfg.model, "crf", {"scheme": scheme, "model": model.to_dict()})
    print(f"best\t{_fmt(best['c1'])}\t{_fmt(best['c2'])}\t{_fmt(best['f1_micro'])}\t{_fmt(best['f1_macro'])}",
          file=out)
    return rows


# --- predict / evaluate --------------------------------------------------------------------

def _nbsvm_outputs(doc, corpus):
    lex, clean_cfg, vec, model, thr = _load_nbsvm(doc)
    X = features.transform(vec, _nbsvm_tokens(corpus, clean_cfg, lex))
    proba = linear.predict_proba(model, X)
    return model, thr, proba


def _check_crf_input(path):
    if not str(path).endswith((".conll", ".tsv", ".txt", ".iob")):
        raise FormatError("a CRF model expects CoNLL input (token<TAB>tag lines)", path)


def cmd_predict(cfg: PredictConfig, out=None) -> None:
    _require(cfg, "model", "input", "output")
    doc = load_container(cfg.model)
    kind = doc["kind"]
    rows = []
    if kind == "nbsvm":
        if str(cfg.input).endswith((".conll", ".iob")):
            raise FormatError("an nbsvm model expects JSONL or TSV text records", cfg.input)
        corpus = read_corpus(cfg.input)
        model, thr, proba = _nbsvm_outputs(doc, corpus)
        for r, pr in zip(corpus, proba):
            row = {"id": r.id, "proba": {c: float(p) for c, p in zip(model.classes, pr)}}
            if model.multilabel:
                t = thr.values if thr is not None else np.full(len(model.classes), 0.5)
                row["labels"] = [c for c, p, tk in zip(model.classes, pr, t) if p >= tk]
            else:
                row["label"] = model.classes[int(np.argmax(pr))]
            rows.append(row)
    elif kind == "crf":
        _check_crf_input(cfg.input)
        model = crf_mod.CrfModel.from_dict(doc["payload"]["model"])
        for k, s in enumerate(read_conll(cfg.input)):
            rows.append({"id": str(k), "tokens": s.tokens, "tags": crf_mod.viterbi(model, s.tokens).tags})
    else:
        raise FormatError(f"cannot predict with a {kind!r} model", cfg.model)
    write_jsonl(cfg.output, rows)


def cmd_evaluate(cfg: PredictConfig, out=None) -> metrics.Report:
    out = out or sys.stdout
    _require(cfg, "model", "input")
    doc = load_container(cfg.model)
    kind = doc["kind"]
    if kind == "nbsvm":
        if str(cfg.input).endswith((".conll", ".iob")):
            raise FormatError("an nbsvm model expects JSONL or TSV text records", cfg.input)
        multilabel = doc["payload"]["model"]["multilabel"]
        corpus = read_corpus(cfg.input, "," if multilabel else None)
        model, thr, proba = _nbsvm_outputs(doc, corpus)
        if model.multilabel:
            Y = _label_targets(corpus, model.classes, True, cfg.input)
            t = thr.values if thr is not None else np.full(len(model.classes), 0.5)
            report = metrics.multilabel_report(Y, proba >= t, model.classes)
        else:
            gold = _label_targets(corpus, model.classes, False, cfg.input)
            pred = [model.classes[k] for k in np.argmax(proba, axis=1)]
            report = metrics.classification_report(gold, pred, model.classes)
    elif kind == "crf":
        _check_crf_input(cfg.input)
        model = crf_mod.CrfModel.from_dict(doc["payload"]["model"])
        seqs = read_conll(cfg.input)
        pred = crf_mod.predict(model, [s.tokens for s in seqs])
        report = score_tags([s.tags for s in seqs], pred, doc["payload"]["scheme"])
    else:
        raise FormatError(f"cannot evaluate a {kind!r} model", cfg.model)
    text = report.render()
    out.write(text)
    if cfg.report:
        atomic_write_text(cfg.report, text)
    if cfg.json:
        atomic_write_text(cfg.json, report.to_json() + "\n")
    return report


# --- subword -------------------------------------------------------------------------------

def _read_texts(path):
    if str(path).endswith(".txt"):
        with open(path, encoding="utf-8") as fh:
            return [ln.rstrip("\n") for ln in fh if ln.strip()]
    return read_corpus(path).texts


def cmd_subword_train(cfg: SubwordConfig, out=None) -> subword.SubwordModel:
    out = out or sys.stdout
    _require(cfg, "input", "model")
    model = subword.train_unigram(_read_texts(cfg.input), cfg.vocab_size, cfg.seed_multiplier,
                                  cfg.prune_fraction, max_piece_len=cfg.max_piece_len)
    save_container(cfg.model, "subword", model.to_dict())
    print(f"pieces\t{len(model)}", file=out)
    return model


def cmd_subword_encode(cfg: SubwordConfig, out=None) -> None:
    _require(cfg, "input", "model", "output")
    doc = load_container(cfg.model, "subword")
    model = subword.SubwordModel.from_dict(doc["payload"])
    rows = []
    if str(cfg.input).endswith(".txt"):
        items = [(str(k), t) for k, t in enumerate(_read_texts(cfg.input))]
    else:
        items = [(r.id, r.text) for r in read_corpus(cfg.input)]
    for rid, text in items:
        rows.append({"id": rid, "pieces": subword.encode_unigram(model, text),
                     "ids": subword.encode_ids(model, text)})
    write_jsonl(cfg.output, rows)


# --- argument parsing ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thaiseq", description="Thai text preprocessing, NBSVM and CRF baselines.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override its values")

    sp = sub.add_parser("preprocess", help="clean, deduplicate and length-filter a JSONL corpus")
    common(sp)
    sp.add_argument("--input")
    sp.add_argument("--output")
    sp.add_argument("--lexicon")
    sp.add_argument("--mode", choices=["lm", "classifier"])
    sp.add_argument("--rep-run-threshold", type=int)
    sp.add_argument("--min-words", type=int)
    sp.add_argument("--max-words", type=int)

    sp = sub.add_parser("train-nbsvm", help="grid-search NBSVM over penalty x C")
    common(sp)
    for name in ("train", "valid", "lexicon", "model", "grid-out", "dataset", "label-sep"):
        sp.add_argument(f"--{name}")
    sp.add_argument("--multilabel", action="store_true", default=None)
    sp.add_argument("--penalties", type=_strs)
    sp.add_argument("--Cs", type=_floats, dest="Cs")
    sp.add_argument("--min-df", type=int)
    sp.add_argument("--max-df", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--max-iter", type=int)

    sp = sub.add_parser("train-crf", help="grid-search CRF over (c1, c2)")
    common(sp)
    for name in ("train", "valid", "model", "grid-out"):
        sp.add_argument(f"--{name}")
    sp.add_argument("--scheme", choices=["iob", "iobe", "token"])
    sp.add_argument("--c1", type=_floats)
    sp.add_argument("--c2", type=_floats)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--sample", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--window", type=int)

    for name, helptext in (("predict", "write predictions as JSONL"), ("evaluate", "print a per-class report")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--model")
        sp.add_argument("--input")
        sp.add_argument("--output")
        sp.add_argument("--report", help="also write the text report here")
        sp.add_argument("--json", help="also write the JSON report here")

    sp = sub.add_parser("subword", help="train or apply a unigram subword model")
    common(sp)
    sp.add_argument("action", choices=["train", "encode"])
    sp.add_argument("--input")
    sp.add_argument("--model")
    sp.add_argument("--output")
    sp.add_argument("--vocab-size", type=int)
    sp.add_argument("--seed-multiplier", type=float)
    sp.add_argument("--prune-fraction", type=float)
    sp.add_argument("--max-piece-len", type=int)
    return p


_COMMANDS = {
    "preprocess": (PreprocessConfig, cmd_preprocess),
    "train-nbsvm": (NbsvmConfig, cmd_train_nbsvm),
    "train-crf": (CrfRunConfig, cmd_train_crf),
    "predict": (PredictConfig, cmd_predict),
    "evaluate": (PredictConfig, cmd_evaluate),
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose", "action")}
    try:
        if args.command == "subword":
            cfg = load_run_config(SubwordConfig, args.config, overrides)
            (cmd_subword_train if args.action == "train" else cmd_subword_encode)(cfg)
        else:
            cls, fn = _COMMANDS[args.command]
            fn(load_run_config(cls, args.config, overrides))
    except (ThaiSeqError, OSError) as exc:
        print(f"thaiseq {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
