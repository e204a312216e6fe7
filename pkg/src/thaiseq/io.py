"""File formats: JSONL/TSV corpora, CoNLL sequences, model containers."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

from thaiseq.crf import TagSequence
from thaiseq.errors import FormatError
from thaiseq.textproc import Corpus, Record

MAGIC = "TSQK"
CONTAINER_VERSION = 1
CONTAINER_KINDS = ("nbsvm", "crf", "subword", "vectorizer")
MODEL_SUFFIX = ".tsqk.json"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- corpora ---------------------------------------------------------------------------------

_RECORD_KEYS = {"id", "text", "labels", "tags"}


def read_jsonl(path: str | Path) -> Corpus:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(obj, dict) or "text" not in obj:
                raise FormatError("record must be an object with a 'text' field", path, lineno)
            extra = set(obj) - _RECORD_KEYS
            if extra:
                raise FormatError(f"unknown record fields {sorted(extra)}", path, lineno)
            labels = obj.get("labels")
            if isinstance(labels, str):
                labels = [labels]
            records.append(Record(str(obj.get("id", lineno - 1)), obj["text"], labels, obj.get("tags")))
    try:
        return Corpus(tuple(records))
    except FormatError as exc:
        raise FormatError(str(exc), path) from None


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=False) + "\n" for r in rows)
    atomic_write_text(path, text)


def corpus_rows(corpus: Corpus) -> list[dict]:
    rows = []
    for r in corpus:
        row = {"id": r.id, "text": r.text}
        if r.labels is not None:
            row["labels"] = r.labels
        if r.tags is not None:
            row["tags"] = r.tags
        rows.append(row)
    return rows


def read_tsv(path: str | Path, label_sep: str | None = None) -> Corpus:
    """Two-column (text, label) file with a header row.

    With ``label_sep`` the label cell is split into several labels.
    """
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            return Corpus(())
        if len(header) != 2:
            raise FormatError(f"expected a 2-column header, got {len(header)} columns", path, 1)
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"expected 2 columns, got {len(row)}", path, lineno)
            text, label = row
            if label_sep:
                labels = [x for x in label.split(label_sep) if x] if label else []
            else:
                labels = [label]
            records.append(Record(str(lineno - 2), text, labels))
    return Corpus(tuple(records))


def read_corpus(path: str | Path, label_sep: str | None = None) -> Corpus:
    p = str(path)
    if p.endswith(".tsv"):
        return read_tsv(path, label_sep)
    return read_jsonl(path)


# --- CoNLL -----------------------------------------------------------------------------------

def read_conll(path: str | Path, scheme: str = "iob") -> list[TagSequence]:
    """``token<TAB>tag`` per line, blank line between sequences."""
    seqs: list[TagSequence] = []
    toks: list[str] = []
    tags: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                if toks:
                    seqs.append(TagSequence(toks, tags, scheme))
                    toks, tags = [], []
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise FormatError("expected token<TAB>tag", path, lineno)
            toks.append(parts[0])
            tags.append(parts[-1])
    if toks:
        seqs.append(TagSequence(toks, tags, scheme))
    return seqs


def write_conll(path: str | Path, seqs: Iterable[TagSequence]) -> None:
    blocks = ["".join(f"{tok}\t{tag}\n" for tok, tag in zip(s.tokens, s.tags)) for s in seqs]
    atomic_write_text(path, "\n".join(blocks))


# --- model container -------------------------------------------------------------------------

def creation_timestamp() -> str:
    """UTC timestamp; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        when = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def dump_container(kind: str, payload: dict, created_at: str | None = None) -> str:
    if kind not in CONTAINER_KINDS:
        raise FormatError(f"unknown container kind {kind!r}")
    doc = {
        "magic": MAGIC,
        "version": CONTAINER_VERSION,
        "kind": kind,
        "created_at": created_at or creation_timestamp(),
        "payload": payload,
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def save_container(path: str | Path, kind: str, payload: dict, created_at: str | None = None) -> None:
    atomic_write_text(path, dump_container(kind, payload, created_at))


def load_container(path: str | Path, kind: str | None = None) -> dict:
    """Return the whole container dict after checking magic, version and kind."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a model container: {exc.msg}", path, exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise FormatError("not a model container (bad magic)", path)
    if doc.get("version") != CONTAINER_VERSION:
        raise FormatError(f"unsupported container version {doc.get('version')!r}; "
                          f"this build reads version {CONTAINER_VERSION}", path)
    if kind is not None and doc.get("kind") != kind:
        raise FormatError(f"expected a {kind!r} model, found {doc.get('kind')!r}", path)
    return doc
