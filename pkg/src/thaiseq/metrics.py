"""Per-class classification reports and entity-level chunk scoring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from thaiseq.errors import AlignmentError, ReportError, SchemeError

IOB = "iob"
IOBE = "iobe"
_PREFIXES = {IOB: {"B", "I"}, IOBE: {"B", "I", "E"}}


@dataclass
class ClassRow:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class Report:
    rows: dict[str, ClassRow]
    micro: dict[str, float]
    macro: dict[str, float]
    weighted: dict[str, float]
    support: int
    accuracy: float | None = None
    zero_division: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": {k: vars(v) for k, v in self.rows.items()},
            "micro": self.micro,
            "macro": self.macro,
            "weighted": self.weighted,
            "support": self.support,
            "accuracy": self.accuracy,
            "zero_division": self.zero_division,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    def render(self, digits: int = 4) -> str:
        return render_report(self, digits)


def _prf(tp: float, fp: float, fn: float) -> tuple[float, float, float, bool]:
    """Precision, recall, F1 with 0 for any undefined ratio; last item flags that."""
    undefined = False
    if tp + fp > 0:
        p = tp / (tp + fp)
    else:
        p, undefined = 0.0, True
    if tp + fn > 0:
        r = tp / (tp + fn)
    else:
        r, undefined = 0.0, True
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f, undefined


def report_from_counts(labels: Sequence[str], tp, fp, fn, accuracy: float | None = None) -> Report:
    tp, fp, fn = (np.asarray(a, dtype=float) for a in (tp, fp, fn))
    support = tp + fn
    rows, flagged = {}, []
    for k, lab in enumerate(labels):
        p, r, f, undefined = _prf(tp[k], fp[k], fn[k])
        if undefined:
            flagged.append(lab)
        rows[lab] = ClassRow(p, r, f, int(support[k]))
    mp, mr, mf, _ = _prf(tp.sum(), fp.sum(), fn.sum())
    P = np.array([rows[l].precision for l in labels])
    R = np.array([rows[l].recall for l in labels])
    F = np.array([rows[l].f1 for l in labels])
    total = support.sum()
    if len(labels):
        macro = {"precision": float(P.mean()), "recall": float(R.mean()), "f1": float(F.mean())}
    else:
        macro = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    if total > 0:
        wts = support / total
        weighted = {"precision": float(P @ wts), "recall": float(R @ wts), "f1": float(F @ wts)}
    else:
        weighted = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    micro = {"precision": mp, "recall": mr, "f1": mf}
    return Report(rows, micro, macro, weighted, int(total), accuracy, flagged)


def classification_report(y_true: Sequence[str], y_pred: Sequence[str], labels: Sequence[str] | None = None) -> Report:
    """One-vs-rest precision/recall/F1 per label for single-label predictions."""
    if len(y_true) != len(y_pred):
        raise AlignmentError(f"{len(y_true)} gold labels but {len(y_pred)} predictions")
    if labels is None:
        labels = sorted(set(y_true) | set(y_pred))
    index = {lab: k for k, lab in enumerate(labels)}
    for name, ys in (("y_pred", y_pred), ("y_true", y_true)):
        unknown = sorted({y for y in ys if y not in index})
        if unknown:
            raise ReportError(f"{name} contains labels outside the label list: {unknown}")
    n = len(labels)
    tp, fp, fn = np.zeros(n), np.zeros(n), np.zeros(n)
    for a, b in zip(y_true, y_pred):
        if a == b:
            tp[index[a]] += 1
        else:
            fn[index[a]] += 1
            fp[index[b]] += 1
    acc = float(tp.sum() / len(y_true)) if len(y_true) else 0.0
    return report_from_counts(list(labels), tp, fp, fn, accuracy=acc)


def multilabel_report(Y_true, Y_pred, labels: Sequence[str]) -> Report:
    Y_true = np.asarray(Y_true, dtype=bool)
    Y_pred = np.asarray(Y_pred, dtype=bool)
    if Y_true.shape != Y_pred.shape:
        raise AlignmentError(f"shape mismatch {Y_true.shape} vs {Y_pred.shape}")
    if Y_true.shape[1] != len(labels):
        raise ReportError("label list length does not match the indicator width")
    tp = (Y_true & Y_pred).sum(axis=0)
    fp = (~Y_true & Y_pred).sum(axis=0)
    fn = (Y_true & ~Y_pred).sum(axis=0)
    return report_from_counts(list(labels), tp, fp, fn)


# --- chunks ----------------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Chunk:
    start: int
    end: int
    entity_type: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("chunk must have start < end")

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def split_tag(tag: str, position: int, scheme: str, sep: str = "-") -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, found, etype = tag.partition(sep)
    if not found or not etype:
        raise SchemeError(f"malformed tag {tag!r} at position {position}")
    if prefix not in _PREFIXES[scheme]:
        raise SchemeError(f"unknown prefix {prefix!r} in tag {tag!r} at position {position} for scheme {scheme}")
    return prefix, etype


def extract_chunks(tags: Sequence[str], scheme: str = IOB, strict: bool = False, sep: str = "-") -> list[Chunk]:
    """Read entity chunks off a tag sequence.

    Lenient mode (default) repairs ill-formed sequences the usual way: an
    ``I-``/``E-`` that does not continue an open chunk of the same type
    opens a new one, and a chunk left open at the end is closed there.
    ``strict=True`` raises ``SchemeError`` on such sequences instead.
    """
    if scheme not in _PREFIXES:
        raise SchemeError(f"unknown scheme {scheme!r}")
    chunks: list[Chunk] = []
    open_type: str | None = None
    start = 0

    def close(end):
        nonlocal open_type
        if open_type is not None:
            chunks.append(Chunk(start, end, open_type))
            open_type = None

    for i, tag in enumerate(tags):
        prefix, etype = split_tag(tag, i, scheme, sep)
        if prefix == "O":
            close(i)
            continue
        continues = open_type == etype and prefix in ("I", "E")
        if prefix == "B" or not continues:
            if strict and prefix != "B":
                raise SchemeError(f"{tag!r} at position {i} does not continue an open chunk")
            close(i)
            open_type, start = etype, i
        if prefix == "E":
            close(i + 1)
    close(len(tags))
    return sorted(chunks)


def render_chunks(chunks: Iterable[Chunk], length: int, scheme: str = IOB, sep: str = "-") -> list[str]:
    """Inverse of ``extract_chunks`` for non-overlapping chunks."""
    tags = ["O"] * length
    for c in chunks:
        tags[c.start] = f"B{sep}{c.entity_type}"
        for k in range(c.start + 1, c.end):
            tags[k] = f"I{sep}{c.entity_type}"
        if scheme == IOBE and c.end - c.start > 1:
            tags[c.end - 1] = f"E{sep}{c.entity_type}"
    return tags


def chunk_f1_report(true_seqs: Sequence[Sequence[str]], pred_seqs: Sequence[Sequence[str]], scheme: str = IOB,
                    strict: bool = False) -> Report:
    """Entity-level scores: a predicted chunk counts only on an exact (type, span) match."""
    if len(true_seqs) != len(pred_seqs):
        raise AlignmentError(f"{len(true_seqs)} gold sequences but {len(pred_seqs)} predicted")
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    for k, (gold, pred) in enumerate(zip(true_seqs, pred_seqs)):
        if len(gold) != len(pred):
            raise AlignmentError(f"sequence {k}: {len(gold)} gold tags but {len(pred)} predicted")
        g = set(extract_chunks(gold, scheme, strict))
        p = set(extract_chunks(pred, scheme, strict))
        for c in g & p:
            tp[c.entity_type] = tp.get(c.entity_type, 0) + 1
        for c in p - g:
            fp[c.entity_type] = fp.get(c.entity_type, 0) + 1
        for c in g - p:
            fn[c.entity_type] = fn.get(c.entity_type, 0) + 1
    labels = sorted(set(tp) | set(fp) | set(fn))
    return report_from_counts(
        labels,
        [tp.get(l, 0) for l in labels],
        [fp.get(l, 0) for l in labels],
        [fn.get(l, 0) for l in labels],
    )


def remap_rare_tags(seqs: Sequence[Sequence[str]], tag_map: Mapping[str, str], sep: str = "-") -> list[list[str]]:
    """Rewrite every prefixed variant of the mapped entity types.

    A type mapped to ``"O"`` becomes ``O``; a type mapped to another type
    keeps its prefix.
    """
    out = []
    for seq in seqs:
        new = []
        for tag in seq:
            prefix, found, etype = tag.partition(sep)
            if found and etype in tag_map:
                target = tag_map[etype]
                new.append("O" if target == "O" else f"{prefix}{sep}{target}")
            else:
                new.append(tag)
        out.append(new)
    return out


def detect_scheme(tag_seqs: Iterable[Sequence[str]], sep: str = "-") -> str:
    """Guess ``iob``, ``iobe`` or ``token`` (plain per-token labels)."""
    prefixes = set()
    plain = False
    for seq in tag_seqs:
        for tag in seq:
            if tag == "O":
                continue
            prefix, found, etype = tag.partition(sep)
            if found and prefix in ("B", "I", "E") and etype:
                prefixes.add(prefix)
            else:
                plain = True
    if plain and prefixes:
        raise SchemeError("tags mix chunk prefixes with plain labels; pass the scheme explicitly")
    if plain or not prefixes:
        return "token"
    return IOBE if "E" in prefixes else IOB


# --- rendering -------------------------------------------------------------------------------

def render_report(report: Report, digits: int = 4) -> str:
    """Fixed-width table: one row per class, then micro/macro/weighted averages."""
    head = ("Tag", "Precision", "Recall", "F1-score", "Support")
    avg_names = ("Micro avg", "Macro avg", "Weighted avg")
    width = max([len(head[0])] + [len(n) for n in report.rows] + [len(n) for n in avg_names])
    col = max(len(h) for h in head[1:])
    col = max(col, digits + 2)

    def line(name, p, r, f, s):
        return f"{name:<{width}}  {p:>{col}.{digits}f}  {r:>{col}.{digits}f}  {f:>{col}.{digits}f}  {s:>{col}d}"

    out = [f"{head[0]:<{width}}  " + "  ".join(f"{h:>{col}}" for h in head[1:])]
    for name, row in report.rows.items():
        out.append(line(name, row.precision, row.recall, row.f1, row.support))
    out.append("")
    for name, avg in zip(avg_names, (report.micro, report.macro, report.weighted)):
        out.append(line(f"{name:>{width}}", avg["precision"], avg["recall"], avg["f1"], report.support))
    if report.accuracy is not None:
        out.append(f"{'Accuracy':>{width}}  {'':>{col}}  {'':>{col}}  {report.accuracy:>{col}.{digits}f}  {report.support:>{col}d}")
    return "\n".join(out) + "\n"
