"""N-gram tf-idf features and naive-Bayes log-count ratios."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from thaiseq.errors import ConfigError, FitError, FormatError, ShapeError

FORMAT_VERSION = 1


def ngrams(tokens: Sequence[str], ngram_range: tuple[int, int] = (1, 2)) -> list[str]:
    lo, hi = ngram_range
    out = []
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i:i + n]))
    return out


@dataclass
class Vectorizer:
    vocabulary: dict[str, int]
    idf: np.ndarray
    ngram_range: tuple[int, int] = (1, 2)
    min_df: int = 3
    max_df_ratio: float = 0.90

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    def to_dict(self) -> dict:
        terms = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {
            "version": FORMAT_VERSION,
            "ngram_range": list(self.ngram_range),
            "min_df": self.min_df,
            "max_df_ratio": self.max_df_ratio,
            "terms": terms,
            "idf": [float(v) for v in self.idf],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vectorizer":
        if d.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported vectorizer version {d.get('version')!r}")
        return cls(
            vocabulary={t: i for i, t in enumerate(d["terms"])},
            idf=np.asarray(d["idf"], dtype=float),
            ngram_range=tuple(d["ngram_range"]),
            min_df=int(d["min_df"]),
            max_df_ratio=float(d["max_df_ratio"]),
        )


def fit_vectorizer(
    token_docs: Sequence[Sequence[str]],
    min_df: int = 3,
    max_df_ratio: float = 0.90,
    ngram_range: tuple[int, int] = (1, 2),
) -> Vectorizer:
    """Build the n-gram vocabulary and smoothed idf weights.

    A term is kept when ``min_df <= df <= max_df_ratio * N``.  Columns are
    ordered lexicographically; ``idf = ln((1 + N) / (1 + df)) + 1``.
    """
    if not token_docs:
        raise FitError("cannot fit a vectorizer on zero documents")
    if min_df < 1 or not 0.0 < max_df_ratio <= 1.0:
        raise ConfigError("need min_df >= 1 and 0 < max_df_ratio <= 1")
    n_docs = len(token_docs)
    df: Counter = Counter()
    for doc in token_docs:
        df.update(set(ngrams(doc, ngram_range)))
    max_count = max_df_ratio * n_docs
    terms = sorted(t for t, c in df.items() if min_df <= c <= max_count)
    if not terms:
        raise FitError("no n-gram survived the document-frequency bounds")
    dfs = np.array([df[t] for t in terms], dtype=float)
    idf = np.log((1.0 + n_docs) / (1.0 + dfs)) + 1.0
    return Vectorizer({t: i for i, t in enumerate(terms)}, idf, tuple(ngram_range), min_df, max_df_ratio)


def transform(vec: Vectorizer, token_docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
    """Raw-tf times idf, L2-normalized per row; unknown n-grams are ignored."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in token_docs:
        tf = Counter(vec.vocabulary[g] for g in ngrams(doc, vec.ngram_range) if g in vec.vocabulary)
        cols = sorted(tf)
        vals = np.array([tf[c] * vec.idf[c] for c in cols], dtype=float)
        norm = np.sqrt(np.dot(vals, vals)) if len(vals) else 0.0
        if norm > 0:
            vals /= norm
        indices.extend(cols)
        data.extend(vals.tolist())
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(token_docs), vec.n_features),
    )


@dataclass
class NbRatio:
    r: np.ndarray
    alpha: float = 1.0


def nb_ratio(X, y, alpha: float = 1.0) -> NbRatio:
    """Log-count ratio of smoothed, L1-normalized positive vs negative feature mass."""
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    pos = y == 1
    if not pos.any() or pos.all():
        raise FitError("nb_ratio needs both positive and negative examples")
    X = sp.csr_matrix(X)
    p = alpha + np.asarray(X[pos].sum(axis=0)).ravel()
    q = alpha + np.asarray(X[~pos].sum(axis=0)).ravel()
    r = np.log((p / p.sum()) / (q / q.sum()))
    return NbRatio(r, alpha)


def scale_by_ratio(X, r) -> sp.csr_matrix:
    r = getattr(r, "r", r)
    r = np.asarray(r, dtype=float)
    if X.shape[1] != r.shape[0]:
        raise ShapeError(f"X has {X.shape[1]} columns but r has length {r.shape[0]}")
    X = sp.csr_matrix(X, dtype=float, copy=True)
    X.data *= r[X.indices]
    return X
