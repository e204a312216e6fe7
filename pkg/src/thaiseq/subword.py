"""Unigram subword language model.

Training starts from a large seed vocabulary of frequent substrings and
alternates EM re-estimation with likelihood-based pruning until the
vocabulary fits the target size.  Encoding is Viterbi search over the
piece lattice.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from thaiseq.errors import ConfigError, FitError, FormatError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_SPECIAL = {"pad": "<pad>", "unk": "<unk>", "mask": "<mask>", "space_marker": "<_>"}
# penalty below the weakest piece for characters never seen in training
UNK_PENALTY = 10.0


@dataclass
class SubwordModel:
    pieces: dict[str, float]
    target_vocab: int
    special: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SPECIAL))
    max_piece_len: int = 8
    history: list[tuple[int, int, float]] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        self.max_piece_len = max([self.max_piece_len] + [len(p) for p in self.pieces])
        self._unk_score = (min(self.pieces.values()) if self.pieces else 0.0) - UNK_PENALTY

    def __len__(self) -> int:
        return len(self.pieces)

    def vocab(self) -> list[str]:
        """Specials first, then pieces by descending log-probability."""
        specials = [self.special[k] for k in ("pad", "unk", "mask", "space_marker")]
        ordered = sorted(self.pieces, key=lambda p: (-self.pieces[p], p))
        return specials + ordered

    def piece_to_id(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.vocab())}

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "target_vocab": self.target_vocab,
            "max_piece_len": self.max_piece_len,
            "special": dict(sorted(self.special.items())),
            "pieces": [[p, lp] for p, lp in sorted(self.pieces.items(), key=lambda kv: (-kv[1], kv[0]))],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubwordModel":
        if d.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported subword model version {d.get('version')!r}")
        return cls(
            pieces={p: float(lp) for p, lp in d["pieces"]},
            target_vocab=int(d["target_vocab"]),
            special=dict(d["special"]),
            max_piece_len=int(d.get("max_piece_len", 8)),
        )


def _split_marker(text: str, marker: str) -> list[tuple[bool, str]]:
    if not marker or marker not in text:
        return [(False, text)] if text else []
    out = []
    for k, part in enumerate(text.split(marker)):
        if k:
            out.append((True, marker))
        if part:
            out.append((False, part))
    return out


def _chunk_counts(texts: Iterable[str], marker: str) -> Counter:
    counts: Counter = Counter()
    for t in texts:
        for is_marker, part in _split_marker(t, marker):
            if not is_marker:
                counts[part] += 1
    return counts


def _seed_pieces(chunks: Counter, n_seed: int, max_len: int) -> dict[str, float]:
    freq: Counter = Counter()
    chars: Counter = Counter()
    for s, c in chunks.items():
        n = len(s)
        for i in range(n):
            chars[s[i]] += c
            for j in range(i + 2, min(n, i + max_len) + 1):
                sub = s[i:j]
                if any(ch.isspace() for ch in sub):
                    break
                freq[sub] += c
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1] * len(kv[0]), kv[0]))
    scores = {s: float(f * len(s)) for s, f in ranked[:n_seed]}
    scores.update({ch: float(f) for ch, f in chars.items()})
    total = sum(scores.values())
    return {p: math.log(v / total) for p, v in scores.items()}


def _lattice(s: str, pieces: dict[str, float], max_len: int) -> list[list[tuple[int, float, str]]]:
    """edges[i] = [(j, logprob, piece)] for pieces spanning s[i:j]."""
    n = len(s)
    edges: list[list[tuple[int, float, str]]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, min(n, i + max_len) + 1):
            lp = pieces.get(s[i:j])
            if lp is not None:
                edges[i].append((j, lp, s[i:j]))
    return edges


def _logaddexp_list(vals: list[float]) -> float:
    if not vals:
        return -math.inf
    m = max(vals)
    if m == -math.inf:
        return m
    return m + math.log(sum(math.exp(v - m) for v in vals))


def expected_counts(chunks: dict[str, int] | Counter, pieces: dict[str, float], max_len: int):
    """E-step: expected piece counts and total corpus log-likelihood."""
    counts: dict[str, float] = dict.fromkeys(pieces, 0.0)
    total_ll = 0.0
    for s in sorted(chunks):
        c = chunks[s]
        n = len(s)
        edges = _lattice(s, pieces, max_len)
        if n == 0:
            continue
        alpha = [-math.inf] * (n + 1)
        alpha[0] = 0.0
        incoming: list[list[float]] = [[] for _ in range(n + 1)]
        for i in range(n):
            if i > 0:
                alpha[i] = _logaddexp_list(incoming[i])
            for j, lp, _ in edges[i]:
                incoming[j].append(alpha[i] + lp)
        alpha[n] = _logaddexp_list(incoming[n])
        beta = [-math.inf] * (n + 1)
        beta[n] = 0.0
        for i in range(n - 1, -1, -1):
            beta[i] = _logaddexp_list([lp + beta[j] for j, lp, _ in edges[i]])
        log_z = alpha[n]
        if log_z == -math.inf:
            raise FitError(f"string {s!r} cannot be segmented with the current pieces")
        total_ll += c * log_z
        for i in range(n):
            for j, lp, piece in edges[i]:
                counts[piece] += c * math.exp(alpha[i] + lp + beta[j] - log_z)
    return counts, total_ll


def _maximize(counts: dict[str, float]) -> dict[str, float]:
    total = sum(counts.values())
    # characters stay in the vocabulary even if their expected count underflows
    floor = 1e-12 * total
    kept = {p: (c if len(p) > 1 else max(c, floor)) for p, c in counts.items() if c > 0.0 or len(p) == 1}
    log_norm = math.log(sum(kept.values()))
    return {p: math.log(c) - log_norm for p, c in kept.items()}


def run_em(chunks, pieces: dict[str, float], iterations: int, max_len: int = 8):
    """Run ``iterations`` EM steps; returns (pieces, counts, log-likelihoods).

    The i-th log-likelihood is measured at the parameters entering step i.
    """
    lls = []
    counts: dict[str, float] = {}
    for _ in range(iterations):
        counts, ll = expected_counts(chunks, pieces, max_len)
        lls.append(ll)
        pieces = _maximize(counts)
    return pieces, counts, lls


def _best_alternative(piece: str, pieces: dict[str, float], max_len: int) -> float:
    """Viterbi score of ``piece`` segmented without using ``piece`` itself."""
    n = len(piece)
    best = [-math.inf] * (n + 1)
    best[0] = 0.0
    for j in range(1, n + 1):
        for i in range(max(0, j - max_len), j):
            if i == 0 and j == n:
                continue
            lp = pieces.get(piece[i:j])
            if lp is not None and best[i] + lp > best[j]:
                best[j] = best[i] + lp
    return best[n]


def _prune(pieces, counts, n_remove: int, max_len: int) -> dict[str, float]:
    losses = []
    for p, lp in pieces.items():
        if len(p) == 1:
            continue
        alt = _best_alternative(p, pieces, max_len)
        losses.append((counts.get(p, 0.0) * (lp - alt), p))
    losses.sort()
    doomed = {p for _, p in losses[:n_remove]}
    kept = {p: lp for p, lp in pieces.items() if p not in doomed}
    log_total = _logaddexp_list(list(kept.values()))
    return {p: lp - log_total for p, lp in kept.items()}


def train_unigram(
    texts: Iterable[str],
    target_vocab: int,
    seed_multiplier: float = 4.0,
    prune_fraction: float = 0.25,
    em_iterations: int = 2,
    max_piece_len: int = 8,
    special: dict[str, str] | None = None,
) -> SubwordModel:
    """Train a unigram model whose vocabulary holds at most ``target_vocab`` pieces.

    Every character seen in training stays in the vocabulary.  The space
    marker is treated as an atomic symbol and never enters the lattice.
    """
    special = dict(DEFAULT_SPECIAL if special is None else special)
    if not 0.0 < prune_fraction < 1.0:
        raise ConfigError("prune_fraction must be in (0, 1)")
    if seed_multiplier <= 0:
        raise ConfigError("seed_multiplier must be positive")
    chunks = _chunk_counts(texts, special["space_marker"])
    if not chunks:
        raise FitError("cannot train on an empty corpus")
    alphabet = {ch for s in chunks for ch in s}
    if target_vocab < len(alphabet):
        raise ConfigError(f"target_vocab {target_vocab} is below the alphabet size {len(alphabet)}")

    n_seed = int(seed_multiplier * target_vocab)
    pieces = _seed_pieces(chunks, n_seed, max_piece_len)
    history: list[tuple[int, int, float]] = []
    rnd = 0
    while True:
        pieces, counts, lls = run_em(chunks, pieces, em_iterations, max_piece_len)
        for k, ll in enumerate(lls):
            history.append((rnd, k, ll))
        for a, b in zip(lls, lls[1:]):
            assert b >= a - 1e-9 * abs(a), "EM decreased the log-likelihood"
        logger.debug("round %d: %d pieces, ll=%.6f", rnd, len(pieces), lls[-1])
        if len(pieces) <= target_vocab:
            break
        n_prunable = sum(1 for p in pieces if len(p) > 1)
        n_remove = min(max(1, int(prune_fraction * n_prunable)), len(pieces) - target_vocab)
        pieces = _prune(pieces, counts, n_remove, max_piece_len)
        rnd += 1

    return SubwordModel(pieces, target_vocab, special, max_piece_len, history)


def _viterbi(s: str, model: SubwordModel) -> list[str]:
    n = len(s)
    pieces = model.pieces
    max_len = model.max_piece_len
    best = [-math.inf] * (n + 1)
    back = [0] * (n + 1)
    best[0] = 0.0
    for j in range(1, n + 1):
        for i in range(max(0, j - max_len), j):
            if best[i] == -math.inf:
                continue
            lp = pieces.get(s[i:j])
            if lp is None:
                if j - i != 1:
                    continue
                lp = model._unk_score
            score = best[i] + lp
            # i ascending, so strict ">" keeps the longest piece on ties
            if score > best[j]:
                best[j] = score
                back[j] = i
    out = []
    j = n
    while j > 0:
        i = back[j]
        out.append(s[i:j])
        j = i
    out.reverse()
    return out


def encode_unigram(model: SubwordModel, text: str) -> list[str]:
    """Viterbi segmentation into surface pieces; joining them gives ``text`` back."""
    out: list[str] = []
    for is_marker, part in _split_marker(text, model.special["space_marker"]):
        if is_marker:
            out.append(part)
        else:
            out.extend(_viterbi(part, model))
    return out


def encode_ids(model: SubwordModel, text: str) -> list[int]:
    ids = model.piece_to_id()
    unk = ids[model.special["unk"]]
    return [ids.get(p, unk) for p in encode_unigram(model, text)]


def path_score(model: SubwordModel, pieces: list[str]) -> float:
    """Sum of piece log-probabilities, unknown single characters at the unk score."""
    total = 0.0
    for p in pieces:
        if p == model.special["space_marker"]:
            continue
        lp = model.pieces.get(p)
        total += model._unk_score if lp is None else lp
    return total


def probabilities_sum(model: SubwordModel) -> float:
    return float(np.exp(np.array(list(model.pieces.values()))).sum())
