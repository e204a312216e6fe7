"""Dictionary-based maximal-matching segmentation over a character trie.

The segmenter picks, among all ways of cutting a string into lexicon
entries and out-of-vocabulary runs, one that minimizes the number of
unknown characters and then the number of tokens.  Adjacent unknown
characters always form a single token.  Remaining ties go to the longest
token at the earliest position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from thaiseq.errors import ConfigError

_END = ""  # trie terminal key; entries are non-empty so "" never collides

WORD = "word"
SYLLABLE = "syllable"


class Lexicon:
    """Immutable set of surface forms with longest-prefix lookups."""

    def __init__(self, entries: Iterable[str], kind: str = WORD):
        if kind not in (WORD, SYLLABLE):
            raise ConfigError(f"unknown lexicon kind {kind!r}")
        words = sorted({w for w in entries if w and not w.isspace()})
        if not words:
            raise ConfigError("lexicon is empty")
        self.kind = kind
        self._entries = frozenset(words)
        self._root: dict = {}
        self.max_len = 0
        for w in words:
            node = self._root
            for ch in w:
                node = node.setdefault(ch, {})
            node[_END] = True
            self.max_len = max(self.max_len, len(w))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: object) -> bool:
        return word in self._entries

    def __iter__(self):
        return iter(sorted(self._entries))

    def prefix_ends(self, text: str, start: int) -> list[int]:
        """End offsets ``j`` such that ``text[start:j]`` is an entry, ascending."""
        ends = []
        node = self._root
        for j in range(start, len(text)):
            node = node.get(text[j])
            if node is None:
                break
            if _END in node:
                ends.append(j + 1)
        return ends

    def longest_prefix(self, text: str, start: int = 0) -> str | None:
        ends = self.prefix_ends(text, start)
        return text[start:ends[-1]] if ends else None


def build_lexicon(words: Iterable[str], kind: str = WORD) -> Lexicon:
    return Lexicon((w.strip() for w in words), kind)


def load_lexicon(path: str | Path, kind: str = WORD) -> Lexicon:
    """Read one entry per line; ``#`` comment lines and blanks are skipped."""
    with open(path, encoding="utf-8") as fh:
        words = [ln.strip() for ln in fh if not ln.lstrip().startswith("#")]
    return build_lexicon(words, kind)


@dataclass(frozen=True)
class Segmentation:
    tokens: list[str] = field(default_factory=list)
    spans: list[tuple[int, int]] = field(default_factory=list)
    unknown: list[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)


def segment_maximal_matching(text: str, lex: Lexicon) -> Segmentation:
    n = len(text)
    if n == 0:
        return Segmentation()

    word_ends = [lex.prefix_ends(text, i) for i in range(n)]
    # next_start[i]: smallest p >= i where some entry begins (n if none)
    next_start = [n] * (n + 1)
    for i in range(n - 1, -1, -1):
        next_start[i] = i if word_ends[i] else next_start[i + 1]

    # best[f][i] = (unknown chars, tokens, -first token length) for text[i:]
    # when the previous token was unknown (f=1) or not (f=0).
    inf = (n + 1, n + 1, 0)
    best = [[inf] * (n + 1) for _ in range(2)]
    choice = [[None] * (n + 1) for _ in range(2)]
    best[0][n] = best[1][n] = (0, 0, 0)

    for i in range(n - 1, -1, -1):
        # lexicon entries, reachable from either state
        cand_word = inf
        word_j = None
        for j in word_ends[i]:
            rest = best[0][j]
            c = (rest[0], rest[1] + 1, -(j - i))
            if c < cand_word:
                cand_word, word_j = c, j
        best[1][i], choice[1][i] = cand_word, (word_j, False)

        # unknown runs only after a known token; a run ending past the first
        # entry start plus the longest entry is strictly dominated
        cand_unk = inf
        unk_j = None
        p = next_start[i + 1]
        limit = n if p >= n else min(n, p + lex.max_len)
        for j in range(i + 1, limit + 1):
            if j < n and not word_ends[j]:
                continue
            rest = best[1][j]
            if rest[0] > n:
                continue
            c = (rest[0] + (j - i), rest[1] + 1, -(j - i))
            if c < cand_unk:
                cand_unk, unk_j = c, j
        if cand_unk < cand_word:
            best[0][i], choice[0][i] = cand_unk, (unk_j, True)
        else:
            best[0][i], choice[0][i] = cand_word, (word_j, False)

    tokens, spans, unknown = [], [], []
    i, f = 0, 0
    while i < n:
        j, is_unk = choice[f][i]
        tokens.append(text[i:j])
        spans.append((i, j))
        unknown.append(is_unk)
        i, f = j, int(is_unk)
    return Segmentation(tokens, spans, unknown)


def segment_syllables(text: str, lex: Lexicon) -> Segmentation:
    if lex.kind != SYLLABLE:
        raise ConfigError("segment_syllables needs a syllable lexicon")
    return segment_maximal_matching(text, lex)


_WS = re.compile(r"(\s+)")


def tokenize(text: str, lex: Lexicon, keep: Sequence[str] = ()) -> list[str]:
    """Segment ``text`` into tokens, keeping whitespace runs as their own tokens.

    Strings listed in ``keep`` (marker tokens) are never split.
    """
    if not text:
        return []
    if keep:
        pattern = "(" + "|".join(re.escape(k) for k in sorted(keep, key=len, reverse=True)) + ")"
        parts = re.split(pattern, text)
    else:
        parts = [text]
    keep_set = set(keep)
    out: list[str] = []
    for part in parts:
        if not part:
            continue
        if part in keep_set:
            out.append(part)
            continue
        for chunk in _WS.split(part):
            if not chunk:
                continue
            if chunk.isspace():
                out.append(chunk)
            else:
                out.extend(segment_maximal_matching(chunk, lex).tokens)
    return out
