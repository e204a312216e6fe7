"""Text cleaning, deduplication and sentence-length filtering.

The cleaning rules run in a fixed order::

    html entities -> empty brackets -> line breaks -> space runs
    -> character runs -> word segmentation -> token runs -> space markers

``lm`` mode keeps spaces (as ``space_marker``) and silently collapses
repetitions.  ``classifier`` mode drops spaces and marks each collapsed
repetition with ``rep_marker`` / ``wrep_marker`` instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from thaiseq.errors import ConfigError, FormatError
from thaiseq.segment import Lexicon, tokenize

LM = "lm"
CLASSIFIER = "classifier"


@dataclass(frozen=True)
class CleanConfig:
    mode: str = LM
    rep_run_threshold: int = 3
    space_marker: str = "<_>"
    rep_marker: str = "<rep>"
    wrep_marker: str = "<wrep>"

    def __post_init__(self):
        if self.mode not in (LM, CLASSIFIER):
            raise ConfigError(f"mode must be 'lm' or 'classifier', got {self.mode!r}")
        if self.rep_run_threshold < 2:
            raise ConfigError("rep_run_threshold must be >= 2")
        markers = (self.space_marker, self.rep_marker, self.wrep_marker)
        if not all(markers):
            raise ConfigError("marker tokens must be non-empty")
        if len(set(markers)) != 3:
            raise ConfigError("marker tokens must be distinct")

    @property
    def markers(self) -> tuple[str, str, str]:
        return (self.space_marker, self.rep_marker, self.wrep_marker)


@dataclass(frozen=True)
class Record:
    id: str
    text: str
    labels: list[str] | None = None
    tags: list[str] | None = None


@dataclass(frozen=True)
class Corpus:
    records: tuple[Record, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise FormatError(f"duplicate record id {r.id!r}")
            seen.add(r.id)

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "Corpus":
        return cls(tuple(Record(str(i), t) for i, t in enumerate(texts)))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self.records]


_ENTITIES = (
    # &amp; last so "&amp;lt;" decodes once to "&lt;"
    ("&nbsp;", " "),
    ("\u00a0", " "),
    ("&lt;", "<"),
    ("&gt;", ">"),
    ("&quot;", '"'),
    ("&amp;", "&"),
)
_BR = re.compile(r"<br\s*/?>", re.IGNORECASE)
_EMPTY_BRACKETS = re.compile(r"\(\s*\)|\{\s*\}|\[\s*\]")
_LINE_BREAKS = re.compile(r"\r\n|\r|\n")
_SPACES = re.compile(r" {2,}")


def _decode_html(text: str) -> str:
    text = _BR.sub("\n", text)
    for ent, ch in _ENTITIES:
        text = text.replace(ent, ch)
    return text


def normalize(text: str) -> str:
    """Apply the string-level rules (entities, brackets, line breaks, spaces)."""
    text = _decode_html(text)
    text = _EMPTY_BRACKETS.sub("", text)
    text = _LINE_BREAKS.sub(" ", text)
    return _SPACES.sub(" ", text)


def _char_run_pattern(threshold: int) -> re.Pattern:
    return re.compile(r"(.)\1{%d,}" % (threshold - 1), re.DOTALL)


def _collapse_char_runs(text: str, cfg: CleanConfig) -> list[tuple[bool, str]]:
    """Split ``text`` into (is_marker, string) parts with character runs collapsed."""
    pat = _char_run_pattern(cfg.rep_run_threshold)
    if cfg.mode == LM:
        return [(False, pat.sub(r"\1", text))]
    parts: list[tuple[bool, str]] = []
    pos = 0
    for m in pat.finditer(text):
        if m.start() > pos:
            parts.append((False, text[pos:m.start()]))
        parts.append((True, cfg.rep_marker))
        parts.append((True, m.group(1)))
        pos = m.end()
    if pos < len(text):
        parts.append((False, text[pos:]))
    return parts


def _collapse_token_runs(tokens: list[str], cfg: CleanConfig, protected: set[int]) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(tokens):
        j = i + 1
        if i not in protected:
            while j < len(tokens) and tokens[j] == tokens[i] and j not in protected:
                j += 1
        if j - i >= 2:
            if cfg.mode == CLASSIFIER:
                out.append(cfg.wrep_marker)
            out.append(tokens[i])
        else:
            out.append(tokens[i])
        i = j
    return out


def clean_text(text: str | bytes, cfg: CleanConfig, lexicon: Lexicon) -> list[str]:
    """Run the full cleaning pipeline and return the token stream."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8 at byte offset {exc.start}") from exc
    if not text:
        return []

    text = normalize(text)
    parts = _collapse_char_runs(text, cfg)

    tokens: list[str] = []
    protected: set[int] = set()  # indices of rep-marker pairs; never merged
    for is_marker, s in parts:
        if is_marker:
            protected.add(len(tokens))
            tokens.append(s)
        else:
            tokens.extend(tokenize(s, lexicon))

    if cfg.mode == CLASSIFIER:
        keep = [k for k, t in enumerate(tokens) if not t.isspace()]
        new_index = {k: n for n, k in enumerate(keep)}
        protected = {new_index[k] for k in protected if k in new_index}
        tokens = [tokens[k] for k in keep]
        return _collapse_token_runs(tokens, cfg, protected)

    tokens = _collapse_token_runs(tokens, cfg, protected)
    return [cfg.space_marker if t.isspace() else t for t in tokens]


def detokenize(tokens: Sequence[str], cfg: CleanConfig) -> str:
    return "".join(" " if t == cfg.space_marker else t for t in tokens)


def dedup(corpus: Corpus) -> Corpus:
    """Drop records whose text repeats an earlier record exactly."""
    seen: set[bytes] = set()
    kept = []
    for r in corpus:
        key = r.text.encode("utf-8")
        if key in seen:
            continue
        seen.add(key)
        kept.append(r)
    return Corpus(tuple(kept))


def count_words(text: str, lexicon: Lexicon, markers: Sequence[str] = ()) -> int:
    toks = tokenize(text, lexicon, keep=markers)
    skip = set(markers)
    return sum(1 for t in toks if not t.isspace() and t not in skip)


def filter_by_length(
    corpus: Corpus,
    min_words: int,
    max_words: int,
    lexicon: Lexicon,
    markers: Sequence[str] = ("<_>",),
) -> Corpus:
    """Keep records with ``min_words <= word count <= max_words``.

    Whitespace tokens and the given space markers are not counted as words.
    """
    if min_words < 1 or min_words > max_words:
        raise ConfigError(f"need 1 <= min_words <= max_words, got {min_words}, {max_words}")
    kept = [r for r in corpus if min_words <= count_words(r.text, lexicon, markers) <= max_words]
    return Corpus(tuple(kept))


def clean_corpus(corpus: Corpus, cfg: CleanConfig, lexicon: Lexicon) -> Corpus:
    """Clean every record; the text field becomes the concatenated token stream."""
    return Corpus(
        tuple(replace(r, text="".join(clean_text(r.text, cfg, lexicon))) for r in corpus)
    )


def split_sentences(corpus: Corpus, splitter) -> Corpus:
    """Expand each record into one record per sentence returned by ``splitter``.

    ``splitter`` is any callable ``str -> list[str]``; sentence ids are
    ``"<record id>-<k>"``.
    """
    out = []
    for r in corpus:
        for k, sent in enumerate(splitter(r.text)):
            out.append(replace(r, id=f"{r.id}-{k}", text=sent))
    return Corpus(tuple(out))
