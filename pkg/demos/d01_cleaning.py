"""
Cleaning noisy Thai text
========================

Walk a few social-media style strings through the cleaning rules and
then through the corpus-level steps (dedup, length filter).
"""

from pathlib import Path

from thaiseq.io import read_jsonl
from thaiseq.segment import load_lexicon
from thaiseq.textproc import CleanConfig, clean_corpus, clean_text, dedup, filter_by_length

DATA = Path(__file__).parent / "data"
lex = load_lexicon(DATA / "lexicon.txt")

# language-model mode keeps spaces as an explicit marker token
lm = CleanConfig(mode="lm")
print(clean_text("ดีมากกก", lm, lex))
print(clean_text("อร่อย&nbsp;มาก<br />ราคาถูก", lm, lex))

# classifier mode drops spaces and flags repetition instead of hiding it
cls = CleanConfig(mode="classifier")
print(clean_text("ดีมากกก", cls, lex))
print(clean_text("ถูก ถูก ถูก", cls, lex))

# the same steps over a whole file
corpus = read_jsonl(DATA / "raw.jsonl")
cleaned = clean_corpus(corpus, lm, lex)
unique = dedup(cleaned)
kept = filter_by_length(unique, 3, 300, lex, markers=("<_>",))
print(len(corpus), len(unique), len(kept))
for text in kept.texts:
    print(text)
