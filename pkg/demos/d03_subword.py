"""
Unigram subword vocabulary
==========================

Train a small unigram model, look at the learned pieces, encode text.
"""

from pathlib import Path

import numpy as np

from thaiseq.io import read_tsv
from thaiseq.subword import encode_ids, encode_unigram, train_unigram

texts = read_tsv(Path(__file__).parent / "data" / "reviews_train.tsv").texts
model = train_unigram(texts, target_vocab=60)

print(len(model), "pieces")
print(model.vocab()[:20])

# log-likelihood per EM step, grouped by pruning round
for rnd, it, ll in model.history[:8]:
    print(rnd, it, round(ll, 3))

sentence = "อาหารอร่อยราคาถูก"
pieces = encode_unigram(model, sentence)
print(pieces, encode_ids(model, sentence))
assert "".join(pieces) == sentence

probs = np.exp(list(model.pieces.values()))
print("total probability", probs.sum())
