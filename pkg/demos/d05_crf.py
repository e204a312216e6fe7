"""
CRF named-entity tagger
=======================

Window n-gram features, elastic-net training, Viterbi decoding and
entity-level scoring.
"""

from pathlib import Path

from thaiseq.crf import CrfConfig, extract_features, predict, train_crf, viterbi
from thaiseq.io import read_conll
from thaiseq.metrics import chunk_f1_report

DATA = Path(__file__).parent / "data"
train = read_conll(DATA / "ner_train.conll")
valid = read_conll(DATA / "ner_valid.conll")

# 19 features per position: 7 unigrams, 6 bigrams, 5 trigrams and a bias
print(extract_features(["สมชาย", "ไป", "กรุงเทพ"], 0))

for c1, c2 in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)]:
    model = train_crf(train, CrfConfig(c1=c1, c2=c2, max_iter=100))
    pred = predict(model, [s.tokens for s in valid])
    rep = chunk_f1_report([s.tags for s in valid], pred, "iob")
    print(c1, c2, model.stop_reason, round(rep.micro["f1"], 4), round(rep.macro["f1"], 4))

print(viterbi(model, ["มานี", "ทำงาน", "ธนาคาร", "กรุงเทพ"]).tags)
print(rep.render())
