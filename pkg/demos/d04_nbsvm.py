"""
NBSVM sentiment baseline
========================

tf-idf n-grams, scaled by the naive-Bayes log-count ratio, then a
logistic head per class.  Grid over penalty and C, pick on validation.
"""

from pathlib import Path

import numpy as np

from thaiseq.features import fit_vectorizer, transform
from thaiseq.io import read_tsv
from thaiseq.linear import (grid_search, macro_f1_multilabel, predict, predict_proba,
                            search_thresholds, train_nbsvm, ClassifierConfig)
from thaiseq.metrics import classification_report
from thaiseq.segment import load_lexicon
from thaiseq.textproc import CleanConfig, clean_text

DATA = Path(__file__).parent / "data"
lex = load_lexicon(DATA / "lexicon.txt")
cfg = CleanConfig(mode="classifier")

train = read_tsv(DATA / "reviews_train.tsv")
valid = read_tsv(DATA / "reviews_valid.tsv")
tok_tr = [clean_text(t, cfg, lex) for t in train.texts]
tok_va = [clean_text(t, cfg, lex) for t in valid.texts]
y_tr = [r.labels[0] for r in train]
y_va = [r.labels[0] for r in valid]

vec = fit_vectorizer(tok_tr, min_df=3, max_df_ratio=0.9)
X_tr, X_va = transform(vec, tok_tr), transform(vec, tok_va)
print(X_tr.shape, "features")

cells = grid_search((X_tr, y_tr), (X_va, y_va))
for c in cells:
    print(c.config.penalty, c.config.C, round(c.score, 4))

best = cells[0].model
print(classification_report(y_va, predict(best, X_va), best.classes).render())

# multi-label: one sigmoid head per label, thresholds tuned on validation
train = read_tsv(DATA / "topics_train.tsv", ",")
valid = read_tsv(DATA / "topics_valid.tsv", ",")
labels = ["food", "price"]
Y_tr = np.array([[int(l in r.labels) for l in labels] for r in train])
Y_va = np.array([[int(l in r.labels) for l in labels] for r in valid])
tok_tr = [clean_text(t, cfg, lex) for t in train.texts]
tok_va = [clean_text(t, cfg, lex) for t in valid.texts]
vec = fit_vectorizer(tok_tr, min_df=2)
X_tr, X_va = transform(vec, tok_tr), transform(vec, tok_va)
model = train_nbsvm(X_tr, Y_tr, ClassifierConfig("l2", 3.0), classes=labels, multilabel=True)
ts = search_thresholds(predict_proba(model, X_va), Y_va)
print("thresholds", ts.values)
print("macro-F1 at 0.5:", macro_f1_multilabel(Y_va, predict(model, X_va)))
print("macro-F1 tuned:", macro_f1_multilabel(Y_va, predict(model, X_va, ts)))
