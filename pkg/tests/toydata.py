"""Small synthetic Thai datasets for tests and demos."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

WORDS = [
    "ดี", "มาก", "กิน", "ข้าว", "ไป", "โรงเรียน", "ฉัน", "เขา", "ชอบ", "ไม่", "อาหาร", "อร่อย",
    "บ้าน", "สวย", "รถ", "แมว", "หมา", "วิ่ง", "เร็ว", "นอน", "ที่", "และ", "คน", "ร้าน", "บริการ",
    "วันนี้", "แย่", "ช้า", "เหม็น", "เกลียด", "ราคา", "ถูก", "แพง", "พนักงาน", "น่ารัก", "ไหม",
    "ครับ", "ค่ะ", "สมชาย", "สมหญิง", "มานี", "กรุงเทพ", "เชียงใหม่", "ภูเก็ต", "อยู่", "เดินทาง",
    "ทำงาน", "บริษัท", "ธนาคาร", "โรงพยาบาล", "กับ", "จาก", "เมื่อวาน", "พรุ่งนี้",
]

POSITIVE = ["ดี", "อร่อย", "สวย", "ชอบ", "ถูก", "น่ารัก"]
NEGATIVE = ["แย่", "ช้า", "เหม็น", "เกลียด", "แพง"]
FILLER = ["ร้าน", "อาหาร", "บริการ", "วันนี้", "ที่", "คน", "ราคา", "พนักงาน", "มาก", "ครับ", "ค่ะ"]

PERSONS = ["สมชาย", "สมหญิง", "มานี"]
LOCATIONS = ["กรุงเทพ", "เชียงใหม่", "ภูเก็ต"]
ORGS = ["บริษัท", "ธนาคาร", "โรงพยาบาล"]
CONTEXT = ["ไป", "อยู่", "ที่", "เดินทาง", "จาก", "กับ", "ทำงาน", "วันนี้", "เมื่อวาน", "พรุ่งนี้"]


def sentiment_docs(n: int, seed: int = 0) -> list[tuple[str, str]]:
    """Unspaced Thai review snippets labelled pos / neg / neu."""
    rng = np.random.default_rng(seed)
    docs = []
    for k in range(n):
        label = ["pos", "neg", "neu"][k % 3]
        words = list(rng.choice(FILLER, size=int(rng.integers(3, 6))))
        if label == "pos":
            words += list(rng.choice(POSITIVE, size=2))
        elif label == "neg":
            words += list(rng.choice(NEGATIVE, size=2))
        rng.shuffle(words)
        docs.append(("".join(words), label))
    return docs


def multilabel_docs(n: int, seed: int = 0) -> list[tuple[str, list[str]]]:
    rng = np.random.default_rng(seed)
    docs = []
    for _ in range(n):
        labels = []
        words = list(rng.choice(FILLER, size=3))
        if rng.random() < 0.5:
            labels.append("food")
            words += ["อาหาร", "อร่อย"]
        if rng.random() < 0.5:
            labels.append("price")
            words += ["ราคา", "ถูก"]
        rng.shuffle(words)
        docs.append(("".join(words), labels))
    return docs


def ner_sequences(n: int, seed: int = 0) -> list[tuple[list[str], list[str]]]:
    """Token/IOB-tag pairs; organisations span two tokens."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        toks, tags = [], []
        for _ in range(int(rng.integers(2, 5))):
            r = rng.random()
            if r < 0.25:
                toks.append(str(rng.choice(PERSONS)))
                tags.append("B-PER")
            elif r < 0.45:
                toks.append(str(rng.choice(LOCATIONS)))
                tags.append("B-LOC")
            elif r < 0.6:
                toks += [str(rng.choice(ORGS)), str(rng.choice(["สมชาย", "กรุงเทพ", "ไทย"]))]
                tags += ["B-ORG", "I-ORG"]
            else:
                toks.append(str(rng.choice(CONTEXT)))
                tags.append("O")
        out.append((toks, tags))
    return out


def write_lexicon(path: Path) -> Path:
    path.write_text("# toy Thai lexicon\n" + "\n".join(WORDS + ["ไทย"]) + "\n", encoding="utf-8")
    return path


def write_tsv(path: Path, docs) -> Path:
    lines = ["text\tlabel"]
    for text, label in docs:
        lines.append(f"{text}\t{label if isinstance(label, str) else ','.join(label)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_conll(path: Path, seqs) -> Path:
    blocks = ["".join(f"{t}\t{g}\n" for t, g in zip(toks, tags)) for toks, tags in seqs]
    path.write_text("\n".join(blocks), encoding="utf-8")
    return path


def write_jsonl(path: Path, texts) -> Path:
    path.write_text("".join(json.dumps({"id": str(i), "text": t}, ensure_ascii=False) + "\n"
                            for i, t in enumerate(texts)), encoding="utf-8")
    return path


def random_crf(rng, n_labels: int, token_seqs, cfg=None, scale: float = 1.0):
    """A CRF over every feature the given sequences fire, with random weights."""
    from thaiseq.crf import CrfConfig, CrfModel, extract_features

    cfg = cfg or CrfConfig()
    feats = sorted({f for toks in token_seqs for t in range(len(toks)) for f in extract_features(toks, t, cfg)})
    index = {f: i for i, f in enumerate(feats)}
    W = rng.normal(scale=scale, size=(len(feats), n_labels))
    trans = rng.normal(scale=scale, size=(n_labels, n_labels))
    labels = [f"y{k}" for k in range(n_labels)]
    return CrfModel(labels, index, W, trans, cfg)


def crf_weight_dict(model) -> dict:
    return {(f, k): model.state_weights[i, k]
            for f, i in model.feature_index.items() for k in range(model.n_labels)}
