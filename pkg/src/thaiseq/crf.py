"""Linear-chain CRF tagger.

Each position fires the string features produced by ``extract_features``
(n-grams inside a padded window around the token).  A path scores

    sum_t sum_{f in feats(t)} W[f, y_t]  +  sum_{t>0} T[y_{t-1}, y_t]

and training maximizes ``loglik - c1 * |theta|_1 - c2 * |theta|_2^2`` over
all of ``theta = (W, T)``, with forward-backward supplying the gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from thaiseq.errors import ConfigError, FitError, FormatError
from thaiseq.optim import minimize_owlqn

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
BIAS = "bias"


@dataclass(frozen=True)
class CrfConfig:
    c1: float = 0.0
    c2: float = 0.0
    max_iter: int = 500
    window: int = 3
    pad_token: str = "xxpad"
    tol: float = 1e-5
    min_freq: int = 1

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigError("c1 and c2 must be non-negative")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")


@dataclass
class TagSequence:
    tokens: list[str]
    tags: list[str]
    scheme: str = "iob"

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise FormatError(f"{len(self.tokens)} tokens but {len(self.tags)} tags")


def extract_features(tokens: Sequence[str], t: int, cfg: CrfConfig = CrfConfig()) -> list[str]:
    """Unigrams, bigrams and trigrams inside the window ``[t-w, t+w]`` plus a bias.

    Out-of-range positions read ``cfg.pad_token``.  Offsets are relative
    to ``t``; n-grams are tagged with the offset of their first token.
    """
    w = cfg.window
    n = len(tokens)
    win = [tokens[i] if 0 <= i < n else cfg.pad_token for i in range(t - w, t + w + 1)]
    feats = []
    for k, tok in enumerate(win):
        feats.append(f"u[{k - w}]={tok}")
    for k in range(len(win) - 1):
        feats.append(f"b[{k - w}]={win[k]}|{win[k + 1]}")
    for k in range(len(win) - 2):
        feats.append(f"t[{k - w}]={win[k]}|{win[k + 1]}|{win[k + 2]}")
    feats.append(BIAS)
    return feats


@dataclass
class CrfModel:
    labels: list[str]
    feature_index: dict[str, int]
    state_weights: np.ndarray  # (n_features, n_labels)
    transition_weights: np.ndarray  # (n_labels, n_labels), [prev, cur]
    config: CrfConfig = field(default_factory=CrfConfig)
    stop_reason: str = ""

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.feature_index)

    def to_dict(self) -> dict:
        feats = sorted(self.feature_index, key=self.feature_index.__getitem__)
        c = self.config
        return {
            "version": FORMAT_VERSION,
            "labels": list(self.labels),
            "features": feats,
            "state_weights": self.state_weights.tolist(),
            "transition_weights": self.transition_weights.tolist(),
            "config": {"c1": c.c1, "c2": c.c2, "max_iter": c.max_iter, "window": c.window,
                       "pad_token": c.pad_token, "tol": c.tol, "min_freq": c.min_freq},
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrfModel":
        if d.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported CRF model version {d.get('version')!r}")
        labels = list(d["labels"])
        W = np.asarray(d["state_weights"], dtype=float).reshape(len(d["features"]), len(labels))
        return cls(
            labels=labels,
            feature_index={f: i for i, f in enumerate(d["features"])},
            state_weights=W,
            transition_weights=np.asarray(d["transition_weights"], dtype=float),
            config=CrfConfig(**d["config"]),
            stop_reason=d.get("stop_reason", ""),
        )


# --- batched sequence encoding ---------------------------------------------------------------

@dataclass
class _Batch:
    """Sequences packed for vectorized forward-backward.

    ``A`` maps each flattened position to its active features; ``offsets``
    delimit sequences inside the flattened axis.
    """

    A: sp.csr_matrix  # (n_positions, n_features)
    lengths: np.ndarray
    offsets: np.ndarray
    gold: np.ndarray | None  # flattened label ids


def _encode(model_index: dict[str, int], seqs: Sequence[Sequence[str]], cfg: CrfConfig, n_features: int) -> tuple:
    rows, cols = [], []
    pos = 0
    for toks in seqs:
        for t in range(len(toks)):
            for f in extract_features(toks, t, cfg):
                j = model_index.get(f)
                if j is not None:
                    rows.append(pos)
                    cols.append(j)
            pos += 1
    data = np.ones(len(rows))
    A = sp.csr_matrix((data, (rows, cols)), shape=(pos, n_features))
    A.sum_duplicates()
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    return A, lengths, offsets


def _make_batch(model: CrfModel, tokens_list, tags_list=None) -> _Batch:
    A, lengths, offsets = _encode(model.feature_index, tokens_list, model.config, model.n_features)
    gold = None
    if tags_list is not None:
        idx = {lab: k for k, lab in enumerate(model.labels)}
        gold = np.array([idx[tag] for tags in tags_list for tag in tags], dtype=np.int64)
    return _Batch(A, lengths, offsets, gold)


def _padded(values: np.ndarray, batch: _Batch, fill: float) -> np.ndarray:
    """Scatter flattened (P, L) rows into (N, Tmax, L)."""
    N = len(batch.lengths)
    T = int(batch.lengths.max()) if N else 0
    out = np.full((N, T, values.shape[1]), fill)
    for i in range(N):
        out[i, :batch.lengths[i]] = values[batch.offsets[i]:batch.offsets[i + 1]]
    return out


def _forward_backward(emit: np.ndarray, lengths: np.ndarray, trans: np.ndarray):
    """Log-space alpha/beta over padded emissions ``emit`` of shape (N, T, L)."""
    N, T, L = emit.shape
    alpha = np.full((N, T, L), -np.inf)
    beta = np.full((N, T, L), -np.inf)
    alpha[:, 0] = emit[:, 0]
    for t in range(1, T):
        alpha[:, t] = logsumexp(alpha[:, t - 1, :, None] + trans[None], axis=1) + emit[:, t]
    last = lengths - 1
    rows = np.arange(N)
    beta[rows, last] = 0.0
    for t in range(T - 2, -1, -1):
        active = t < last
        if not active.any():
            continue
        nxt = beta[active, t + 1] + emit[active, t + 1]
        beta[active, t] = logsumexp(trans[None] + nxt[:, None, :], axis=2)
    log_z = logsumexp(alpha[rows, last], axis=1)
    return alpha, beta, log_z


def _emissions(model: CrfModel, batch: _Batch, W: np.ndarray | None = None) -> np.ndarray:
    W = model.state_weights if W is None else W
    return np.asarray(batch.A @ W)


def log_partition(model: CrfModel, tokens: Sequence[str]) -> float:
    if not tokens:
        raise ValueError("log_partition needs at least one token")
    batch = _make_batch(model, [tokens])
    emit = _padded(_emissions(model, batch), batch, 0.0)
    _, _, log_z = _forward_backward(emit, batch.lengths, model.transition_weights)
    return float(log_z[0])


def log_partition_backward(model: CrfModel, tokens: Sequence[str]) -> float:
    """Partition value read off the backward recursion instead of the forward one."""
    batch = _make_batch(model, [tokens])
    emit = _padded(_emissions(model, batch), batch, 0.0)
    _, beta, _ = _forward_backward(emit, batch.lengths, model.transition_weights)
    return float(logsumexp(beta[0, 0] + emit[0, 0]))


def marginals(model: CrfModel, tokens: Sequence[str]) -> np.ndarray:
    """Per-position label marginals, shape (T, L)."""
    batch = _make_batch(model, [tokens])
    emit = _padded(_emissions(model, batch), batch, 0.0)
    alpha, beta, log_z = _forward_backward(emit, batch.lengths, model.transition_weights)
    return np.exp(alpha[0] + beta[0] - log_z[0])


def path_score(model: CrfModel, tokens: Sequence[str], tags: Sequence[str]) -> float:
    idx = {lab: k for k, lab in enumerate(model.labels)}
    y = [idx[t] for t in tags]
    batch = _make_batch(model, [tokens])
    emit = _emissions(model, batch)
    score = sum(emit[t, y[t]] for t in range(len(y)))
    score += sum(model.transition_weights[y[t - 1], y[t]] for t in range(1, len(y)))
    return float(score)


def viterbi(model: CrfModel, tokens: Sequence[str], scheme: str = "iob") -> TagSequence:
    """Highest-scoring tag path; ties go to the lowest label index."""
    if not tokens:
        return TagSequence([], [], scheme)
    batch = _make_batch(model, [tokens])
    emit = _emissions(model, batch)
    T, L = emit.shape
    trans = model.transition_weights
    delta = emit[0].copy()
    back = np.zeros((T, L), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + trans  # [prev, cur]
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(L)] + emit[t]
    y = [int(np.argmax(delta))]
    for t in range(T - 1, 0, -1):
        y.append(int(back[t, y[-1]]))
    y.reverse()
    return TagSequence(list(tokens), [model.labels[k] for k in y], scheme)


def predict(model: CrfModel, token_seqs: Sequence[Sequence[str]]) -> list[list[str]]:
    return [viterbi(model, toks).tags if toks else [] for toks in token_seqs]


# --- objective and gradient ------------------------------------------------------------------

def _loglik_and_grad(model: CrfModel, batch: _Batch, W: np.ndarray, trans: np.ndarray):
    """Unpenalized log-likelihood and its gradient with respect to (W, trans)."""
    L = W.shape[1]
    flat_emit = np.asarray(batch.A @ W)
    emit = _padded(flat_emit, batch, 0.0)
    alpha, beta, log_z = _forward_backward(emit, batch.lengths, trans)
    N, T, _ = emit.shape

    gold = batch.gold
    gold_emit = flat_emit[np.arange(len(gold)), gold].sum()
    prev_mask = np.ones(len(gold), dtype=bool)
    prev_mask[batch.offsets[:-1][batch.lengths > 0]] = False
    prev_idx = np.nonzero(prev_mask)[0]
    gold_trans = trans[gold[prev_idx - 1], gold[prev_idx]].sum()
    ll = float(gold_emit + gold_trans - log_z.sum())

    # node marginals, flattened back to (P, L)
    node = np.exp(alpha + beta - log_z[:, None, None])
    flat_node = np.concatenate([node[i, :batch.lengths[i]] for i in range(N)]) if N else np.zeros((0, L))
    observed = np.zeros_like(flat_node)
    observed[np.arange(len(gold)), gold] = 1.0
    gW = np.asarray(batch.A.T @ (observed - flat_node))

    # pairwise marginals: exp(alpha[t-1,i] + trans[i,j] + emit[t,j] + beta[t,j] - logZ)
    g_trans = np.zeros_like(trans)
    np.add.at(g_trans, (gold[prev_idx - 1], gold[prev_idx]), 1.0)
    for t in range(1, T):
        active = batch.lengths > t
        if not active.any():
            break
        pair = (alpha[active, t - 1, :, None] + trans[None]
                + (emit[active, t] + beta[active, t])[:, None, :] - log_z[active, None, None])
        g_trans -= np.exp(pair).sum(axis=0)
    return ll, gW, g_trans


def penalized_loglik(model: CrfModel, batch: _Batch, W=None, trans=None) -> float:
    W = model.state_weights if W is None else W
    trans = model.transition_weights if trans is None else trans
    ll, _, _ = _loglik_and_grad(model, batch, W, trans)
    c = model.config
    theta_abs = np.abs(W).sum() + np.abs(trans).sum()
    theta_sq = (W * W).sum() + (trans * trans).sum()
    return ll - c.c1 * theta_abs - c.c2 * theta_sq


def make_batch(model: CrfModel, sequences: Sequence[TagSequence]) -> _Batch:
    return _make_batch(model, [s.tokens for s in sequences], [s.tags for s in sequences])


def crf_gradient(model: CrfModel, batch: Sequence[TagSequence] | _Batch):
    """Gradient of the penalized log-likelihood (ascent direction).

    Returns ``(grad_state, grad_transition)``.  The L1 term contributes
    ``-c1 * sign(theta)``, i.e. zero at exactly-zero weights.
    """
    if not isinstance(batch, _Batch):
        if not batch:
            raise ValueError("crf_gradient needs a non-empty batch")
        batch = make_batch(model, batch)
    _, gW, gT = _loglik_and_grad(model, batch, model.state_weights, model.transition_weights)
    c = model.config
    W, T = model.state_weights, model.transition_weights
    gW = gW - c.c1 * np.sign(W) - 2.0 * c.c2 * W
    gT = gT - c.c1 * np.sign(T) - 2.0 * c.c2 * T
    return gW, gT


# --- training --------------------------------------------------------------------------------

def build_feature_index(sequences: Sequence[TagSequence], cfg: CrfConfig) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in sequences:
        for t in range(len(s.tokens)):
            for f in extract_features(s.tokens, t, cfg):
                counts[f] = counts.get(f, 0) + 1
    feats = sorted(f for f, c in counts.items() if c >= cfg.min_freq)
    return {f: i for i, f in enumerate(feats)}


def train_crf(sequences: Sequence[TagSequence], cfg: CrfConfig = CrfConfig(), labels: Sequence[str] | None = None) -> CrfModel:
    """Fit a CRF by quasi-Newton (orthant-wise when ``c1 > 0``).

    Empty sequences are skipped with a warning.  The returned model's
    ``stop_reason`` records whether the gradient tolerance or the
    iteration cap ended training.
    """
    seqs = [s for s in sequences if len(s.tokens) > 0]
    if len(seqs) < len(sequences):
        logger.warning("skipped %d empty sequences", len(sequences) - len(seqs))
    if not seqs:
        raise FitError("no non-empty training sequences")
    seen = sorted({t for s in seqs for t in s.tags})
    labels = list(labels) if labels is not None else seen
    missing = set(seen) - set(labels)
    if missing:
        raise FitError(f"training tags not in label set: {sorted(missing)}")

    index = build_feature_index(seqs, cfg)
    L, F = len(labels), len(index)
    model = CrfModel(labels, index, np.zeros((F, L)), np.zeros((L, L)), cfg)
    batch = make_batch(model, seqs)
    n_w = F * L

    def unpack(theta):
        return theta[:n_w].reshape(F, L), theta[n_w:].reshape(L, L)

    def fn(theta):
        W, T = unpack(theta)
        ll, gW, gT = _loglik_and_grad(model, batch, W, T)
        f = -ll + cfg.c2 * float(np.dot(theta, theta))
        g = -np.concatenate([gW.ravel(), gT.ravel()]) + 2.0 * cfg.c2 * theta
        return f, g

    last = [np.inf]

    def check_monotone(_x, F_val):
        if cfg.c1 == 0:
            assert F_val <= last[0] + 1e-9 * max(1.0, abs(last[0])), "objective increased on an accepted step"
        last[0] = F_val

    res = minimize_owlqn(fn, np.zeros(n_w + L * L), l1=cfg.c1, max_iter=cfg.max_iter,
                         tol=cfg.tol, callback=check_monotone)
    W, T = unpack(res.x)
    model.state_weights = W.copy()
    model.transition_weights = T.copy()
    model.stop_reason = res.stop_reason
    logger.info("CRF c1=%g c2=%g: %s after %d iterations (|pg|=%.2e)",
                cfg.c1, cfg.c2, res.stop_reason, res.n_iter, res.pg_norm)
    return model
