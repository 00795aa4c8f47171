"""Synthetic corpus lines from the event graph and a skip-gram trainer.

Each extension pair becomes one three-token line — slot-prefixed subject
entity, relation token, slot-prefixed object entity — so relation tokens
acquire embeddings from the entities they cooccur with.  The trainer is a
plain numpy skip-gram with negative sampling; single worker, seeded, so
runs are bit-reproducible.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from ..teg import TegStore
from .vectors import VectorTable, typed_token


class TrainingError(RuntimeError):
    pass


def synthetic_corpus(store: TegStore, typed: bool) -> list[str]:
    """One "e1:<h> <relation> e2:<t>" line per extension pair."""
    lines = []
    if typed:
        for t in sorted(store.typed, key=lambda t: (t.base, t.slot_types)):
            token = typed_token(store.paths[t.base].path, t.slot_types)
            for e1, e2 in t.extension.sorted_pairs():
                lines.append("e1:%s %s e2:%s" % (e1, token, e2))
    else:
        for rid in sorted(store.relations):
            token = store.paths[rid].path
            for e1, e2 in store.relations[rid].sorted_pairs():
                lines.append("e1:%s %s e2:%s" % (e1, token, e2))
    return lines


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_lr: float = 1e-4
    subsample: float = 1e-3
    min_count: int = 1
    seed: int = 1

    def manifest(self) -> dict[str, str]:
        return {"sgns_%s" % k: repr(v) for k, v in sorted(asdict(self).items())}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def sgns_loss_and_grads(v_c: np.ndarray, u_o: np.ndarray, u_neg: np.ndarray):
    """Loss and exact gradients for one (center, context, negatives) step.

    loss = −log σ(u_o·v_c) − Σ_i log σ(−u_i·v_c)
    """
    s_pos = float(np.dot(u_o, v_c))
    s_neg = u_neg @ v_c
    loss = float(np.logaddexp(0.0, -s_pos) + np.sum(np.logaddexp(0.0, s_neg)))
    pos = _sigmoid(s_pos)
    neg_act = _sigmoid(s_neg)
    g_v = (pos - 1.0) * u_o + neg_act @ u_neg
    g_o = (pos - 1.0) * v_c
    g_neg = np.outer(neg_act, v_c)
    return loss, g_v, g_o, g_neg


def train_sgns(lines: list[str], cfg: SgnsConfig | None = None) -> tuple[VectorTable, list[float]]:
    """Train input vectors over the corpus; returns the table and the
    per-epoch summed losses (for convergence checks)."""
    cfg = cfg or SgnsConfig()
    if not lines:
        raise TrainingError("empty corpus")
    counts = Counter(tok for line in lines for tok in line.split())
    vocab = sorted(
        (t for t, c in counts.items() if c >= cfg.min_count),
        key=lambda t: (-counts[t], t),
    )
    if len(vocab) < 2:
        raise TrainingError("vocabulary too small for negative sampling")
    index = {t: i for i, t in enumerate(vocab)}
    freq = np.array([counts[t] for t in vocab], dtype=np.float64)
    total_tokens = float(freq.sum())

    rng = np.random.default_rng(cfg.seed)
    dim = cfg.dim
    syn0 = (rng.random((len(vocab), dim)) - 0.5) / dim
    syn1 = np.zeros((len(vocab), dim))

    noise = freq**0.75
    noise /= noise.sum()
    table_size = max(1000, 50 * len(vocab))

    keep_prob = np.ones(len(vocab))
    if cfg.subsample > 0:
        rel = freq / total_tokens
        with np.errstate(divide="ignore", invalid="ignore"):
            kp = (np.sqrt(rel / cfg.subsample) + 1.0) * (cfg.subsample / rel)
        keep_prob = np.minimum(1.0, kp)

    encoded = [[index[t] for t in line.split() if t in index] for line in lines]
    pair_count = sum(
        1
        for sent in encoded
        for i in range(len(sent))
        for j in range(max(0, i - cfg.window), min(len(sent), i + cfg.window + 1))
        if i != j
    )
    if pair_count == 0:
        raise TrainingError("no training pairs (corpus lines too short?)")
    total_steps = pair_count * cfg.epochs

    losses = []
    step = 0
    for _ in range(cfg.epochs):
        # negative-sampling table rebuilt per epoch from the seeded stream
        neg_table = rng.choice(len(vocab), size=table_size, p=noise)
        neg_pos = 0
        epoch_loss = 0.0
        for sent in encoded:
            kept = [w for w in sent if keep_prob[w] >= 1.0 or rng.random() < keep_prob[w]]
            for i, center in enumerate(kept):
                lo = max(0, i - cfg.window)
                hi = min(len(kept), i + cfg.window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    context = kept[j]
                    negs = []
                    while len(negs) < cfg.negatives:
                        if neg_pos >= table_size:
                            neg_pos = 0
                        cand = int(neg_table[neg_pos])
                        neg_pos += 1
                        if cand != context:
                            negs.append(cand)
                    alpha = max(cfg.min_lr, cfg.lr * (1.0 - step / total_steps))
                    loss, g_v, g_o, g_neg = sgns_loss_and_grads(
                        syn0[center], syn1[context], syn1[negs]
                    )
                    syn0[center] -= alpha * g_v
                    syn1[context] -= alpha * g_o
                    for n, g in zip(negs, g_neg):
                        syn1[n] -= alpha * g
                    epoch_loss += loss
                    step += 1
        losses.append(epoch_loss)

    table = VectorTable(dim)
    for t, i in index.items():
        table.put(t, syn0[i])
    return table, losses
