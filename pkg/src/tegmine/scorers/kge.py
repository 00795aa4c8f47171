"""Translation and complex-bilinear knowledge-graph embedding trainers.

Triples come straight from the event graph (head entity, relation key,
tail entity).  Candidate scoring afterwards is the cosine between relation
vectors, so both trainers just have to produce a relation VectorTable.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..teg import TegStore
from .corpus import TrainingError, _sigmoid
from .vectors import VectorTable, typed_token


@dataclass(frozen=True)
class KgeConfig:
    dim: int = 20
    epochs: int = 50
    lr: float = 0.05
    margin: float = 1.0
    seed: int = 1
    l2: float = 0.0  # only used by the complex model

    def manifest(self) -> dict[str, str]:
        return {"kge_%s" % k: repr(v) for k, v in sorted(asdict(self).items())}


def teg_triples(store: TegStore, typed: bool) -> list[tuple[str, str, str]]:
    triples = []
    if typed:
        for t in sorted(store.typed, key=lambda t: (t.base, t.slot_types)):
            rel = typed_token(store.paths[t.base].path, t.slot_types)
            for e1, e2 in t.extension.sorted_pairs():
                triples.append((e1, rel, e2))
    else:
        for rid in sorted(store.relations):
            rel = store.paths[rid].path
            for e1, e2 in store.relations[rid].sorted_pairs():
                triples.append((e1, rel, e2))
    return triples


# --- TransE ------------------------------------------------------------------


def transe_distance(h: np.ndarray, r: np.ndarray, t: np.ndarray) -> float:
    diff = h + r - t
    return float(np.dot(diff, diff))


def transe_loss_and_grads(h, r, t, h_neg, t_neg, margin: float):
    """Hinge loss max(0, γ + d(h,r,t) − d(h',r,t')) with squared L2 d.

    Returns (loss, grads) with grads keyed h/r/t/h_neg/t_neg; all-zero
    grads when the hinge is inactive.
    """
    pos_diff = h + r - t
    neg_diff = h_neg + r - t_neg
    slack = margin + float(np.dot(pos_diff, pos_diff)) - float(np.dot(neg_diff, neg_diff))
    zeros = np.zeros_like(h)
    if slack <= 0.0:
        return 0.0, {"h": zeros, "r": zeros, "t": zeros, "h_neg": zeros, "t_neg": zeros}
    return slack, {
        "h": 2.0 * pos_diff,
        "r": 2.0 * (pos_diff - neg_diff),
        "t": -2.0 * pos_diff,
        "h_neg": -2.0 * neg_diff,
        "t_neg": 2.0 * neg_diff,
    }


def _index_triples(triples):
    if not triples:
        raise TrainingError("no triples to train on")
    entities = sorted({e for h, _, t in triples for e in (h, t)})
    relations = sorted({r for _, r, _ in triples})
    if len(entities) < 2:
        raise TrainingError("need at least two entities for corruption sampling")
    ent_ix = {e: i for i, e in enumerate(entities)}
    rel_ix = {r: i for i, r in enumerate(relations)}
    encoded = np.array([(ent_ix[h], rel_ix[r], ent_ix[t]) for h, r, t in triples])
    return entities, relations, encoded


def train_transe(
    triples: list[tuple[str, str, str]], cfg: KgeConfig | None = None
) -> tuple[VectorTable, VectorTable, list[float]]:
    cfg = cfg or KgeConfig()
    entities, relations, encoded = _index_triples(triples)
    rng = np.random.default_rng(cfg.seed)
    bound = 6.0 / np.sqrt(cfg.dim)
    ent = rng.uniform(-bound, bound, (len(entities), cfg.dim))
    rel = rng.uniform(-bound, bound, (len(relations), cfg.dim))

    losses = []
    for _ in range(cfg.epochs):
        # re-normalize entities, then run one pass in a shuffled order
        norms = np.linalg.norm(ent, axis=1, keepdims=True)
        np.divide(ent, norms, out=ent, where=norms > 1.0)
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for k in order:
            h_i, r_i, t_i = encoded[k]
            corrupt_head = rng.random() < 0.5
            cand = int(rng.integers(len(entities)))
            hn_i, tn_i = (cand, t_i) if corrupt_head else (h_i, cand)
            loss, grads = transe_loss_and_grads(
                ent[h_i], rel[r_i], ent[t_i], ent[hn_i], ent[tn_i], cfg.margin
            )
            epoch_loss += loss
            if loss > 0.0:
                ent[h_i] -= cfg.lr * grads["h"]
                rel[r_i] -= cfg.lr * grads["r"]
                ent[t_i] -= cfg.lr * grads["t"]
                ent[hn_i] -= cfg.lr * grads["h_neg"]
                ent[tn_i] -= cfg.lr * grads["t_neg"]
        losses.append(epoch_loss)

    ent_table = VectorTable(cfg.dim)
    for e, i in zip(entities, range(len(entities))):
        ent_table.put(e, ent[i])
    rel_table = VectorTable(cfg.dim)
    for r, i in zip(relations, range(len(relations))):
        rel_table.put(r, rel[i])
    return ent_table, rel_table, losses


# --- ComplEx -----------------------------------------------------------------


def complex_score(h_re, h_im, r_re, r_im, t_re, t_im) -> float:
    """Re(⟨h, r, conj(t)⟩) written out in real arithmetic."""
    return float(
        np.sum(
            (h_re * r_re - h_im * r_im) * t_re + (h_re * r_im + h_im * r_re) * t_im
        )
    )


def complex_loss_and_grads(h_re, h_im, r_re, r_im, t_re, t_im, label: int):
    """Logistic loss log(1+exp(−y·φ)) and exact gradients for one triple."""
    phi = complex_score(h_re, h_im, r_re, r_im, t_re, t_im)
    y = float(label)
    loss = float(np.logaddexp(0.0, -y * phi))
    coeff = -y * _sigmoid(-y * phi)
    grads = {
        "h_re": coeff * (r_re * t_re + r_im * t_im),
        "h_im": coeff * (-r_im * t_re + r_re * t_im),
        "r_re": coeff * (h_re * t_re + h_im * t_im),
        "r_im": coeff * (h_re * t_im - h_im * t_re),
        "t_re": coeff * (h_re * r_re - h_im * r_im),
        "t_im": coeff * (h_re * r_im + h_im * r_re),
    }
    return loss, grads


def train_complex(
    triples: list[tuple[str, str, str]], cfg: KgeConfig | None = None
) -> tuple[VectorTable, VectorTable, list[float]]:
    """Returns entity and relation tables with re/im halves concatenated."""
    cfg = cfg or KgeConfig()
    entities, relations, encoded = _index_triples(triples)
    rng = np.random.default_rng(cfg.seed)
    scale = 0.1
    e_re = rng.normal(0, scale, (len(entities), cfg.dim))
    e_im = rng.normal(0, scale, (len(entities), cfg.dim))
    r_re = rng.normal(0, scale, (len(relations), cfg.dim))
    r_im = rng.normal(0, scale, (len(relations), cfg.dim))

    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for k in order:
            h_i, rl_i, t_i = encoded[k]
            cand = int(rng.integers(len(entities)))
            corrupt_head = rng.random() < 0.5
            hn_i, tn_i = (cand, t_i) if corrupt_head else (h_i, cand)
            for (hh, tt, y) in ((h_i, t_i, 1), (hn_i, tn_i, -1)):
                epoch_loss += _complex_step(
                    e_re, e_im, r_re, r_im, hh, rl_i, tt, y, cfg
                )
        losses.append(epoch_loss)

    ent_table = VectorTable(2 * cfg.dim)
    for e, i in zip(entities, range(len(entities))):
        ent_table.put(e, np.concatenate([e_re[i], e_im[i]]))
    rel_table = VectorTable(2 * cfg.dim)
    for r, i in zip(relations, range(len(relations))):
        rel_table.put(r, np.concatenate([r_re[i], r_im[i]]))
    return ent_table, rel_table, losses


def _complex_step(e_re, e_im, r_re, r_im, h_i, rl_i, t_i, label, cfg):
    loss, g = complex_loss_and_grads(
        e_re[h_i], e_im[h_i], r_re[rl_i], r_im[rl_i], e_re[t_i], e_im[t_i], label
    )
    lr, l2 = cfg.lr, cfg.l2
    e_re[h_i] -= lr * (g["h_re"] + l2 * e_re[h_i])
    e_im[h_i] -= lr * (g["h_im"] + l2 * e_im[h_i])
    r_re[rl_i] -= lr * (g["r_re"] + l2 * r_re[rl_i])
    r_im[rl_i] -= lr * (g["r_im"] + l2 * r_im[rl_i])
    e_re[t_i] -= lr * (g["t_re"] + l2 * e_re[t_i])
    e_im[t_i] -= lr * (g["t_im"] + l2 * e_im[t_i])
    return loss
