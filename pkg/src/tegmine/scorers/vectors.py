"""Dense vector tables and cosine-based scorers."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..paths import MalformedPathError, tokenize
from .base import Scorer


class VectorTableError(ValueError):
    pass


class VectorTable:
    """token → fixed-dimension float vector, text serialized.

    The text format is the conventional one: a "count dim" header line,
    then one "token v1 ... vd" row per entry.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise VectorTableError("dimension must be positive")
        self.dim = dim
        self._vecs: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._vecs)

    def __contains__(self, token: str) -> bool:
        return token in self._vecs

    def get(self, token: str) -> np.ndarray | None:
        return self._vecs.get(token)

    def put(self, token: str, vec) -> None:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise VectorTableError(f"vector for {token!r} has shape {arr.shape}, want ({self.dim},)")
        if not np.all(np.isfinite(arr)):
            raise VectorTableError(f"non-finite entries in vector for {token!r}")
        self._vecs[token] = arr

    def tokens(self) -> list[str]:
        return sorted(self._vecs)

    def save_text(self, path: str | Path) -> None:
        lines = ["%d %d" % (len(self._vecs), self.dim)]
        for token in self.tokens():
            vec = self._vecs[token]
            lines.append(token + " " + " ".join("%.8g" % x for x in vec))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_text(cls, path: str | Path) -> "VectorTable":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise VectorTableError(f"{path}: empty vector file")
        head = lines[0].split()
        if len(head) != 2:
            raise VectorTableError(f"{path}: bad header {lines[0]!r}")
        count, dim = int(head[0]), int(head[1])
        table = cls(dim)
        for lineno, line in enumerate(lines[1 : count + 1], 2):
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise VectorTableError(f"{path}:{lineno}: expected {dim + 1} fields")
            table.put(parts[0], [float(x) for x in parts[1:]])
        if len(table) != count:
            raise VectorTableError(f"{path}: header claims {count} rows, found {len(table)}")
        return table


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def avg_vector(tokens, vt: VectorTable) -> np.ndarray | None:
    vecs = [vt.get(t) for t in tokens]
    vecs = [v for v in vecs if v is not None]
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def avg_vector_cosine(p_tokens, h_tokens, vt: VectorTable) -> float:
    """Cosine of the two sides' mean vectors; −1 when a side is all-OOV."""
    p = avg_vector(p_tokens, vt)
    h = avg_vector(h_tokens, vt)
    if p is None or h is None:
        return -1.0
    return cosine(p, h)


def path_lemmas(path: str) -> list[str]:
    try:
        return [t.text for t in tokenize(path) if t.kind == "lemma"]
    except MalformedPathError:
        return []


def typed_token(path: str, types) -> str:
    return "%s|%s|%s" % (path, types[0], types[1])


class AvgCosineScorer(Scorer):
    """Cosine between averaged word vectors of the two paths' lemmas."""

    abstain = -1.0

    def __init__(self, vt: VectorTable, name: str = "w2v"):
        self.vt = vt
        self.name = name

    def score(self, cand) -> float:
        return avg_vector_cosine(
            path_lemmas(cand.premise_path), path_lemmas(cand.hypothesis_path), self.vt
        )


class RelationCosineScorer(Scorer):
    """Cosine between whole-relation embeddings (typed or untyped keys)."""

    abstain = -1.0

    def __init__(self, vt: VectorTable, typed: bool, name: str | None = None):
        self.vt = vt
        self.typed = typed
        self.name = name or ("typed_rel" if typed else "untyped_rel")

    def _token(self, path: str, types) -> str:
        return typed_token(path, types) if self.typed else path

    def score(self, cand) -> float:
        p = self.vt.get(self._token(cand.premise_path, cand.premise_types))
        h = self.vt.get(self._token(cand.hypothesis_path, cand.hypothesis_types))
        if p is None or h is None:
            return -1.0
        return cosine(p, h)
