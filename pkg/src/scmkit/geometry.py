"""Embedding storage and the shared vector kernels.

Embedding files are text TSV: a header line ``#space <name> dim <d>``
followed by rows ``<kind>\\t<id>\\t<f1> <f2> ... <fd>`` where kind is
``usage`` or ``gloss``.  All arithmetic is 64-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

KINDS = ("usage", "gloss")

NORM_MODES = ("none", "l1", "l2")

DISTANCE_FNS = ("cosine", "euclidean", "manhattan")


class EmbeddingFormatError(ValueError):
    """Raised for malformed embedding files; message carries the row id."""


class MissingEmbeddingError(KeyError):
    def __init__(self, kind: str, item_id: str, space_name: str):
        super().__init__(f"no {kind} embedding for id {item_id!r} in space {space_name!r}")
        self.kind = kind
        self.item_id = item_id


@dataclass
class EmbeddingTable:
    space_name: str
    dim: int
    entries: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def add(self, kind: str, item_id: str, vector: np.ndarray) -> None:
        if kind not in KINDS:
            raise EmbeddingFormatError(f"unknown kind {kind!r} for id {item_id!r}")
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise EmbeddingFormatError(
                f"id {item_id!r}: expected {self.dim} components, got {vector.shape}"
            )
        if not np.all(np.isfinite(vector)):
            raise EmbeddingFormatError(f"id {item_id!r}: non-finite component")
        key = (kind, item_id)
        if key in self.entries:
            raise EmbeddingFormatError(f"duplicate {kind} id {item_id!r}")
        self.entries[key] = vector

    def vector(self, kind: str, item_id: str) -> np.ndarray:
        try:
            return self.entries[(kind, item_id)]
        except KeyError:
            raise MissingEmbeddingError(kind, item_id, self.space_name) from None

    def has(self, kind: str, item_id: str) -> bool:
        return (kind, item_id) in self.entries

    def usage(self, usage_id: str) -> np.ndarray:
        return self.vector("usage", usage_id)

    def gloss(self, sense_id: str) -> np.ndarray:
        return self.vector("gloss", sense_id)


def load_embeddings(lines: Iterable[str]) -> EmbeddingTable:
    """Load an embedding TSV; validates dimensions, kinds and finiteness."""
    it = iter(lines)
    try:
        header = next(it).strip()
    except StopIteration:
        raise EmbeddingFormatError("empty input, expected `#space <name> dim <d>` header") from None
    parts = header.split()
    if len(parts) != 4 or parts[0] != "#space" or parts[2] != "dim":
        raise EmbeddingFormatError(f"bad header {header!r}, expected `#space <name> dim <d>`")
    try:
        dim = int(parts[3])
    except ValueError:
        raise EmbeddingFormatError(f"bad dimension {parts[3]!r}") from None
    if dim <= 0:
        raise EmbeddingFormatError(f"dimension must be positive, got {dim}")
    table = EmbeddingTable(space_name=parts[1], dim=dim)

    for raw in it:
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != 3:
            raise EmbeddingFormatError(f"expected 3 tab-separated fields, got {len(cells)}: {line[:60]!r}")
        kind, item_id, values = cells
        try:
            vector = np.array([float(v) for v in values.split()], dtype=np.float64)
        except ValueError:
            raise EmbeddingFormatError(f"id {item_id!r}: unparseable float component") from None
        table.add(kind, item_id, vector)
    return table


def write_embeddings(table: EmbeddingTable, fp: IO[str]) -> None:
    if not table.space_name or any(ch.isspace() for ch in table.space_name):
        raise EmbeddingFormatError(
            f"space name {table.space_name!r} cannot be written "
            "(must be one non-empty whitespace-free token)"
        )
    fp.write(f"#space {table.space_name} dim {table.dim}\n")
    for (kind, item_id), vec in table.entries.items():
        fp.write(f"{kind}\t{item_id}\t{' '.join(repr(float(x)) for x in vec)}\n")


# --- kernels --------------------------------------------------------------


def _as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {a.shape}")
    return a


def normalize(v, mode: str) -> np.ndarray:
    """Return v unchanged (none), v / sum|v_i| (l1) or v / ||v||_2 (l2)."""
    a = _as_vector(v)
    if mode == "none":
        return a
    if mode == "l1":
        norm = float(np.sum(np.abs(a)))
    elif mode == "l2":
        norm = float(np.sqrt(np.dot(a, a)))
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    if norm == 0.0:
        raise ValueError(f"cannot {mode}-normalize the zero vector")
    return a / norm


def dot(a, b) -> float:
    a, b = _as_vector(a), _as_vector(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def distance(a, b, fn: str) -> float:
    """Cosine (1 - cos similarity), euclidean or manhattan distance."""
    a, b = _as_vector(a), _as_vector(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if fn == "cosine":
        na = math.sqrt(float(np.dot(a, a)))
        nb = math.sqrt(float(np.dot(b, b)))
        if na == 0.0 or nb == 0.0:
            raise ValueError("cosine distance undefined for the zero vector")
        return 1.0 - float(np.dot(a, b)) / (na * nb)
    if fn == "euclidean":
        d = a - b
        return math.sqrt(float(np.dot(d, d)))
    if fn == "manhattan":
        return float(np.sum(np.abs(a - b)))
    raise ValueError(f"unknown distance function {fn!r}")


def cosine_distance_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances, exactly symmetric with a zero diagonal.

    Rows must be non-zero.  Tiny negative values from round-off are clipped.
    """
    x = np.asarray(vectors, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    if np.any(norms == 0.0):
        raise ValueError("cosine distance undefined for the zero vector")
    unit = x / norms[:, None]
    d = 1.0 - unit @ unit.T
    d = (d + d.T) / 2.0
    np.clip(d, 0.0, None, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def stack_vectors(table: EmbeddingTable, kind: str, ids: Iterable[str]) -> np.ndarray:
    """Stack vectors for the given ids into one (n, dim) matrix."""
    rows = [table.vector(kind, item_id) for item_id in ids]
    if not rows:
        return np.empty((0, table.dim), dtype=np.float64)
    return np.vstack(rows)
