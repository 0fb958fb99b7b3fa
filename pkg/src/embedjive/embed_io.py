"""Read, align, normalize, and write word-embedding matrices in text formats.

Two formats are supported:

* ``glove-text``: one record per line, ``word v1 v2 ... vd``.
* ``word2vec-text``: the same, preceded by a header line ``n d``.

Matrices are stored feature-major: ``data[j, i]`` is feature ``j`` of word
``vocab[i]``, so a block is a dense ``p x n`` array with the vocabulary along
the columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("glove-text", "word2vec-text")


class FormatError(ValueError):
    """An embedding file violates its declared text format."""


@dataclass(eq=False)
class EmbeddingMatrix:
    """Dense embedding block with an ordered vocabulary.

    Invariants enforced on construction: the vocabulary has no duplicates and
    matches the column count, all entries are finite, and both dimensions are
    at least 1.
    """

    vocab: list[str]
    data: np.ndarray
    name: str = "embedding"
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError(f"{self.name}: data must be 2-D, got shape {self.data.shape}")
        p, n = self.data.shape
        if p < 1 or n < 1:
            raise ValueError(f"{self.name}: empty embedding matrix (shape {p}x{n})")
        if len(self.vocab) != n:
            raise ValueError(f"{self.name}: vocab length {len(self.vocab)} != column count {n}")
        self._index = {w: i for i, w in enumerate(self.vocab)}
        if len(self._index) != n:
            raise ValueError(f"{self.name}: vocabulary contains duplicate words")
        if not np.isfinite(self.data).all():
            raise ValueError(f"{self.name}: non-finite entries in embedding data")

    @property
    def dim(self) -> int:
        """Number of features (rows)."""
        return self.data.shape[0]

    @property
    def n_words(self) -> int:
        return self.data.shape[1]

    def column_index(self, word: str) -> int | None:
        return self._index.get(word)


@dataclass
class AlignmentReport:
    shared_vocab: list[str]
    dropped_per_source: list[int]
    n_shared: int


def _looks_like_header(parts: list[str]) -> bool:
    return len(parts) == 2 and all(t.isdigit() for t in parts)


def parse_embedding(path: str | Path, fmt: str = "auto") -> EmbeddingMatrix:
    """Parse a text embedding file into an :class:`EmbeddingMatrix`.

    ``fmt`` is one of ``glove-text``, ``word2vec-text`` or ``auto``; auto
    sniffing treats a two-token all-integer first line as a word2vec header.
    Word order is preserved; on duplicate words the first occurrence wins and
    the number of skipped repeats is logged.
    """
    path = Path(path)
    if fmt not in ("auto", *FORMATS):
        raise ValueError(f"unknown embedding format {fmt!r}; expected one of {('auto', *FORMATS)}")

    vocab: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    duplicates = 0
    dim: int | None = None
    declared_words: int | None = None
    header_pending = fmt != "glove-text"

    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if header_pending:
                header_pending = False
                if fmt == "word2vec-text" or _looks_like_header(parts):
                    if not _looks_like_header(parts):
                        raise FormatError(f"{path}: line {lineno}: expected word2vec header 'n d', got {line.strip()!r}")
                    declared_words, dim = int(parts[0]), int(parts[1])
                    if dim < 1:
                        raise FormatError(f"{path}: line {lineno}: header declares dimension {dim}")
                    continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise FormatError(f"{path}: line {lineno}: no vector values")
            if len(values) != dim:
                raise FormatError(f"{path}: line {lineno}: expected {dim} values, got {len(values)}")
            try:
                vec = np.array(values, dtype=float)
            except ValueError:
                bad = next(t for t in values if not _parses_as_float(t))
                raise FormatError(f"{path}: line {lineno}: non-numeric value {bad!r}") from None
            if word in seen:
                duplicates += 1
                continue
            seen.add(word)
            vocab.append(word)
            rows.append(vec)

    if not vocab:
        raise FormatError(f"{path}: empty embedding file")
    if duplicates:
        logger.warning("%s: skipped %d duplicate words (first occurrence kept)", path, duplicates)
    if declared_words is not None and declared_words != len(vocab) + duplicates:
        logger.warning("%s: header declares %d words, file contains %d", path, declared_words, len(vocab) + duplicates)
    return EmbeddingMatrix(vocab=vocab, data=np.vstack(rows).T, name=path.stem)


def _parses_as_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def write_embedding(matrix: EmbeddingMatrix, path: str | Path, fmt: str = "glove-text") -> None:
    """Write ``matrix`` as text; ``parse_embedding`` recovers it exactly.

    Values are printed in shortest-round-trip scientific notation padded to at
    least 9 significant digits, so write->parse is lossless.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown embedding format {fmt!r}; expected one of {FORMATS}")
    for word in matrix.vocab:
        if not word:
            raise ValueError("word is empty; text formats cannot represent it")
        if any(c.isspace() for c in word):
            raise ValueError(f"word contains whitespace: {word!r}")
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if fmt == "word2vec-text":
            fh.write(f"{matrix.n_words} {matrix.dim}\n")
        columns = matrix.data.T
        for word, vec in zip(matrix.vocab, columns):
            fh.write(word)
            for v in vec:
                fh.write(" ")
                fh.write(np.format_float_scientific(v, unique=True, min_digits=8, trim="k"))
            fh.write("\n")


def align_vocabularies(inputs: list[EmbeddingMatrix]) -> tuple[list[EmbeddingMatrix], AlignmentReport]:
    """Restrict all blocks to their shared vocabulary, in lexicographic order.

    The canonical order makes alignment deterministic across runs; every
    returned block carries an identical vocabulary list.
    """
    if len(inputs) < 2:
        raise ValueError("need at least 2 embeddings to align")
    shared = set(inputs[0].vocab)
    for m in inputs[1:]:
        shared &= set(m.vocab)
    if not shared:
        raise ValueError("no shared vocabulary")
    order = sorted(shared)
    aligned = []
    for m in inputs:
        cols = np.fromiter((m._index[w] for w in order), dtype=np.intp, count=len(order))
        aligned.append(EmbeddingMatrix(vocab=list(order), data=m.data[:, cols], name=m.name))
    report = AlignmentReport(
        shared_vocab=list(order),
        dropped_per_source=[m.n_words - len(order) for m in inputs],
        n_shared=len(order),
    )
    return aligned, report


def preprocess(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Center every feature row and scale the block to unit Frobenius norm.

    Idempotent up to rounding.  Raises on blocks that are constant along the
    vocabulary axis (nothing left after centering).
    """
    if matrix.n_words < 2:
        raise ValueError(f"{matrix.name}: need at least 2 words to center")
    centered = matrix.data - matrix.data.mean(axis=1, keepdims=True)
    scale = float(np.linalg.norm(centered))
    if scale <= 1e-13 * float(np.linalg.norm(matrix.data)):
        raise ValueError(f"{matrix.name}: degenerate block: zero variance")
    return EmbeddingMatrix(vocab=list(matrix.vocab), data=centered / scale, name=matrix.name)
