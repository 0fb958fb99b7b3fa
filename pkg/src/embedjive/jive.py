"""Alternating joint/individual decomposition of stacked embedding blocks.

K blocks sharing the word axis are modeled as

    X_i = B_i @ J + D_i @ H_i + E_i

with one joint row space (rows of ``J``) common to all blocks and a
block-specific individual part ``D_i @ H_i`` whose row space is orthogonal to
the joint one.  Fitting alternates two exact subproblems: re-estimate the
joint row space from the stacked blocks with the individual parts removed,
then re-truncate each block's leftover to its individual rank.  Each sweep
solves both subproblems exactly, so the recorded squared residual never
increases.

With ``enforce_orthogonality`` (the default) the joint part is the projection
of the data onto the current joint row space and each individual leftover is
projected off that row space before truncation; ``J_i @ A_i' = 0`` then holds
at every sweep and the per-block energies split additively.  With the flag
off, the joint part is the plain rank-r truncation of the deflated stack and
no orthogonality between joint and individual parts is maintained.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from embedjive.embed_io import EmbeddingMatrix
from embedjive.linalg import NumericError, truncated_svd

# Residuals at or below this fraction of ||X||_F^2 count as an exact fit; the
# relative-decrease test would divide rounding noise by rounding noise there.
EXACT_FIT_REL_TOL = 1e-24


@dataclass
class JiveConfig:
    """Decomposition settings: ranks, stopping rule, constraint handling."""

    joint_rank: int
    individual_ranks: Sequence[int]
    epsilon: float = 1e-6
    max_iter: int = 500
    enforce_orthogonality: bool = True
    seed: int | None = None

    def validate(self, block_shapes: Sequence[tuple[int, int]]) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if len(self.individual_ranks) != len(block_shapes):
            raise ValueError(
                f"{len(self.individual_ranks)} individual ranks for {len(block_shapes)} blocks")
        if self.joint_rank < 0:
            raise ValueError(f"joint rank must be >= 0, got {self.joint_rank}")
        max_joint = min(min(p, n) for p, n in block_shapes)
        if self.joint_rank > max_joint:
            raise ValueError(f"joint rank {self.joint_rank} exceeds smallest block dimension {max_joint}")
        for i, (r_i, (p, n)) in enumerate(zip(self.individual_ranks, block_shapes)):
            if r_i < 0 or r_i > min(p, n):
                raise ValueError(f"individual rank {r_i} out of range for block {i} ({p}x{n})")


@dataclass
class FitDiagnostics:
    relative_changes: list[float]
    wall_time_s: float
    final_residual: float


@dataclass
class VarianceReport:
    """Frobenius-energy split per block, in percent of the block's energy."""

    block_names: list[str]
    joint_pct: list[float]
    individual_pct: list[float]
    residual_pct: list[float]
    joint_rank: int
    individual_ranks: list[int]

    def __post_init__(self) -> None:
        for values in (self.joint_pct, self.individual_pct, self.residual_pct):
            for v in values:
                if not -1e-6 <= v <= 100.0 + 1e-6:
                    raise ValueError(f"percentage {v} outside [0, 100]")


@dataclass(eq=False)
class JiveResult:
    """Fitted factors plus the fit trace.

    ``joint_basis`` is the r x n joint score matrix (orthogonal rows scaled by
    the joint singular values) and ``joint_vt`` the same rows normalized.
    ``loadings[i] @ joint_basis`` reconstructs block i's joint part; the
    stacked loadings are column-orthonormal.  ``individual_scores[i]`` carries
    the singular-value scale of the individual part, whose left factors
    ``individual_loadings[i]`` are column-orthonormal per block.
    """

    joint_basis: np.ndarray
    joint_vt: np.ndarray
    loadings: list[np.ndarray]
    individual_loadings: list[np.ndarray]
    individual_scores: list[np.ndarray]
    residuals: list[np.ndarray]
    residual_history: list[float]
    converged: bool
    iterations: int
    block_names: list[str]
    block_sq_norms: list[float]
    config: JiveConfig
    diagnostics: FitDiagnostics | None = field(default=None, repr=False)

    @property
    def n_blocks(self) -> int:
        return len(self.loadings)

    @property
    def joint_rank(self) -> int:
        return self.joint_basis.shape[0]

    @property
    def individual_ranks(self) -> list[int]:
        return [h.shape[0] for h in self.individual_scores]

    def joint_block(self, i: int) -> np.ndarray:
        return self.loadings[i] @ self.joint_basis

    def individual_block(self, i: int) -> np.ndarray:
        return self.individual_loadings[i] @ self.individual_scores[i]


def _as_block_array(block, i: int = 0) -> tuple[np.ndarray, str]:
    """Accept an :class:`EmbeddingMatrix` or a plain 2-D array as a block."""
    if isinstance(block, EmbeddingMatrix):
        arr, name = block.data, block.name
    else:
        arr, name = np.asarray(block, dtype=float), f"block{i}"
    if arr.ndim != 2:
        raise ValueError(f"block {i} must be a 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NumericError(f"block {i} contains non-finite entries")
    return arr, name


def _block_arrays(blocks) -> tuple[list[np.ndarray], list[str]]:
    pairs = [_as_block_array(block, i) for i, block in enumerate(blocks)]
    arrays = [arr for arr, _ in pairs]
    names = [name for _, name in pairs]
    if len(arrays) < 2:
        raise ValueError("need at least 2 blocks")
    n = arrays[0].shape[1]
    for i, arr in enumerate(arrays):
        if arr.shape[1] != n:
            raise ValueError(f"block {i} has {arr.shape[1]} columns, expected {n}")
    vocabs = [b.vocab for b in blocks if isinstance(b, EmbeddingMatrix)]
    if len(vocabs) == len(arrays) and any(v != vocabs[0] for v in vocabs[1:]):
        raise ValueError("blocks have mismatched vocabularies; align them first")
    return arrays, names


def _fro2(m: np.ndarray) -> float:
    return float(np.vdot(m, m).real)


def _row_basis(m: np.ndarray, r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((0, m.shape[1]))
    return truncated_svd(m, r).Vt


def _rows_onto(m: np.ndarray, vt: np.ndarray) -> np.ndarray:
    if vt.shape[0] == 0:
        return np.zeros_like(m)
    return (m @ vt.T) @ vt


def _individual_factors(leftover: np.ndarray, rank: int) -> tuple[np.ndarray, np.ndarray]:
    p, n = leftover.shape
    if rank == 0:
        return np.zeros((p, 0)), np.zeros((0, n))
    svd = truncated_svd(leftover, rank)
    return svd.U, svd.S[:, None] * svd.Vt


def jive_init(blocks, config: JiveConfig) -> JiveResult:
    """Initial state: joint part from one stacked truncation, individual parts
    from per-block truncations of the leftovers, residual recorded."""
    return _run(blocks, config, run_sweeps=False)


def jive_fit(blocks, config: JiveConfig) -> JiveResult:
    """Alternate joint and individual updates until the relative residual
    decrease falls below ``config.epsilon`` or ``config.max_iter`` sweeps."""
    return _run(blocks, config, run_sweeps=True)


def _run(blocks, config: JiveConfig, run_sweeps: bool) -> JiveResult:
    arrays, names = _block_arrays(blocks)
    config.validate([a.shape for a in arrays])
    start = time.perf_counter()

    stacked = np.vstack(arrays)
    offsets = np.concatenate([[0], np.cumsum([a.shape[0] for a in arrays])])
    slices = [slice(offsets[i], offsets[i + 1]) for i in range(len(arrays))]
    ranks = [int(r) for r in config.individual_ranks]
    total_sq = _fro2(stacked)
    exact_floor = EXACT_FIT_REL_TOL * total_sq

    vt = _row_basis(stacked, config.joint_rank)
    joint_source = stacked
    joint = _rows_onto(joint_source, vt)
    parts = [_individual_factors(arrays[i] - joint[slices[i]], ranks[i]) for i in range(len(arrays))]
    indiv = np.vstack([d @ h for d, h in parts]) if parts else np.zeros_like(stacked)

    residual_sq = _fro2(stacked - joint - indiv)
    history = [residual_sq]
    rel_changes: list[float] = []
    converged = residual_sq <= exact_floor
    sweeps = 0

    if run_sweeps:
        while not converged and sweeps < config.max_iter:
            sweeps += 1
            deflated = stacked - indiv
            vt = _row_basis(deflated, config.joint_rank)
            joint_source = stacked if config.enforce_orthogonality else deflated
            joint = _rows_onto(joint_source, vt)
            parts = []
            for i in range(len(arrays)):
                leftover = arrays[i] - joint[slices[i]]
                if config.enforce_orthogonality and vt.shape[0]:
                    leftover = leftover - (leftover @ vt.T) @ vt
                parts.append(_individual_factors(leftover, ranks[i]))
            indiv = np.vstack([d @ h for d, h in parts])
            new_sq = _fro2(stacked - joint - indiv)
            if not np.isfinite(new_sq):
                raise NumericError(f"non-finite residual at iteration {sweeps}")
            rel = (residual_sq - new_sq) / residual_sq
            history.append(new_sq)
            rel_changes.append(rel)
            residual_sq = new_sq
            if rel < config.epsilon or residual_sq <= exact_floor:
                converged = True

    diagnostics = FitDiagnostics(
        relative_changes=rel_changes,
        wall_time_s=time.perf_counter() - start,
        final_residual=residual_sq,
    )
    return _extract(
        arrays, names, joint_source, vt, parts, slices, history, converged, sweeps, config, diagnostics
    )


def _extract(arrays, names, joint_source, vt, parts, slices, history, converged, sweeps, config, diagnostics):
    n = arrays[0].shape[1]
    r = vt.shape[0]
    if r:
        # Split the stacked joint part C @ vt into orthonormal loadings and
        # singular-value-scaled scores via an SVD of the small P x r matrix.
        compact = joint_source @ vt.T
        svd = truncated_svd(compact, r)
        joint_vt = svd.Vt @ vt
        joint_basis = svd.S[:, None] * joint_vt
        loadings = [np.ascontiguousarray(svd.U[s]) for s in slices]
    else:
        joint_vt = np.zeros((0, n))
        joint_basis = np.zeros((0, n))
        loadings = [np.zeros((a.shape[0], 0)) for a in arrays]

    individual_loadings = [d for d, _ in parts]
    individual_scores = [h for _, h in parts]
    residuals = [
        arrays[i] - loadings[i] @ joint_basis - individual_loadings[i] @ individual_scores[i]
        for i in range(len(arrays))
    ]
    return JiveResult(
        joint_basis=joint_basis,
        joint_vt=joint_vt,
        loadings=loadings,
        individual_loadings=individual_loadings,
        individual_scores=individual_scores,
        residuals=residuals,
        residual_history=history,
        converged=converged,
        iterations=sweeps,
        block_names=list(names),
        block_sq_norms=[_fro2(a) for a in arrays],
        config=config,
        diagnostics=diagnostics,
    )


def variance_explained(result: JiveResult, blocks) -> VarianceReport:
    """Per-block joint/individual/residual energy as percentages.

    With orthogonality enforced the three parts are mutually orthogonal and
    the percentages sum to 100 up to rounding.
    """
    arrays, _ = _block_arrays(blocks)
    if len(arrays) != result.n_blocks:
        raise ValueError(f"result has {result.n_blocks} blocks, got {len(arrays)}")
    joint_pct, individual_pct, residual_pct = [], [], []
    for i, x in enumerate(arrays):
        x_sq = _fro2(x)
        if x_sq == 0.0:
            raise ValueError(f"block {i} has zero energy")
        joint_pct.append(100.0 * _fro2(result.joint_block(i)) / x_sq)
        individual_pct.append(100.0 * _fro2(result.individual_block(i)) / x_sq)
        residual_pct.append(100.0 * _fro2(result.residuals[i]) / x_sq)
    return VarianceReport(
        block_names=list(result.block_names),
        joint_pct=joint_pct,
        individual_pct=individual_pct,
        residual_pct=residual_pct,
        joint_rank=result.joint_rank,
        individual_ranks=result.individual_ranks,
    )
