"""Numerical kernels: covariance, Pearson correlation and a Jacobi SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, NonConvergence, RankOutOfRange, ZeroVariance

MAX_SWEEPS = 100


def _pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise LengthMismatch(f"lengths differ: {xs.shape} vs {ys.shape}")
    if xs.size == 0:
        raise EmptyInput("empty input")
    return xs, ys


def population_covariance(xs, ys) -> float:
    """Covariance normalised by ``n`` rather than ``n - 1``."""
    xs, ys = _pair(xs, ys)
    return float(np.mean((xs - xs.mean()) * (ys - ys.mean())))


def pearson(xs, ys) -> float:
    xs, ys = _pair(xs, ys)
    if xs.size < 2:
        raise EmptyInput("pearson needs at least two observations")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = np.sqrt(np.mean(dx * dx))
    sy = np.sqrt(np.mean(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("constant input, correlation undefined")
    r = np.mean(dx * dy) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


def pearson_rows(matrix: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pearson correlation of every row of ``matrix`` with ``y``.

    Rows (or ``y``) with zero variance yield NaN instead of raising.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dm = matrix - matrix.mean(axis=1, keepdims=True)
    dy = y - y.mean()
    n = y.size
    sm = np.sqrt((dm * dm).sum(axis=1) / n)
    sy = np.sqrt((dy * dy).sum() / n)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (dm @ dy) / n / (sm * sy)
    r[(sm == 0.0) | (sy == 0.0)] = np.nan
    return np.clip(r, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.Vt


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: ``n - 1`` rounds of disjoint column pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.int64), np.array(qs, dtype=np.int64)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi_square(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Jacobi on a square ``R``: returns ``W = R V`` and ``V``."""
    n = R.shape[1]
    W = R.copy()
    V = np.eye(n)
    if n < 2 or not W.any():
        return W, V
    threshold = n * np.finfo(float).eps
    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            wp, wq = W[:, p], W[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            active = np.abs(gamma) > threshold * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for M in (W, V):
                mp, mq = M[:, p], M[:, q]
                M[:, p] = c * mp - s * mq
                M[:, q] = s * mp + c * mq
        if not rotated:
            return W, V
    raise NonConvergence(f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")


def _complete_basis(U: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace the columns of ``U`` not flagged ``good`` with an orthonormal completion."""
    n = U.shape[0]
    keep = U[:, good]
    Q, _ = np.linalg.qr(np.hstack([keep, np.eye(n)]))
    extra = Q[:, keep.shape[1] :]
    out = U.copy()
    out[:, ~good] = extra[:, : int((~good).sum())]
    return out


def svd(matrix) -> SvdResult:
    """Thin SVD via QR preconditioning followed by parallel one-sided Jacobi.

    Rotations sweep a round-robin ordering of column pairs and stop once a
    full sweep finds every pair orthogonal to ``n * eps`` relative to the
    column norms, which also drives the off-diagonal Gram mass far below
    ``1e-12`` of the input's.  Raises :class:`NonConvergence` after 100
    sweeps.  Deterministic for a fixed input.
    """
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("svd expects a 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("svd input must be finite")
    m, n = A.shape
    if m < n:
        res = svd(A.T)
        return SvdResult(res.Vt.T.copy(), res.singular_values, res.U.T.copy())
    if n == 0:
        return SvdResult(np.zeros((m, 0)), np.zeros(0), np.zeros((0, 0)))
    Q, R = np.linalg.qr(A)
    W, V = _jacobi_square(R)
    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, W, V = sigma[order], W[:, order], V[:, order]
    tiny = sigma <= sigma[0] * n * np.finfo(float).eps
    good = ~tiny
    U_r = np.zeros_like(W)
    U_r[:, good] = W[:, good] / sigma[good]
    if tiny.any():
        U_r = _complete_basis(U_r, good)
    return SvdResult(Q @ U_r, sigma, V.T.copy())


def truncate_rank(result: SvdResult, k: int) -> SvdResult:
    if not 1 <= k <= result.rank:
        raise RankOutOfRange(f"rank {k} outside [1, {result.rank}]")
    return SvdResult(result.U[:, :k].copy(), result.singular_values[:k].copy(), result.Vt[:k].copy())
