"""Extreme eigenvalues of the walk matrix ``P = A/d`` and the classical
spectral cross-checks (expander mixing lemma, Cheeger, Tanner).

Two solvers are available:

``exact-dense``
    Full symmetric eigendecomposition of the dense ``P`` (LAPACK via numpy).
``iterative``
    Block orthogonal iteration on ``(I + P)/2`` and ``(I - P)/2`` restricted
    to the complement of the uniform vector, with Rayleigh-Ritz extraction.
    The start block is drawn from a seeded generator, so results are
    deterministic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceFailure, SizeCap
from .graph import (
    RegularGraph,
    SetPair,
    SetLike,
    as_vertex_set,
    connected_components,
    ordered_edge_count,
    vertex_boundary,
)

__all__ = [
    "SpectralSummary",
    "spectrum",
    "alon_boppana_ref",
    "tanner_bound",
    "eml_check",
    "EMLReport",
    "cheeger_check",
    "CheegerReport",
    "tanner_check",
    "TannerReport",
    "DENSE_CAP",
]

DENSE_CAP = 4096
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100_000


def alon_boppana_ref(d: int) -> float:
    """``2 sqrt(d-1) / d``, the Ramanujan threshold for the walk matrix."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return 2.0 * math.sqrt(d - 1) / d


@dataclass(frozen=True)
class SpectralSummary:
    lambda2: float
    lambda_n: float
    method: str
    residual: float
    n: int
    d: int
    eigenvalues: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def lam(self) -> float:
        """Spectral radius ``max(lambda2, |lambda_n|)``."""
        return max(self.lambda2, abs(self.lambda_n))

    @property
    def alon_boppana(self) -> float | None:
        return alon_boppana_ref(self.d) if self.d >= 2 else None

    @property
    def is_ramanujan(self) -> bool | None:
        ref = self.alon_boppana
        if ref is None:
            return None
        return self.lam <= ref + 1e-12

    def to_dict(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "lambda_n": self.lambda_n,
            "lambda": self.lam,
            "method": self.method,
            "residual": self.residual,
            "alon_boppana": self.alon_boppana,
            "is_ramanujan": self.is_ramanujan,
            "grade": "spectral",
        }


def _dense_spectrum(g: RegularGraph, cap: int) -> SpectralSummary:
    if g.n > cap:
        raise SizeCap(g.n, cap, "dense eigensolve")
    P = g.transition_matrix.toarray()
    w, V = np.linalg.eigh(P)
    res = 0.0
    for idx in (0, g.n - 2):
        v = V[:, idx]
        res = max(res, float(np.linalg.norm(P @ v - w[idx] * v)))
    return SpectralSummary(
        lambda2=float(min(w[-2], 1.0)),
        lambda_n=float(max(w[0], -1.0)),
        method="exact-dense",
        residual=res,
        n=g.n,
        d=g.d,
        eigenvalues=w[::-1].copy(),
    )


def _orthogonal_iteration(g, sign, block, rng, tol, max_iter):
    """Top eigenpair of ``(I + sign*P)/2`` on the complement of the uniform vector.

    Returns ``(eigenvalue of P, residual)``.
    """
    P = g.transition_matrix
    n = g.n

    def project(X):
        return X - X.mean(axis=0, keepdims=True)

    X = project(rng.standard_normal((n, block)))
    X, _ = np.linalg.qr(X)
    residual = math.inf
    theta = 0.0
    for it in range(1, max_iter + 1):
        Y = 0.5 * (X + sign * (P @ X))
        Y = project(Y)
        X, _ = np.linalg.qr(Y)
        if it % 10 and it != max_iter:
            continue
        PX = P @ X
        H = X.T @ PX
        H = 0.5 * (H + H.T)
        evals, evecs = np.linalg.eigh(H)
        j = -1 if sign > 0 else 0
        theta = float(evals[j])
        v = X @ evecs[:, j]
        pv = P @ v
        residual = float(np.linalg.norm(pv - theta * v))
        if residual < tol:
            return theta, residual
        # rotate so the block carries Ritz vectors (keeps iteration stable)
        X = X @ evecs
    raise ConvergenceFailure(max_iter, residual)


def _iterative_spectrum(g: RegularGraph, seed: int, tol: float, max_iter: int) -> SpectralSummary:
    rng = np.random.default_rng(seed)
    block = max(1, min(6, g.n - 1))
    residuals = []
    if connected_components(g).max() > 0:
        # a second component gives eigenvalue 1 with a piecewise-constant eigenvector
        lambda2 = 1.0
        residuals.append(0.0)
    else:
        lambda2, r2 = _orthogonal_iteration(g, +1, block, rng, tol, max_iter)
        residuals.append(r2)
    lambda_n, rn = _orthogonal_iteration(g, -1, block, rng, tol, max_iter)
    residuals.append(rn)
    return SpectralSummary(
        lambda2=float(min(lambda2, 1.0)),
        lambda_n=float(max(lambda_n, -1.0)),
        method="iterative",
        residual=max(residuals),
        n=g.n,
        d=g.d,
    )


def spectrum(
    g: RegularGraph,
    mode: str = "exact-dense",
    *,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    dense_cap: int = DENSE_CAP,
) -> SpectralSummary:
    """Second-largest and smallest eigenvalue of ``P``.

    The top eigenvalue is 1 with the uniform eigenvector for every regular
    graph and is not computed.
    """
    if mode == "exact-dense":
        return _dense_spectrum(g, dense_cap)
    if mode == "iterative":
        return _iterative_spectrum(g, seed, tol, max_iter)
    if mode == "auto":
        if g.n <= dense_cap:
            return _dense_spectrum(g, dense_cap)
        return _iterative_spectrum(g, seed, tol, max_iter)
    raise ValueError(f"unknown spectrum mode {mode!r}")


def tanner_bound(summary: SpectralSummary | float, s: int, n: int) -> float:
    """Lower bound on the vertex expansion of any set of size ``s``."""
    if not 1 <= s <= n:
        raise ValueError(f"set size {s} outside [1, {n}]")
    lam = summary.lam if isinstance(summary, SpectralSummary) else float(summary)
    lam2 = lam * lam
    return 1.0 / ((s / n) * (1.0 - lam2) + lam2) - 1.0


# ---------------------------------------------------------------------------
# cross-checks


@dataclass
class EMLReport:
    lam: float
    margins: list[float]
    tol: float

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf

    @property
    def violations(self) -> int:
        return sum(1 for m in self.margins if m < -self.tol)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "check": "expander_mixing_lemma",
            "lambda": self.lam,
            "probes": len(self.margins),
            "min_margin": self.min_margin if self.margins else None,
            "violations": self.violations,
            "passed": self.passed,
            "grade": "exact",
        }


def eml_check(
    g: RegularGraph,
    summary: SpectralSummary,
    pairs: Iterable[SetPair | tuple[SetLike, SetLike]],
    *,
    lam: float | None = None,
    tol: float = 1e-6,
) -> EMLReport:
    """Margins ``lam*d*sqrt(|S||T|) - | |E(S,T)| - d|S||T|/n |`` per pair.

    ``lam`` may be any upper bound on the true spectral radius; it defaults to
    the radius from ``summary``. Negative margins indicate an internal bug.
    """
    if summary.n != g.n or summary.d != g.d:
        raise ValueError("summary does not belong to this graph")
    if lam is None:
        lam = summary.lam
    elif lam < summary.lam - 1e-12:
        raise ValueError(f"lam={lam} is below the spectral radius {summary.lam}")
    margins = []
    n, d = g.n, g.d
    for pair in pairs:
        if isinstance(pair, SetPair):
            s, t, est = pair.S.size, pair.T.size, pair.est
        else:
            S, T = (as_vertex_set(g, x) for x in pair)
            s, t, est = S.size, T.size, ordered_edge_count(g, S, T)
        lhs = abs(est * n - d * s * t) / n
        rhs = lam * d * math.sqrt(s * t)
        margins.append(rhs - lhs)
    return EMLReport(lam=lam, margins=margins, tol=tol)


@dataclass
class CheegerReport:
    lambda2: float
    phi: float
    exact: bool
    lower: float
    upper: float
    tol: float

    @property
    def left_margin(self) -> float:
        return self.phi - self.lower

    @property
    def right_margin(self) -> float | None:
        return self.upper - self.phi if self.exact else None

    @property
    def passed(self) -> bool:
        if self.left_margin < -self.tol:
            return False
        if self.exact and self.right_margin < -self.tol:
            return False
        return True

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            check="cheeger",
            left_margin=self.left_margin,
            right_margin=self.right_margin,
            passed=self.passed,
            grade="exact" if self.exact else "sampled",
        )
        return d


def cheeger_check(
    g: RegularGraph,
    summary: SpectralSummary,
    phi: float,
    *,
    exact: bool = True,
    tol: float = 1e-6,
) -> CheegerReport:
    """Evaluate ``(1-lambda2)/2 <= phi <= sqrt(2(1-lambda2))``.

    With ``exact=False`` ``phi`` is the conductance of one particular cut (an
    upper bound on the graph conductance) and only the left side is checked.
    """
    if summary.n != g.n:
        raise ValueError("summary does not belong to this graph")
    gap = max(0.0, 1.0 - summary.lambda2)
    return CheegerReport(
        lambda2=summary.lambda2,
        phi=float(phi),
        exact=exact,
        lower=0.5 * gap,
        upper=math.sqrt(2.0 * gap),
        tol=tol,
    )


@dataclass
class TannerReport:
    lam: float
    margins: list[float]
    tol: float

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf

    @property
    def violations(self) -> int:
        return sum(1 for m in self.margins if m < -self.tol)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "check": "tanner",
            "lambda": self.lam,
            "probes": len(self.margins),
            "min_margin": self.min_margin if self.margins else None,
            "violations": self.violations,
            "passed": self.passed,
            "grade": "exact",
        }


def tanner_check(
    g: RegularGraph,
    summary: SpectralSummary,
    sets: Iterable[SetLike],
    *,
    tol: float = 1e-9,
) -> TannerReport:
    """Compare measured vertex expansion of each set with the spectral bound."""
    margins = []
    for S in sets:
        S = as_vertex_set(g, S)
        if S.size == 0:
            continue
        psi = vertex_boundary(g, S) / S.size
        margins.append(psi - tanner_bound(summary, S.size, g.n))
    return TannerReport(lam=summary.lam, margins=margins, tol=tol)


def trace_identities(summary: SpectralSummary) -> tuple[float, float]:
    """``(sum lambda_i, sum lambda_i^2)`` over the full dense spectrum."""
    if summary.eigenvalues is None:
        raise ValueError("full spectrum only available from exact-dense mode")
    w = summary.eigenvalues
    return float(w.sum()), float((w * w).sum())


def random_pairs(
    g: RegularGraph, count: int, rng: np.random.Generator, max_size: int | None = None
) -> Sequence[tuple[np.ndarray, np.ndarray]]:
    """Random nonempty set pairs with uniformly drawn sizes (probing helper)."""
    n = g.n
    cap = n if max_size is None else max(1, min(n, max_size))
    out = []
    for _ in range(count):
        s = int(rng.integers(1, cap + 1))
        t = int(rng.integers(1, cap + 1))
        S = rng.choice(n, size=s, replace=False)
        T = rng.choice(n, size=t, replace=False)
        out.append((S, T))
    return out
