"""Exact evolution of the simple (non-lazy) random walk ``P = A/d``.

Distributions are plain float arrays of length ``n`` (or ``(n, k)`` arrays
holding ``k`` distributions as columns). Every step renormalises columns to
absorb rounding drift, which stays below ``t * n * 1e-16``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BudgetZero, IndexOutOfTrace, NotAWitness, NotReached, SizeCap
from .graph import SURPLUS_RTOL, RegularGraph, SetPair, VertexSet, make_pair, surplus_from_counts

__all__ = [
    "point_mass",
    "uniform",
    "uniform_on",
    "validate_distribution",
    "step",
    "variation_distance",
    "WalkTrace",
    "trace_walk",
    "MixingEstimate",
    "mixing_time",
    "L2DecreaseReport",
    "l2_decrease_audit",
    "c_delta",
    "SubmultiplicativityReport",
    "submultiplicativity_audit",
    "submultiplicativity_all",
    "LowerBoundReport",
    "lower_bound_audit",
    "EnvelopeReport",
    "spectral_envelope_check",
    "default_t_max",
    "EXACT_WALK_CAP",
]

EXACT_WALK_CAP = 4096
_BLOCK = 1024

Starts = Union[str, int, np.ndarray, Sequence[np.ndarray]]


def default_t_max(n: int) -> int:
    return int(math.ceil(10 * math.log2(n)))


def point_mass(n: int, v: int) -> np.ndarray:
    p = np.zeros(n)
    p[v] = 1.0
    return p


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def uniform_on(S: VertexSet) -> np.ndarray:
    """Uniform distribution on ``S`` (``chi_S / |S|``)."""
    if S.size == 0:
        raise ValueError("uniform distribution on the empty set")
    return S.mask.astype(np.float64) / S.size


def validate_distribution(p: np.ndarray, n: int | None = None, atol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if n is not None and p.shape[0] != n:
        raise ValueError(f"distribution has length {p.shape[0]}, expected {n}")
    if (p < -atol).any():
        raise ValueError("distribution has negative entries")
    sums = p.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > max(atol, 1e-9)):
        raise ValueError("distribution does not sum to 1")
    return p


def _advance(g: RegularGraph, X: np.ndarray) -> np.ndarray:
    Y = g.transition_matrix @ X
    Y /= Y.sum(axis=0)
    return Y


def step(g: RegularGraph, p: np.ndarray) -> np.ndarray:
    """One walk step: ``(Pp)(v) = sum_{u ~ v} p(u) / d``."""
    p = validate_distribution(p, g.n)
    return _advance(g, p)


def variation_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _tv_to_uniform(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    return 0.5 * np.abs(X - 1.0 / n).sum(axis=0)


# ---------------------------------------------------------------------------
# traces


@dataclass
class WalkTrace:
    """Per-step maxima over the tracked starts.

    ``d_tv[t]`` is the worst total-variation distance to uniform after ``t``
    steps and ``l2sq[t]`` the largest squared 2-norm. ``max_l2_increase`` is
    the largest single-step increase of any start's squared norm (should be
    at most rounding noise).
    """

    d_tv: np.ndarray
    l2sq: np.ndarray
    starts: str
    n_starts: int
    max_l2_increase: float = 0.0
    min_l2sq: float = math.inf
    max_tv_increase: float = 0.0
    per_start_dtv: np.ndarray | None = field(default=None, repr=False)

    @property
    def t_max(self) -> int:
        return len(self.d_tv) - 1

    @property
    def exact(self) -> bool:
        """True when all point masses were tracked, so ``d_tv`` is the true d_TV(t)."""
        return self.starts == "all"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "d_tv", "l2sq"])
        for t, (a, b) in enumerate(zip(self.d_tv.tolist(), self.l2sq.tolist())):
            w.writerow([t, repr(a), repr(b)])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _start_blocks(g: RegularGraph, starts: Starts, seed: int | None, exact_cap: int):
    """Yield ``(label, count, blocks)`` where blocks build column matrices lazily."""
    n = g.n
    if isinstance(starts, str):
        if starts != "all":
            raise ValueError(f"unknown starts spec {starts!r}")
        if n > exact_cap:
            raise SizeCap(n, exact_cap, "exact walk over all point masses")
        vertices = np.arange(n)
        label = "all"
    elif isinstance(starts, (int, np.integer)):
        if seed is None:
            raise ValueError("sampled starts require an explicit seed")
        k = int(starts)
        if k < 1:
            raise BudgetZero("need at least one start")
        rng = np.random.default_rng(seed)
        vertices = np.sort(rng.choice(n, size=min(k, n), replace=False))
        label = "all" if k >= n else "sampled"
    else:
        cols = [validate_distribution(np.asarray(p, dtype=np.float64), n) for p in _as_columns(starts)]
        if not cols:
            raise BudgetZero("need at least one start")
        X = np.column_stack(cols)
        return "explicit", X.shape[1], [lambda X=X: X.copy()]
    blocks = []
    for lo in range(0, vertices.size, _BLOCK):
        idx = vertices[lo : lo + _BLOCK]

        def make(idx=idx):
            X = np.zeros((n, idx.size))
            X[idx, np.arange(idx.size)] = 1.0
            return X

        blocks.append(make)
    return label, int(vertices.size), blocks


def _as_columns(starts) -> list[np.ndarray]:
    if isinstance(starts, np.ndarray):
        if starts.ndim == 1:
            return [starts]
        return [starts[:, j] for j in range(starts.shape[1])]
    return list(starts)


def trace_walk(
    g: RegularGraph,
    starts: Starts = "all",
    t_max: int | None = None,
    *,
    seed: int | None = None,
    exact_cap: int = EXACT_WALK_CAP,
    stop_below: float | None = None,
    keep_per_start: bool = False,
) -> WalkTrace:
    """Evolve the tracked starts for ``t_max`` steps, recording per-step maxima.

    ``starts`` is ``"all"`` (every point mass; exact d_TV(t)), an integer
    ``k`` (k seeded random point masses; a lower bound on d_TV(t)), or an
    explicit array/list of distributions. With ``stop_below`` the evolution
    ends at the first step whose worst distance is at most that value.
    """
    if t_max is None:
        t_max = default_t_max(g.n)
    if t_max < 0:
        raise BudgetZero(f"negative step budget {t_max}")
    label, count, blocks = _start_blocks(g, starts, seed, exact_cap)
    mats = [make() for make in blocks]
    prev_l2 = [(X * X).sum(axis=0) for X in mats]
    d_tv = []
    l2sq = []
    per_start = [] if keep_per_start else None
    max_inc = 0.0
    max_tv_inc = 0.0
    min_l2 = math.inf
    prev_tv = None
    for t in range(t_max + 1):
        if t > 0:
            mats = [_advance(g, X) for X in mats]
        tvs = [_tv_to_uniform(X) for X in mats]
        l2s = [(X * X).sum(axis=0) for X in mats]
        if t > 0:
            for a, b in zip(prev_l2, l2s):
                max_inc = max(max_inc, float((b - a).max()))
        prev_l2 = l2s
        tv_all = np.concatenate(tvs)
        l2_all = np.concatenate(l2s)
        cur_tv = float(tv_all.max())
        if prev_tv is not None:
            max_tv_inc = max(max_tv_inc, cur_tv - prev_tv)
        prev_tv = cur_tv
        d_tv.append(cur_tv)
        l2sq.append(float(l2_all.max()))
        min_l2 = min(min_l2, float(l2_all.min()))
        if per_start is not None:
            per_start.append(tv_all)
        if stop_below is not None and cur_tv <= stop_below:
            break
    return WalkTrace(
        d_tv=np.array(d_tv),
        l2sq=np.array(l2sq),
        starts=label,
        n_starts=count,
        max_l2_increase=max_inc,
        min_l2sq=min_l2,
        max_tv_increase=max_tv_inc,
        per_start_dtv=np.array(per_start) if per_start is not None else None,
    )


@dataclass
class MixingEstimate:
    epsilon: float
    tau: int | None
    exactness: str
    t_max: int
    last_d_tv: float

    @property
    def reached(self) -> bool:
        return self.tau is not None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "tau": self.tau,
            "reached": self.reached,
            "exactness": self.exactness,
            "t_max": self.t_max,
            "last_d_tv": self.last_d_tv,
            "grade": "exact" if self.exactness == "exact" else "sampled",
        }


def mixing_time(
    g: RegularGraph,
    epsilon: float,
    starts: Starts = "all",
    t_max: int | None = None,
    *,
    seed: int | None = None,
    strict: bool = True,
    exact_cap: int = EXACT_WALK_CAP,
) -> MixingEstimate:
    """First ``t`` with worst tracked distance at most ``epsilon``.

    The value is exact when all point masses are tracked, otherwise a lower
    bound. With ``strict`` an unreached threshold raises :class:`NotReached`,
    else the estimate is returned with ``tau=None``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if t_max is None:
        t_max = default_t_max(g.n)
    if epsilon >= 1:
        return MixingEstimate(epsilon, 0, "exact", t_max, 1.0)
    tr = trace_walk(g, starts, t_max, seed=seed, exact_cap=exact_cap, stop_below=epsilon)
    exactness = "exact" if tr.exact else "lower-bound"
    hit = np.flatnonzero(tr.d_tv <= epsilon)
    last = float(tr.d_tv[-1])
    if hit.size == 0:
        if strict:
            raise NotReached(t_max, last)
        return MixingEstimate(epsilon, None, exactness, t_max, last)
    return MixingEstimate(epsilon, int(hit[0]), exactness, t_max, last)


# ---------------------------------------------------------------------------
# audits


def c_delta(delta: float) -> float:
    """Floor constant ``delta + 5(1 - delta)/4`` of the squared-norm recursion."""
    return delta + 1.25 * (1.0 - delta)


@dataclass
class L2DecreaseReport:
    lhs: float
    norm_sq: float
    floor: float
    excess_ratio: float
    scale: float
    delta: float
    alpha: float
    xi: float
    warnings: list[str]

    @property
    def positive_ratio(self) -> float:
        return max(0.0, self.excess_ratio)

    @property
    def normalized(self) -> float:
        """Positive excess ratio in units of the predicted decay scale."""
        return self.positive_ratio / self.scale if self.scale > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "norm_sq": self.norm_sq,
            "floor": self.floor,
            "excess_ratio": self.excess_ratio,
            "scale": self.scale,
            "normalized": self.normalized,
            "delta": self.delta,
            "alpha": self.alpha,
            "xi": self.xi,
            "warnings": list(self.warnings),
            "grade": "exact",
        }


def decrease_scale(alpha: float, d: int, xi: float) -> float:
    """``sqrt(alpha * log d / (xi * d))``."""
    return math.sqrt(alpha * math.log(d) / (xi * d))


def l2_decrease_audit(
    g: RegularGraph,
    p: np.ndarray,
    delta: float,
    alpha: float,
    xi: float | None = None,
    *,
    emit_warnings: bool = False,
) -> L2DecreaseReport:
    """Measure ``(||Pp||^2 - C_delta/n) / ||p||^2`` against the predicted scale.

    ``xi`` defaults to ``log d / log n`` (so that ``d = n**xi``). Parameters
    outside the regime where the decay estimate is claimed produce warnings
    in the report, never errors.
    """
    n, d = g.n, g.d
    if xi is None:
        xi = math.log(d) / math.log(n)
    p = validate_distribution(p, n)
    q = _advance(g, p)
    lhs = float(q @ q)
    norm_sq = float(p @ p)
    floor = c_delta(delta) / n
    notes = []
    if alpha * math.log(d) / (xi * d) > 1:
        notes.append("alpha*log(d)/(xi*d) > 1: outside the decay regime")
    if delta < (math.sqrt(5) - 2) / 2 * alpha / d:
        notes.append("delta below ((sqrt5-2)/2)*alpha/d: outside the decay regime")
    if emit_warnings:
        for note in notes:
            warnings.warn(note, stacklevel=2)
    return L2DecreaseReport(
        lhs=lhs,
        norm_sq=norm_sq,
        floor=floor,
        excess_ratio=(lhs - floor) / norm_sq,
        scale=decrease_scale(alpha, d, xi),
        delta=delta,
        alpha=alpha,
        xi=xi,
        warnings=notes,
    )


@dataclass
class SubmultiplicativityReport:
    k: int
    t: int
    lhs: float
    rhs: float
    tol: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol


def submultiplicativity_audit(trace: WalkTrace, k: int, t: int, tol: float = 1e-6) -> SubmultiplicativityReport:
    """Check ``d_TV(kt) <= (2 d_TV(t))^k`` on an exact trace."""
    if not trace.exact:
        raise ValueError("sub-multiplicativity needs an exact trace (all point masses)")
    if k < 1 or t < 0:
        raise ValueError("need k >= 1 and t >= 0")
    if k * t > trace.t_max:
        raise IndexOutOfTrace(f"k*t={k * t} beyond trace length {trace.t_max}")
    lhs = float(trace.d_tv[k * t])
    rhs = (2.0 * float(trace.d_tv[t])) ** k
    return SubmultiplicativityReport(k, t, lhs, rhs, tol)


def submultiplicativity_all(trace: WalkTrace, tol: float = 1e-6) -> list[SubmultiplicativityReport]:
    out = []
    T = trace.t_max
    for t in range(1, T + 1):
        for k in range(1, T // t + 1):
            out.append(submultiplicativity_audit(trace, k, t, tol))
    return out


@dataclass
class EnvelopeReport:
    lam: float
    margins: np.ndarray
    tol: float

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else math.inf

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol


def spectral_envelope_check(trace: WalkTrace, lam: float, n: int, tol: float = 1e-9) -> EnvelopeReport:
    """``d_TV(P^t chi_v, pi) <= lam^t sqrt(n)`` for point-mass traces."""
    if trace.starts == "explicit":
        raise ValueError("envelope check applies to point-mass starts only")
    t = np.arange(trace.t_max + 1)
    bound = lam**t * math.sqrt(n)
    return EnvelopeReport(lam, bound - trace.d_tv, tol)


@dataclass
class LowerBoundReport:
    alpha: float
    d_tv: np.ndarray
    bound: np.ndarray
    tol: float
    floor: float | None = None
    tau: int | None = None
    tau_exactness: str | None = None

    @property
    def margins(self) -> np.ndarray:
        return self.d_tv - self.bound

    @property
    def passed(self) -> bool:
        return bool((self.margins >= -self.tol).all())

    @property
    def floor_ratio(self) -> float | None:
        if self.floor is None or self.tau is None or self.floor <= 0:
            return None
        return self.tau / self.floor

    def to_dict(self) -> dict:
        return {
            "check": "walk_lower_bound",
            "alpha": self.alpha,
            "steps": int(self.d_tv.size),
            "min_margin": float(self.margins.min()),
            "passed": self.passed,
            "tau_floor": self.floor,
            "tau": self.tau,
            "tau_exactness": self.tau_exactness,
            "floor_ratio": self.floor_ratio,
            "grade": "exact",
        }


def lower_bound_audit(
    g: RegularGraph,
    pair: SetPair,
    alpha: float,
    t_max: int = 50,
    *,
    delta: float | None = None,
    measure_tau: bool = True,
    tau_t_max: int | None = None,
    tol: float = 1e-9,
) -> LowerBoundReport:
    """Check ``d_TV(P^t U_S, pi) >= (1/2)(alpha/2d)^(2t) - min(|S|,|T|)/(2n)``.

    The walk starts from the uniform distribution on ``S``. When
    ``measure_tau`` is set, the exact ``tau_{1/n}`` (all point masses) is
    measured and compared with ``log(1/delta)/log(d/alpha)`` where ``delta``
    defaults to ``max(|S|,|T|)/n``.
    """
    n, d = g.n, g.d
    s, t_size = pair.S.size, pair.T.size
    if s == 0 or t_size == 0:
        raise NotAWitness("witness sets must be nonempty")
    sur = surplus_from_counts(pair.est, s, t_size, n, d)
    if sur < alpha - SURPLUS_RTOL * max(1.0, abs(alpha)):
        raise NotAWitness(f"pair surplus {sur:.6g} is below alpha={alpha:.6g}")
    p = uniform_on(pair.S)
    tvs = []
    for t in range(t_max + 1):
        if t > 0:
            p = _advance(g, p)
        tvs.append(variation_distance(p, 1.0 / n))
    ts = np.arange(t_max + 1)
    bound = 0.5 * (alpha / (2 * d)) ** (2 * ts) - min(s, t_size) / (2 * n)
    report = LowerBoundReport(alpha=alpha, d_tv=np.array(tvs), bound=bound, tol=tol)
    if measure_tau:
        if delta is None:
            delta = max(s, t_size) / n
        if 0 < alpha < d and 0 < delta < 1:
            report.floor = math.log(1.0 / delta) / math.log(d / alpha)
        est = mixing_time(g, 1.0 / n, "all" if n <= EXACT_WALK_CAP else min(n, 256), tau_t_max,
                          seed=0, strict=False)
        report.tau = est.tau
        report.tau_exactness = est.exactness
    return report
