"""Certification of the small-set bipartite density condition.

A graph satisfies the condition with parameters ``(alpha, delta)`` when every
pair of nonempty vertex sets with ``|S|, |T| <= delta*n`` has

    |E(S,T)| <= d|S||T|/n + alpha*sqrt(|S||T|).

:func:`certify_exact` decides this by enumerating all pairs (tiny graphs);
:func:`search_witness` hunts for violating pairs on larger graphs and can only
refute. :func:`minimize_witness` peels a violating pair down to a minimal one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAWitness, SizeCap
from .graph import (
    SURPLUS_RTOL,
    RegularGraph,
    SetPair,
    VertexSet,
    make_pair,
    surplus_exceeds,
    surplus_from_counts,
)

__all__ = [
    "DensityCertificate",
    "MinimalWitness",
    "certify_exact",
    "search_witness",
    "minimize_witness",
    "min_conductance_exact",
    "size_cap",
    "EXACT_CAP",
    "EXACT_HARD_CAP",
    "CONDUCTANCE_CAP",
]

EXACT_CAP = 12
EXACT_HARD_CAP = 16
CONDUCTANCE_CAP = 24
DEFAULT_RESTARTS = 64

HOLDS = "holds"
VIOLATED = "violated"
HOLDS_UP_TO_SEARCH = "holds-up-to-search"


def size_cap(n: int, delta: float) -> int:
    """Largest admissible set size ``floor(delta*n)`` (robust to float noise)."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return min(n, int(math.floor(delta * n + 1e-9)))


@dataclass
class DensityCertificate:
    alpha: float
    delta: float
    verdict: str
    witness: SetPair | None
    max_surplus_found: float | None
    search: dict
    size_cap: int
    best_pair: SetPair | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        """True when no nonempty set fits under the size cap."""
        return self.size_cap < 1

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "delta": self.delta,
            "verdict": self.verdict,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "max_surplus_found": self.max_surplus_found,
            "size_cap": self.size_cap,
            "degenerate": self.degenerate,
            "search": dict(self.search),
            "grade": "exact" if self.search.get("mode") == "exact" else "heuristic",
        }


@dataclass
class MinimalWitness:
    pair: SetPair
    alpha: float
    degree_floor_S: int
    degree_floor_T: int

    @property
    def d_min(self) -> int:
        return min(self.degree_floor_S, self.degree_floor_T)

    @property
    def bound_S(self) -> float:
        s, t = self.pair.S.size, self.pair.T.size
        return 0.5 * self.alpha * math.sqrt(t / s)

    @property
    def bound_T(self) -> float:
        s, t = self.pair.S.size, self.pair.T.size
        return 0.5 * self.alpha * math.sqrt(s / t)

    def bound_min(self, d: int) -> float:
        return self.alpha**2 / (4 * d)

    def floors_hold(self, d: int, tol: float = 1e-9) -> bool:
        slack = tol * max(1.0, abs(self.alpha))
        return (
            self.degree_floor_S >= self.bound_S - slack
            and self.degree_floor_T >= self.bound_T - slack
            and self.d_min >= self.bound_min(d) - slack
        )

    def to_dict(self, d: int) -> dict:
        return {
            "pair": self.pair.to_dict(),
            "alpha": self.alpha,
            "degree_floor_S": self.degree_floor_S,
            "degree_floor_T": self.degree_floor_T,
            "d_min": self.d_min,
            "bound_S": self.bound_S,
            "bound_T": self.bound_T,
            "bound_min": self.bound_min(d),
            "floors_hold": self.floors_hold(d),
        }


def _pair_from_bits(g: RegularGraph, s_bits: int, t_bits: int) -> SetPair:
    return make_pair(g, VertexSet.from_bits(g.n, s_bits), VertexSet.from_bits(g.n, t_bits))


def _tie_eps(value: float) -> float:
    return 1e-12 * max(1.0, abs(value))


# ---------------------------------------------------------------------------
# exact enumeration


def _small_masks(n: int, k: int) -> np.ndarray:
    masks = np.arange(1, 1 << n, dtype=np.int64)
    pc = np.bitwise_count(masks)
    return masks[pc <= k]


def certify_exact(
    g: RegularGraph,
    alpha: float,
    delta: float = 1.0,
    *,
    cap: int = EXACT_CAP,
    block: int = 512,
    threads: int = 1,
) -> DensityCertificate:
    """Decide the condition by enumerating every admissible ``(S, T)``.

    The edge counts of all pairs are obtained block-wise as a product
    ``(B A) B^T`` of the membership matrix ``B`` (one row per admissible set)
    with the adjacency matrix; only the ``T >= S`` half is evaluated since the
    surplus is symmetric. The witness is the maximising pair; ties go to the
    lexicographically smallest ``(S bitmask, T bitmask)``.
    """
    cap = min(cap, EXACT_HARD_CAP)
    if g.n > cap:
        raise SizeCap(g.n, cap, "exact density certification")
    n, d = g.n, g.d
    k = size_cap(n, delta)
    search = {"mode": "exact", "pairs": 0}
    if k < 1:
        return DensityCertificate(alpha, delta, HOLDS, None, None, search, k)

    masks = _small_masks(n, k)
    bits = (masks[:, None] >> np.arange(n)) & 1
    B = bits.astype(np.float32)
    A = g.adjacency_matrix.toarray().astype(np.float32)
    C = B @ A  # C[i, v] = number of neighbours of v inside set i
    sizes = bits.sum(axis=1).astype(np.float64)
    m = masks.size
    search["pairs"] = m * (m + 1) // 2

    def run(i0: int):
        i1 = min(i0 + block, m)
        E = (C[i0:i1] @ B[i0:].T).astype(np.float64)
        s = sizes[i0:i1, None]
        t = sizes[None, i0:]
        sur = (E * n - d * s * t) / (n * np.sqrt(s * t))
        # keep only j >= i
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0, m)[None, :]
        sur[cols < rows] = -np.inf
        best = float(sur.max())
        ii, jj = np.nonzero(sur >= best - _tie_eps(best))
        # lexicographically smallest (mask_i, mask_j); masks are increasing
        order = np.lexsort((jj, ii))[0]
        return best, i0 + int(ii[order]), i0 + int(jj[order])

    starts = range(0, m, block)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, starts))
    else:
        results = [run(i0) for i0 in starts]

    best, bi, bj = results[0]
    for val, i, j in results[1:]:
        if val > best + _tie_eps(best):
            best, bi, bj = val, i, j
        elif val >= best - _tie_eps(best) and (masks[i], masks[j]) < (masks[bi], masks[bj]):
            best, bi, bj = max(best, val), i, j

    best_pair = _pair_from_bits(g, int(masks[bi]), int(masks[bj]))
    best_surplus = best_pair.surplus_alpha
    violated = surplus_exceeds(best_surplus, alpha)
    return DensityCertificate(
        alpha=alpha,
        delta=delta,
        verdict=VIOLATED if violated else HOLDS,
        witness=best_pair if violated else None,
        max_surplus_found=best_surplus,
        search=search,
        size_cap=k,
        best_pair=best_pair,
    )


# ---------------------------------------------------------------------------
# heuristic search


class _LocalSearch:
    """Greedy ascent on the surplus over pairs with ``1 <= |S|, |T| <= k``."""

    def __init__(self, g: RegularGraph, k: int):
        self.g = g
        self.k = k
        self.A = g.adjacency_matrix

    def counts(self, mask: np.ndarray) -> np.ndarray:
        # neighbours of each vertex inside the set
        return np.asarray(self.A @ mask.astype(np.float64)).round().astype(np.int64)

    def surplus(self, est: int, s: int, t: int) -> float:
        return surplus_from_counts(est, s, t, self.g.n, self.g.d)

    def best_response(self, inner_counts: np.ndarray) -> tuple[np.ndarray, int, float]:
        """Optimal partner set for fixed ``S`` given ``d_S(v)`` for all ``v``.

        ``E(S, T)`` is linear in ``T``, so for each size the best ``T`` takes
        the largest counts; scan all sizes up to ``k``.
        """
        g, k = self.g, self.k
        order = np.lexsort((np.arange(g.n), -inner_counts))[:k]
        prefix = np.cumsum(inner_counts[order])
        return order, prefix

    def respond(self, fixed_size: int, inner_counts: np.ndarray):
        n, d = self.g.n, self.g.d
        order, prefix = self.best_response(inner_counts)
        t = np.arange(1, prefix.size + 1, dtype=np.float64)
        sur = (prefix * n - d * fixed_size * t) / (n * np.sqrt(fixed_size * t))
        j = int(np.argmax(sur))
        mask = np.zeros(n, dtype=bool)
        mask[order[: j + 1]] = True
        return mask, float(sur[j])

    def single_moves(self, S, T, cS, cT, est):
        """Best single add/remove move; returns ``(surplus, side, vertex, add)``."""
        n, d, k = self.g.n, self.g.d, self.k
        s, t = int(S.sum()), int(T.sum())
        best = (-math.inf, None, None, None)
        for side, mask, size, gain, other in (("S", S, s, cT, t), ("T", T, t, cS, s)):
            if size < k:
                cand = np.flatnonzero(~mask)
                if cand.size:
                    new_est = est + gain[cand]
                    sur = (new_est * n - d * (size + 1) * other) / (n * math.sqrt((size + 1) * other))
                    j = int(np.argmax(sur))
                    if sur[j] > best[0]:
                        best = (float(sur[j]), side, int(cand[j]), True)
            if size > 1:
                cand = np.flatnonzero(mask)
                new_est = est - gain[cand]
                sur = (new_est * n - d * (size - 1) * other) / (n * math.sqrt((size - 1) * other))
                j = int(np.argmax(sur))
                if sur[j] > best[0]:
                    best = (float(sur[j]), side, int(cand[j]), False)
        return best

    def run(self, S: np.ndarray, T: np.ndarray, steps: int) -> tuple[np.ndarray, np.ndarray, float, int]:
        S = S.copy()
        T = T.copy()
        cS = self.counts(S)
        cT = self.counts(T)
        est = int(cS[T].sum())
        cur = self.surplus(est, int(S.sum()), int(T.sum()))
        used = 0
        while used < steps:
            improved = False
            # alternating best responses
            newT, sur = self.respond(int(S.sum()), cS)
            if sur > cur + _tie_eps(cur):
                T, cur = newT, sur
                cT = self.counts(T)
                est = int(cS[T].sum())
                used += 1
                improved = True
            if used >= steps:
                break
            newS, sur = self.respond(int(T.sum()), cT)
            if sur > cur + _tie_eps(cur):
                S, cur = newS, sur
                cS = self.counts(S)
                est = int(cS[T].sum())
                used += 1
                improved = True
            if used >= steps:
                break
            sur, side, v, add = self.single_moves(S, T, cS, cT, est)
            if side is not None and sur > cur + _tie_eps(cur):
                mask = S if side == "S" else T
                mask[v] = add
                row = self.g.adjacency[v]
                delta_c = 1 if add else -1
                if side == "S":
                    est += (cT[v] if add else -cT[v])
                    np.add.at(cS, row, delta_c)
                else:
                    est += (cS[v] if add else -cS[v])
                    np.add.at(cT, row, delta_c)
                cur = self.surplus(est, int(S.sum()), int(T.sum()))
                used += 1
                improved = True
            if not improved:
                break
        return S, T, cur, used


def _extreme_vectors(g: RegularGraph) -> list[np.ndarray]:
    """Top and bottom eigenvectors of ``A - (d/n) J``."""
    n, d = g.n, g.d
    if n <= 4096:
        M = g.adjacency_matrix.toarray() - d / n
        w, V = np.linalg.eigh(M)
        vecs = [V[:, -1], V[:, 0]]
    else:
        from scipy.sparse.linalg import LinearOperator, eigsh

        A = g.adjacency_matrix
        op = LinearOperator((n, n), matvec=lambda x: A @ x - (d / n) * x.sum(), dtype=np.float64)
        v0 = np.random.default_rng(0).standard_normal(n)
        _, top = eigsh(op, k=1, which="LA", v0=v0)
        _, bot = eigsh(op, k=1, which="SA", v0=v0)
        vecs = [top[:, 0], bot[:, 0]]
    out = []
    for v in vecs:
        # fix the sign so the output is deterministic
        j = int(np.argmax(np.abs(v)))
        out.append(v if v[j] >= 0 else -v)
    return out


def _sweep_sizes(k: int) -> list[int]:
    if k <= 64:
        return list(range(1, k + 1))
    sizes = set(range(1, 33))
    x = 32.0
    while x < k:
        x *= 1.25
        sizes.add(min(k, int(x)))
    sizes.add(k)
    return sorted(sizes)


def _spectral_seeds(g: RegularGraph, ls: _LocalSearch) -> list[tuple[float, np.ndarray, np.ndarray]]:
    n, k = g.n, ls.k
    seeds = []
    for v in _extreme_vectors(g):
        for vec in (v, -v):
            order = np.lexsort((np.arange(n), -vec))
            for s in _sweep_sizes(k):
                S = np.zeros(n, dtype=bool)
                S[order[:s]] = True
                T_same = S
                T_opp = np.zeros(n, dtype=bool)
                T_opp[order[::-1][:s]] = True
                T_resp, _ = ls.respond(s, ls.counts(S))
                for T in (T_same, T_opp, T_resp):
                    cS = ls.counts(S)
                    est = int(cS[T].sum())
                    seeds.append((ls.surplus(est, s, int(T.sum())), S, T.copy()))
    return seeds


def _key(S: np.ndarray, T: np.ndarray) -> tuple[int, int]:
    return (
        sum(1 << int(i) for i in np.flatnonzero(S)),
        sum(1 << int(i) for i in np.flatnonzero(T)),
    )


def _better(a, b) -> bool:
    """Order candidates by surplus, then by smallest bitmask key."""
    if b is None:
        return True
    if a[0] > b[0] + _tie_eps(b[0]):
        return True
    if a[0] < b[0] - _tie_eps(b[0]):
        return False
    return _key(a[1], a[2]) < _key(b[1], b[2])


def search_witness(
    g: RegularGraph,
    alpha: float,
    delta: float = 1.0,
    *,
    restarts: int = DEFAULT_RESTARTS,
    steps: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> DensityCertificate:
    """Heuristic refutation by spectral rounding plus greedy local search.

    Seeds come from threshold sweeps on the extreme eigenvectors of
    ``A - (d/n) J``. Each restart starts either from one of the best seeds or
    from a random pair (RNG keyed on ``(seed, restart)``) and climbs with
    alternating best responses and single-vertex moves. The outcome does not
    depend on ``threads``.
    """
    n = g.n
    k = size_cap(n, delta)
    if steps is None:
        steps = 10 * n
    search = {"mode": "heuristic", "restarts": restarts, "steps": steps, "seed": seed}
    if k < 1:
        return DensityCertificate(alpha, delta, HOLDS_UP_TO_SEARCH, None, None, search, k)

    ls = _LocalSearch(g, k)
    seeds = _spectral_seeds(g, ls)
    best = None
    for cand in seeds:
        if _better(cand, best):
            best = cand
    ranked = sorted(range(len(seeds)), key=lambda i: -seeds[i][0])
    distinct = []
    seen = set()
    for i in ranked:
        key = _key(seeds[i][1], seeds[i][2])
        if key not in seen:
            seen.add(key)
            distinct.append(seeds[i])
    n_spectral = min(len(distinct), restarts // 2)

    def restart(r: int):
        if r < n_spectral:
            _, S, T = distinct[r]
        else:
            rng = np.random.default_rng([seed, r])
            S = np.zeros(n, dtype=bool)
            T = np.zeros(n, dtype=bool)
            S[rng.choice(n, size=int(rng.integers(1, k + 1)), replace=False)] = True
            T[rng.choice(n, size=int(rng.integers(1, k + 1)), replace=False)] = True
        S2, T2, sur, _ = ls.run(S, T, steps)
        return sur, S2, T2

    if restarts > 0 and steps > 0:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(restart, range(restarts)))
        else:
            results = [restart(r) for r in range(restarts)]
        for cand in results:
            if _better(cand, best):
                best = cand

    pair = make_pair(g, VertexSet(best[1]), VertexSet(best[2]))
    violated = surplus_exceeds(pair.surplus_alpha, alpha)
    return DensityCertificate(
        alpha=alpha,
        delta=delta,
        verdict=VIOLATED if violated else HOLDS_UP_TO_SEARCH,
        witness=pair if violated else None,
        max_surplus_found=pair.surplus_alpha,
        search=search,
        size_cap=k,
        best_pair=pair,
    )


# ---------------------------------------------------------------------------
# minimal witnesses


def _meets(surplus: float, alpha: float) -> bool:
    return surplus >= alpha - SURPLUS_RTOL * max(1.0, abs(alpha))


def minimize_witness(g: RegularGraph, pair: SetPair, alpha: float) -> MinimalWitness:
    """Peel single vertices off a pair while its surplus stays at least ``alpha``.

    Among admissible removals the one leaving the highest surplus is taken;
    ties go to the lowest vertex id, ``S`` before ``T``. Neither side is ever
    emptied. The returned pair is minimal: every single removal drops the
    surplus below ``alpha``.
    """
    n, d = g.n, g.d
    S = pair.S.mask.copy()
    T = pair.T.mask.copy()
    s, t = int(S.sum()), int(T.sum())
    if s == 0 or t == 0:
        raise NotAWitness("witness sets must be nonempty")
    A = g.adjacency_matrix
    cS = np.asarray(A @ S.astype(np.float64)).round().astype(np.int64)
    cT = np.asarray(A @ T.astype(np.float64)).round().astype(np.int64)
    est = int(cS[T].sum())
    if not _meets(surplus_from_counts(est, s, t, n, d), alpha):
        raise NotAWitness(
            f"pair surplus {surplus_from_counts(est, s, t, n, d):.6g} is below alpha={alpha:.6g}"
        )
    while True:
        best = None
        for side, mask, size, gain, other in (("S", S, s, cT, t), ("T", T, t, cS, s)):
            if size <= 1:
                continue
            cand = np.flatnonzero(mask)
            new_est = est - gain[cand]
            sur = (new_est * n - d * (size - 1) * other) / (n * math.sqrt((size - 1) * other))
            ok = sur >= alpha - SURPLUS_RTOL * max(1.0, abs(alpha))
            if not ok.any():
                continue
            j = int(np.argmax(np.where(ok, sur, -np.inf)))
            if best is None or sur[j] > best[0]:
                best = (float(sur[j]), side, int(cand[j]))
        if best is None:
            break
        _, side, v = best
        row = g.adjacency[v]
        if side == "S":
            S[v] = False
            est -= int(cT[v])
            np.subtract.at(cS, row, 1)
            s -= 1
        else:
            T[v] = False
            est -= int(cS[v])
            np.subtract.at(cT, row, 1)
            t -= 1
    final = make_pair(g, VertexSet(S), VertexSet(T))
    witness = MinimalWitness(
        pair=final,
        alpha=alpha,
        degree_floor_S=int(cT[S].min()),
        degree_floor_T=int(cS[T].min()),
    )
    if not witness.floors_hold(d):
        raise AssertionError(
            f"minimal witness violates the degree-floor bounds: {witness.to_dict(d)}"
        )
    return witness


# ---------------------------------------------------------------------------
# exact conductance


def min_conductance_exact(
    g: RegularGraph, *, cap: int = CONDUCTANCE_CAP, chunk: int = 1 << 20
) -> tuple[float, VertexSet]:
    """Exact edge conductance ``min |boundary(S)| / (d|S|)`` over ``1 <= |S| <= n/2``.

    Ties are broken towards the smallest bitmask.
    """
    n, d = g.n, g.d
    if n > cap:
        raise SizeCap(n, cap, "exact conductance")
    edges = np.array(g.edges(), dtype=np.int64)
    eu, ev = edges[:, 0], edges[:, 1]
    half = n // 2
    best_val = math.inf
    best_mask = 0
    total = 1 << n
    for lo in range(1, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        sizes = np.bitwise_count(masks).astype(np.int64)
        keep = sizes <= half
        masks, sizes = masks[keep], sizes[keep]
        if masks.size == 0:
            continue
        inside = np.zeros(masks.size, dtype=np.int64)
        for u, v in zip(eu.tolist(), ev.tolist()):
            inside += (masks >> u) & (masks >> v) & 1
        boundary = d * sizes - 2 * inside
        ratio = boundary / (d * sizes)
        j = int(np.argmin(ratio))
        if ratio[j] < best_val:
            best_val = float(ratio[j])
            best_mask = int(masks[j])
    return best_val, VertexSet.from_bits(n, best_mask)
