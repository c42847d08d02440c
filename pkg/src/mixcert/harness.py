"""End-to-end verification harness behind ``mixcert verify``.

:func:`verify_graph` runs every cross-check on one graph and returns a
JSON-ready dict. Checks that restate proved inequalities are collected under
``"theorem_checks"``; any failure there is an internal inconsistency and makes
the CLI exit with status 4. Everything else (claims about the planted
constructions, theorem-formula ratios) is reported without affecting the
exit status.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .construct import PlantedInstance, verify_claims
from .density import (
    EXACT_CAP,
    certify_exact,
    min_conductance_exact,
    minimize_witness,
    search_witness,
)
from .graph import (
    RegularGraph,
    conductance_of_cut,
    has_bipartite_component,
    is_connected,
    make_pair,
)
from .spectral import cheeger_check, eml_check, random_pairs, spectrum, tanner_check
from .walk import (
    EXACT_WALK_CAP,
    default_t_max,
    l2_decrease_audit,
    lower_bound_audit,
    mixing_time,
    point_mass,
    spectral_envelope_check,
    submultiplicativity_all,
    trace_walk,
)

__all__ = ["verify_graph", "theorem_table", "DEFAULTS"]

DEFAULTS: dict[str, Any] = {
    "alpha": None,  # defaults to d/4
    "delta": 1.0,
    "probes": 10_000,
    "t_max": None,
    "restarts": 64,
    "steps": None,
    "exact_cap": EXACT_CAP,
    "conductance_cap": 16,
    "claim_samples": 10_000,
    "tol": 1e-6,
}


def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def theorem_table(n: int, d: int, alpha: float, delta: float, tau_1n: int | None, tau_13: int | None) -> dict:
    """Juxtapose measured mixing times with the three asymptotic formulas.

    Only ratios are reported; the hidden constants are not asserted.
    """
    rows = {}
    if 0 < alpha < d:
        L = math.log(d / alpha)
        upper_sq = (math.log(n) / L) ** 2
        upper = math.log(n) / L
        rows["upper_tau_1n"] = {
            "formula": "(log n / log(d/alpha))^2",
            "value": upper_sq,
            "measured": tau_1n,
            "ratio": (tau_1n / upper_sq) if tau_1n is not None else None,
        }
        rows["upper_tau_13"] = {
            "formula": "log n / log(d/alpha)",
            "value": upper,
            "measured": tau_13,
            "ratio": (tau_13 / upper) if tau_13 is not None else None,
        }
        if 0 < delta < 1:
            floor = math.log(1 / delta) / L
            rows["lower_tau_1n"] = {
                "formula": "log(1/delta) / log(d/alpha)",
                "value": floor,
                "measured": tau_1n,
                "ratio": (tau_1n / floor) if tau_1n is not None else None,
            }
    return {"alpha": alpha, "delta": delta, "rows": rows, "grade": "exact" if tau_1n is not None else None}


def verify_graph(
    g: RegularGraph,
    *,
    seed: int,
    instance: PlantedInstance | None = None,
    threads: int = 1,
    **overrides,
) -> dict:
    """Run the full cross-check battery on ``g``; deterministic given ``seed``."""
    cfg = dict(DEFAULTS)
    unknown = set(overrides) - set(cfg)
    if unknown:
        raise ValueError(f"unknown verify options: {sorted(unknown)}")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    n, d = g.n, g.d
    alpha = cfg["alpha"] if cfg["alpha"] is not None else d / 4
    delta = cfg["delta"]
    tol = cfg["tol"]
    probes = int(cfg["probes"])
    t_max = cfg["t_max"] if cfg["t_max"] is not None else default_t_max(n)
    rng = np.random.default_rng([seed, n, d])
    checks: dict[str, dict] = {}
    report: dict[str, Any] = {
        "graph": {"n": n, "d": d, "m": g.m, "connected": is_connected(g)},
        "config": {**cfg, "alpha": alpha, "t_max": t_max, "seed": seed},
    }
    notes = []
    if alpha <= math.sqrt(d):
        notes.append("alpha <= sqrt(d): even random graphs violate the density condition here")

    # spectral
    summ = spectrum(g, "auto", seed=seed)
    report["spectrum"] = summ.to_dict()

    pairs = random_pairs(g, probes, rng)
    checks["eml"] = eml_check(g, summ, pairs, tol=tol).to_dict()

    cheeger = {"check": "cheeger"}
    if n <= cfg["conductance_cap"]:
        phi, cut = min_conductance_exact(g, cap=cfg["conductance_cap"])
        rep = cheeger_check(g, summ, phi, exact=True, tol=tol)
        cheeger.update(rep.to_dict(), probes=1, argmin=cut.ids.tolist())
    else:
        worst = math.inf
        fails = 0
        half = n // 2
        for _ in range(probes):
            size = int(rng.integers(1, half + 1))
            S = rng.choice(n, size=size, replace=False)
            phi_cut = conductance_of_cut(g, S)
            rep = cheeger_check(g, summ, phi_cut, exact=False, tol=tol)
            worst = min(worst, rep.left_margin)
            fails += not rep.passed
        cheeger.update(
            lower=0.5 * max(0.0, 1 - summ.lambda2),
            probes=probes,
            min_left_margin=worst,
            violations=fails,
            passed=fails == 0,
            grade="sampled",
        )
    checks["cheeger"] = cheeger

    sets = []
    for _ in range(probes):
        size = int(rng.integers(1, n + 1))
        sets.append(rng.choice(n, size=size, replace=False))
    checks["tanner"] = tanner_check(g, summ, sets, tol=tol).to_dict()

    # density
    if n <= cfg["exact_cap"]:
        cert = certify_exact(g, alpha, delta, cap=cfg["exact_cap"], threads=threads)
    else:
        cert = search_witness(
            g, alpha, delta, restarts=cfg["restarts"], steps=cfg["steps"], seed=seed, threads=threads
        )
    report["density"] = cert.to_dict()
    if alpha <= math.sqrt(d):
        report["density"]["warning"] = notes[-1]

    # walk
    walk: dict[str, Any] = {}
    if n <= EXACT_WALK_CAP:
        tr = trace_walk(g, "all", t_max)
    else:
        tr = trace_walk(g, min(n, 512), t_max, seed=seed)
    walk["trace"] = {
        "starts": tr.starts,
        "n_starts": tr.n_starts,
        "t_max": tr.t_max,
        "d_tv": tr.d_tv.tolist(),
        "l2sq": tr.l2sq.tolist(),
        "grade": "exact" if tr.exact else "sampled",
    }
    l2_probes = tr.n_starts * tr.t_max
    checks["l2_monotone"] = {
        "check": "l2_monotone",
        "probes": l2_probes,
        "max_increase": tr.max_l2_increase,
        "min_l2sq": tr.min_l2sq,
        "passed": tr.max_l2_increase <= tol and tr.min_l2sq >= 1 / n - tol,
        "grade": "exact",
    }
    if tr.exact:
        checks["tv_monotone"] = {
            "check": "tv_monotone",
            "probes": tr.t_max,
            "max_increase": tr.max_tv_increase,
            "passed": tr.max_tv_increase <= tol,
            "grade": "exact",
        }
        subs = submultiplicativity_all(tr, tol=tol)
        checks["submultiplicativity"] = {
            "check": "submultiplicativity",
            "probes": len(subs),
            "min_margin": min((r.margin for r in subs), default=None),
            "violations": sum(not r.passed for r in subs),
            "passed": all(r.passed for r in subs),
            "grade": "exact",
        }
    if summ.lam < 1 - 1e-12:
        env = spectral_envelope_check(tr, summ.lam, n, tol=tol)
        checks["spectral_envelope"] = {
            "check": "spectral_envelope",
            "probes": tr.n_starts * (tr.t_max + 1),
            "min_margin": env.min_margin,
            "passed": env.passed,
            "grade": "exact",
        }
    else:
        walk["envelope_skipped"] = "disconnected or bipartite component: lambda = 1"

    eps_1n = 1.0 / n
    starts = "all" if n <= EXACT_WALK_CAP else min(n, 512)
    m_1n = mixing_time(g, eps_1n, starts, t_max, seed=seed, strict=False)
    m_13 = mixing_time(g, 1 / 3, starts, t_max, seed=seed, strict=False)
    walk["tau_1n"] = m_1n.to_dict()
    walk["tau_1_3"] = m_13.to_dict()
    if has_bipartite_component(g):
        walk["note"] = "bipartite component: the non-lazy walk never mixes"

    # squared-norm decrease from a few point masses
    alpha_spec = summ.lam * d
    l2 = []
    for v in rng.choice(n, size=min(n, 8), replace=False).tolist():
        p = point_mass(n, v)
        l2.append(l2_decrease_audit(g, p, 1.0, max(alpha_spec, 1e-12)).to_dict())
    walk["l2_decrease"] = {
        "alpha": alpha_spec,
        "delta": 1.0,
        "max_normalized": max(r["normalized"] for r in l2),
        "samples": len(l2),
        "grade": "exact",
    }
    report["walk"] = walk

    # witnesses and the walk lower bound
    witnesses = []
    if instance is not None:
        witnesses.append(("planted", make_pair(g, instance.S, instance.T)))
    if cert.witness is not None:
        witnesses.append(("certificate", cert.witness))
    lower = []
    floors_ok = True
    for source, pair in witnesses:
        if pair.surplus_alpha is None or pair.surplus_alpha < alpha:
            continue
        mw = minimize_witness(g, pair, alpha)
        floors_ok &= mw.floors_hold(d)
        lb = lower_bound_audit(g, pair, alpha, t_max=min(t_max, 50), delta=None, tau_t_max=t_max)
        entry = {"source": source, "minimal_witness": mw.to_dict(d), **lb.to_dict()}
        lower.append(entry)
    if lower:
        checks["witness_floors"] = {
            "check": "witness_floors",
            "probes": len(lower),
            "passed": bool(floors_ok),
            "grade": "exact",
        }
        checks["walk_lower_bound"] = {
            "check": "walk_lower_bound",
            "probes": sum(e["steps"] for e in lower),
            "passed": all(e["passed"] for e in lower),
            "grade": "exact",
        }
    report["witnesses"] = lower

    # theorem table: alpha from the spectral certificate (delta = 1) and the
    # largest surplus found in the small-set regime
    tables = {"spectral_alpha": theorem_table(n, d, alpha_spec, 1.0, m_1n.tau, m_13.tau)}
    if cert.max_surplus_found is not None:
        tables["found_alpha"] = theorem_table(
            n, d, max(cert.max_surplus_found, 1e-12), cert.size_cap / n, m_1n.tau, m_13.tau
        )
    if instance is not None:
        tables["planted"] = theorem_table(n, d, d / 4, 1 / (d + 2), m_1n.tau, m_13.tau)
    report["theorem_table"] = tables

    if instance is not None:
        claims = verify_claims(instance, cuts=cfg["claim_samples"], sets=cfg["claim_samples"], seed=seed)
        report["claims"] = claims
        checks["planted_density"] = {
            "check": "planted_density",
            "probes": 1,
            "passed": claims["density"]["passed"],
            "grade": "exact",
        }

    report["theorem_checks"] = checks
    report["passed"] = all(c.get("passed", True) for c in checks.values())
    if notes:
        report["notes"] = notes
    return _clean(report)
