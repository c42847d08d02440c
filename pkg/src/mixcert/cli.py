"""Command-line interface: ``mixcert generate|certify|mix|spectrum|verify``.

Exit codes: 0 success, 1 internal error, 2 bad input, 3 regime/size refusal,
4 theorem cross-check failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

from .construct import load_sidecar, planted_expander, planted_ssve, random_regular, verify_claims
from .density import EXACT_CAP, certify_exact, search_witness
from .errors import GenerationFailure, MixcertError, SizeCap
from .graph import read_edge_list, write_edge_list
from .harness import _clean, verify_graph
from .spectral import DENSE_CAP, spectrum
from .walk import EXACT_WALK_CAP, mixing_time, trace_walk

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_INPUT = 2
EXIT_REFUSED = 3
EXIT_THEOREM = 4

GENERATORS = ("random-regular", "planted-expander", "planted-ssve")


class BadInput(Exception):
    pass


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("MIXCERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise BadInput(f"MIXCERT_THREADS must be an integer, got {env!r}") from None
    return 1


def _emit(report: dict, output: str | None) -> None:
    """Write a JSON report; the timestamp is the only run-dependent field."""
    report = dict(report)
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if output and output != "-":
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise BadInput("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill options the user left at their defaults from ``--config``."""
    cfg = _load_config(getattr(args, "config", None))
    for key, value in cfg.items():
        if not hasattr(args, key):
            raise BadInput(f"unknown config key {key!r}")
        if getattr(args, key) == parser.get_default(key) or getattr(args, key) is None:
            setattr(args, key, value)


def _resolved(args: argparse.Namespace) -> dict:
    skip = {"func", "config", "threads", "output", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _load_graph(path: str):
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise BadInput(f"cannot read graph {path}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    if args.seed is None:
        raise BadInput("--seed is required (no implicit seeding)")
    kind = args.kind
    if kind == "random-regular":
        g = random_regular(args.n, args.d, args.seed)
        inst = None
    elif kind == "planted-expander":
        inst = planted_expander(args.n, args.d, args.seed)
        g = inst.graph
    else:
        inst = planted_ssve(args.n, args.d, args.seed)
        g = inst.graph
    summary = {"command": "generate", "config": _resolved(args), "n": g.n, "d": g.d, "m": g.m}
    out = args.output
    if inst is not None and args.verify_claims:
        summary["claims"] = verify_claims(inst, seed=args.seed)
    if out:
        write_edge_list(g, out, comment=f"{kind} n={args.n} d={args.d} seed={args.seed}")
        summary["graph_file"] = out
        if inst is not None:
            side = args.sidecar or str(Path(out).with_suffix(".json"))
            inst.write_sidecar(side)
            summary["sidecar_file"] = side
    else:
        sys.stdout.write(f"# {kind} n={args.n} d={args.d} seed={args.seed}\n")
        sys.stdout.write(f"{g.n} {g.d}\n")
        sys.stdout.writelines(f"{u} {v}\n" for u, v in g.edges())
        if inst is not None and args.sidecar:
            inst.write_sidecar(args.sidecar)
        return EXIT_OK
    _emit(summary, args.report)
    return EXIT_OK


def cmd_certify(args) -> int:
    g = _load_graph(args.graph)
    mode = args.mode
    if mode == "auto":
        mode = "exact" if g.n <= args.cap else "heuristic"
    if args.alpha <= math.sqrt(g.d):
        print(
            f"warning: alpha={args.alpha} <= sqrt(d)={math.sqrt(g.d):.4g}; "
            "the condition is only meaningful for alpha > sqrt(d)",
            file=sys.stderr,
        )
    if mode == "exact":
        try:
            cert = certify_exact(g, args.alpha, args.delta, cap=args.cap, threads=_threads(args))
        except SizeCap as exc:
            print(f"error: {exc}; use --mode heuristic for larger graphs", file=sys.stderr)
            return EXIT_REFUSED
    else:
        if args.seed is None:
            raise BadInput("--seed is required for heuristic certification")
        cert = search_witness(
            g, args.alpha, args.delta, restarts=args.restarts, steps=args.steps,
            seed=args.seed, threads=_threads(args),
        )
    report = {"command": "certify", "config": _resolved(args), "certificate": cert.to_dict()}
    _emit(report, args.output)
    return EXIT_OK


def cmd_mix(args) -> int:
    g = _load_graph(args.graph)
    if args.starts == "all":
        starts = "all"
        if g.n > EXACT_WALK_CAP:
            print(f"error: n={g.n} exceeds the exact-walk cap {EXACT_WALK_CAP}; "
                  "pass --starts K with --seed", file=sys.stderr)
            return EXIT_REFUSED
    else:
        try:
            starts = int(args.starts)
        except ValueError:
            raise BadInput("--starts must be 'all' or a positive integer") from None
        if args.seed is None:
            raise BadInput("--seed is required for sampled starts")
    tr = trace_walk(g, starts, args.t_max, seed=args.seed)
    est = mixing_time(g, args.epsilon, starts, tr.t_max, seed=args.seed, strict=False)
    if args.trace_csv:
        tr.write_csv(args.trace_csv)
    report = {
        "command": "mix",
        "config": _resolved(args),
        "mixing": est.to_dict(),
        "trace": {"t_max": tr.t_max, "d_tv": tr.d_tv.tolist(), "l2sq": tr.l2sq.tolist(),
                  "starts": tr.starts, "grade": "exact" if tr.exact else "sampled"},
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    g = _load_graph(args.graph)
    if args.mode == "iterative" and args.seed is None:
        raise BadInput("--seed is required for the iterative solver")
    try:
        summ = spectrum(g, args.mode, seed=args.seed or 0)
    except SizeCap as exc:
        print(f"error: {exc}; use --mode iterative", file=sys.stderr)
        return EXIT_REFUSED
    _emit({"command": "spectrum", "config": _resolved(args), "spectrum": summ.to_dict()}, args.output)
    return EXIT_OK


def _corpus_items(args):
    if args.graph:
        g = _load_graph(args.graph)
        inst = load_sidecar(args.sidecar, g) if args.sidecar else None
        yield args.graph, g, inst
        return
    try:
        with open(args.corpus, encoding="utf-8") as fh:
            specs = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"cannot read corpus {args.corpus}: {exc}") from None
    for i, spec in enumerate(specs):
        kind = spec.get("kind")
        if kind not in GENERATORS or "seed" not in spec:
            raise BadInput(f"corpus entry {i}: need kind in {GENERATORS} and an explicit seed")
        n, d, s = int(spec["n"]), int(spec["d"]), spec["seed"]
        if kind == "random-regular":
            yield f"{kind}:{n}:{d}:{s}", random_regular(n, d, s), None
        else:
            make = planted_expander if kind == "planted-expander" else planted_ssve
            inst = make(n, d, s)
            yield f"{kind}:{n}:{d}:{s}", inst.graph, inst


def cmd_verify(args) -> int:
    if args.seed is None:
        raise BadInput("--seed is required for verify")
    if bool(args.graph) == bool(args.corpus):
        raise BadInput("pass exactly one of --graph or --corpus")
    options = {
        "alpha": args.alpha,
        "delta": args.delta,
        "probes": args.probes,
        "t_max": args.t_max,
        "restarts": args.restarts,
        "steps": args.steps,
        "claim_samples": args.claim_samples,
    }
    results = []
    for name, g, inst in _corpus_items(args):
        rep = verify_graph(g, seed=args.seed, instance=inst, threads=_threads(args), **options)
        rep["name"] = name
        results.append(rep)
    passed = all(r["passed"] for r in results)
    report = {"command": "verify", "config": _resolved(args), "results": results, "passed": passed}
    _emit(report, args.output)
    if not passed:
        failing = [
            f"{r['name']}:{k}" for r in results for k, c in r["theorem_checks"].items() if not c.get("passed", True)
        ]
        print("theorem cross-check failure: " + ", ".join(failing), file=sys.stderr)
        return EXIT_THEOREM
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixcert", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (falls back to MIXCERT_THREADS, then 1)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated graph as an edge list")
    g.add_argument("kind", choices=GENERATORS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--output", help="edge-list path (stdout if omitted)")
    g.add_argument("--sidecar", help="sidecar JSON path for planted instances")
    g.add_argument("--report", help="summary JSON path (stdout if omitted)")
    g.add_argument("--verify-claims", action="store_true")
    g.add_argument("--config")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("certify", help="check the small-set bipartite density condition")
    c.add_argument("graph")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--delta", type=float, default=1.0)
    c.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    c.add_argument("--cap", type=int, default=EXACT_CAP, help="largest n for exact mode")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--restarts", type=int, default=64)
    c.add_argument("--steps", type=int, default=None)
    c.add_argument("-o", "--output")
    c.add_argument("--config")
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("mix", help="exact random-walk trace and mixing time")
    m.add_argument("graph")
    m.add_argument("--epsilon", type=float, default=1 / 3)
    m.add_argument("--starts", default="all", help="'all' or number of sampled point masses")
    m.add_argument("--t-max", dest="t_max", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--trace-csv")
    m.add_argument("-o", "--output")
    m.add_argument("--config")
    m.set_defaults(func=cmd_mix)

    s = sub.add_parser("spectrum", help="extreme eigenvalues of the walk matrix")
    s.add_argument("graph")
    s.add_argument("--mode", choices=("auto", "exact-dense", "iterative"), default="auto")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("-o", "--output")
    s.add_argument("--config")
    s.set_defaults(func=cmd_spectrum)

    v = sub.add_parser("verify", help="run every cross-check on a graph or generated corpus")
    v.add_argument("--graph")
    v.add_argument("--sidecar")
    v.add_argument("--corpus", help="JSON list of {kind, n, d, seed}")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--alpha", type=float, default=None)
    v.add_argument("--delta", type=float, default=1.0)
    v.add_argument("--probes", type=int, default=10_000)
    v.add_argument("--t-max", dest="t_max", type=int, default=None)
    v.add_argument("--restarts", type=int, default=64)
    v.add_argument("--steps", type=int, default=None)
    v.add_argument("--claim-samples", dest="claim_samples", type=int, default=10_000)
    v.add_argument("-o", "--output")
    v.add_argument("--config")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        _apply_config(args, sub)
        return args.func(args)
    except (BadInput, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except SizeCap as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (GenerationFailure, MixcertError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
