"""Command-line interface.

Machine output (summary files, rankings, CSV) goes to ``--out`` or stdout;
progress and traces go to stderr.  Exit codes: 0 success, 1 contract
violation or bad usage, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .bench import (
    run_noise_experiment,
    run_quality_experiment,
    run_scalability_experiment,
    write_csv,
)
from .graph import ContractError, EdgeListError, load_edge_list, save_edge_list
from .reconstruction import (
    DM_MAGIC,
    blow_up,
    density_matrix,
    reconstruction_error,
    write_density_matrix,
)
from .search import STORE_MAGIC, SummaryStore, db_add, db_add_full, db_query, one_stage_query
from .summarizer import SUMMARY_MAGIC, SummaryConfig, SummaryFailed, format_summary, read_summary, summarize
from .synthetic import GeneratorConfig, generate, perturb

log = logging.getLogger("szgraph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


_CFG_KEYS = {f.name: f.type for f in fields(SummaryConfig)}
_ALIASES = {"eps": "epsilon", "cmin": "c_min", "dprime": "d_prime"}


def read_config(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        out[_ALIASES.get(key, key)] = value.strip()
    return out


def _coerce(name, value):
    kind = _CFG_KEYS[name]
    if kind in ("bool", bool):
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{name}: expected a boolean, got {value!r}")
    try:
        return (float if kind in ("float", float) else int)(value)
    except ValueError:
        raise UsageError(f"{name}: cannot parse {value!r}") from None


def build_config(args) -> SummaryConfig:
    values = {}
    if args.config:
        for key, value in read_config(args.config).items():
            if key in _CFG_KEYS:
                values[key] = value
            elif key not in ("l", "k", "p"):
                raise UsageError(f"unknown config key {key!r}")
    flags = {
        "epsilon": args.eps, "c_min": args.cmin, "d_prime": args.dprime,
        "initial_k": args.initial_k, "seed": args.seed, "threads": args.threads,
        "classic_loop": args.classic_loop or None, "fallback": args.fallback or None,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return SummaryConfig(**{k: _coerce(k, v) for k, v in values.items()})


def _add_summary_flags(p):
    g = p.add_argument_group("summarizer")
    g.add_argument("--eps", type=float, help="regularity tolerance (default 0.8)")
    g.add_argument("--cmin", type=float, help="minimum compression rate 1 - k/n (default 0.9)")
    g.add_argument("--dprime", type=float, help="density floor for reduced-graph edges (default 0)")
    g.add_argument("--initial-k", type=int, help="classes of the initial partition (default 4)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--classic-loop", action="store_true", help="refine while irregular, stop at the first regular partition")
    g.add_argument("--fallback", action="store_true", help="use the last partition when none qualifies")
    g.add_argument("--config", help="key=value config file; flags override it")
    g.add_argument("--threads", type=int, default=None, help="worker cap for pair checks and experiment cells")


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _log_trace(trace):
    for i, t in enumerate(trace):
        print(
            f"iter={i} k={t.k} irregular={t.irregular} sze={t.sze:.6f} "
            f"compression={t.compression:.4f} candidate={int(t.collected)}",
            file=sys.stderr,
        )


def cmd_summarize(args):
    cfg = build_config(args)
    g = load_edge_list(args.graph)
    try:
        s = summarize(g, cfg)
    except SummaryFailed as exc:
        if args.trace:
            _log_trace(exc.trace)
        raise
    if args.trace:
        _log_trace(s.trace)
    _emit(format_summary(s.reduced), args.out)
    return 0


def cmd_reconstruct(args):
    r = read_summary(args.summary)
    a = blow_up(r)
    if args.dump:
        write_density_matrix(a, args.dump)
    lines = []
    if args.ref:
        ref = load_edge_list(args.ref, n_hint=r.n)
        if ref.n != r.n:
            raise ContractError(f"reference has {ref.n} vertices, summary {r.n}")
        b = density_matrix(ref)
        raw = reconstruction_error(a, b, args.p)
        norm = reconstruction_error(a, b, args.p, normalized=True)
        lines.append(f"l{args.p:g} raw={raw:.6f} normalized={norm:.6f}")
    elif not args.dump:
        raise UsageError("reconstruct needs --ref and/or --dump")
    if lines:
        _emit(lines, args.out)
    return 0


def cmd_db_add(args):
    kind = "spectrum" if args.one_stage else "summary"
    db = SummaryStore(args.db, kind=kind)
    cfg = build_config(args)
    for path in args.graphs:
        g = load_edge_list(path)
        if args.one_stage:
            rec = db_add_full(db, g, source=path, mode=args.spectrum)
        else:
            rec = db_add(db, g, cfg, source=path, mode=args.spectrum)
        print(rec)
    log.info("store %s holds %d records", args.db, len(db))
    return 0


def cmd_db_query(args):
    db = SummaryStore(args.db, kind="spectrum" if args.one_stage else "summary", create=False)
    q = load_edge_list(args.graph)
    if args.one_stage:
        res = one_stage_query(db, q, args.k, args.l, mode=args.spectrum)
    else:
        res = db_query(db, q, args.k, build_config(args), args.l, mode=args.spectrum)
    if res.note:
        log.warning(res.note)
    log.info("t_summary=%.6f t_eig=%.6f t_distance=%.6f", res.t_summary, res.t_eig, res.t_distance)
    _emit([f"{rank} {rid} {dist:.6f}" for rank, (rid, dist) in enumerate(res.ranking, 1)], args.out)
    return 0


def cmd_gen(args):
    cfg = GeneratorConfig(args.n, args.clusters, args.eta1, args.eta2, args.seed or 0)
    g, gt, labels = generate(cfg)
    save_edge_list(g, args.out)
    if args.gt:
        save_edge_list(gt, args.gt)
    if args.labels:
        Path(args.labels).write_text("\n".join(str(int(x)) for x in labels) + "\n", encoding="utf-8")
    return 0


def cmd_perturb(args):
    g = load_edge_list(args.graph)
    save_edge_list(perturb(g, args.prob, args.seed or 0), args.out)
    return 0


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def cmd_bench(args):
    cfg = build_config(args)
    workers = args.threads or 1
    if args.experiment == "noise":
        seeds = range(args.seeds) if args.seeds else None
        rows = run_noise_experiment(
            _ints(args.sizes) if args.sizes else None,
            _floats(args.etas) if args.etas else None,
            cfg, seeds, paper_scale=args.paper_scale, workers=workers, out=args.out,
        )
    elif args.experiment == "quality":
        rows = run_quality_experiment(
            args.n, args.kmax, cfg, seed=cfg.seed, paper_scale=args.paper_scale,
            workers=workers, out=args.out,
        )
    else:
        rows = run_scalability_experiment(
            args.mode, cfg, n=args.n or 2000, paper_scale=args.paper_scale,
            db_sizes=_ints(args.db_sizes) if args.db_sizes else None,
            graph_sizes=_ints(args.sizes) if args.sizes else None,
            workers=workers, out=args.out,
        )
    if not args.out:
        write_csv(rows, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    formats = f"{SUMMARY_MAGIC}, {STORE_MAGIC}, {DM_MAGIC.rstrip(bytes(1)).decode()}"
    p = _Parser(prog="szgraph", description="Regularity-based graph summarization and spectral search.")
    p.add_argument("--version", action="version", version=f"szgraph {__version__} (formats: {formats})")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("summarize", help="summarize an edge list")
    s.add_argument("graph")
    s.add_argument("--out")
    s.add_argument("--trace", action="store_true", help="one stderr line per iteration")
    _add_summary_flags(s)
    s.set_defaults(func=cmd_summarize)

    r = sub.add_parser("reconstruct", help="blow up a summary and measure lp error")
    r.add_argument("summary")
    r.add_argument("--ref", help="reference edge list")
    r.add_argument("--p", type=int, choices=(1, 2), default=2)
    r.add_argument("--dump", help="write the density matrix as a binary dump")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    db = sub.add_parser("db", help="summary database")
    dsub = db.add_subparsers(dest="db_command", required=True, parser_class=_Parser)
    a = dsub.add_parser("add", help="summarize graphs into a store")
    a.add_argument("graphs", nargs="+")
    a.add_argument("--db", required=True)
    a.add_argument("--one-stage", action="store_true", help="store full-graph spectra instead")
    a.add_argument("--spectrum", choices=("laplacian", "adjacency"), default="laplacian")
    _add_summary_flags(a)
    a.set_defaults(func=cmd_db_add)
    q = dsub.add_parser("query", help="top-k query")
    q.add_argument("graph")
    q.add_argument("--db", required=True)
    q.add_argument("-k", type=int, default=10)
    q.add_argument("--l", type=int, default=None, help="head count of the spectral distance")
    q.add_argument("--one-stage", action="store_true", help="query a full-spectrum store")
    q.add_argument("--spectrum", choices=("laplacian", "adjacency"), default="laplacian")
    q.add_argument("--out")
    _add_summary_flags(q)
    q.set_defaults(func=cmd_db_query)

    g = sub.add_parser("gen", help="planted-clique graph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--clusters", type=int, required=True)
    g.add_argument("--eta1", type=float, required=True, help="inter-cluster noise")
    g.add_argument("--eta2", type=float, required=True, help="intra-cluster noise")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--gt", help="also write the noiseless ground truth")
    g.add_argument("--labels", help="also write cluster labels, one per line")
    g.set_defaults(func=cmd_gen)

    pt = sub.add_parser("perturb", help="add spurious edges")
    pt.add_argument("graph")
    pt.add_argument("--prob", type=float, required=True)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_perturb)

    b = sub.add_parser("bench", help="experiments")
    b.add_argument("experiment", choices=("noise", "quality", "scale"))
    b.add_argument("--out")
    b.add_argument("--paper-scale", action="store_true", help="use the published grids")
    b.add_argument("--sizes", help="comma-separated graph sizes (noise, scale graph-size)")
    b.add_argument("--etas", help="comma-separated noise levels (noise)")
    b.add_argument("--seeds", type=int, help="seeds per cell (noise)")
    b.add_argument("--n", type=int, help="graph size (quality, scale db-size)")
    b.add_argument("--kmax", type=int, default=36, help="largest k for MAP@k (quality)")
    b.add_argument("--mode", choices=("db-size", "graph-size"), default="db-size")
    b.add_argument("--db-sizes", help="comma-separated database sizes (scale db-size)")
    _add_summary_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ContractError, EdgeListError, SummaryFailed, ValueError) as exc:
        print(f"szgraph: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"szgraph: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
