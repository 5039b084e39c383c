"""Spectral signatures, spectral distance and the summary database.

The two-stage search summarizes every database graph once, stores the
spectrum of its reduced graph, and answers a query by summarizing the query
graph on-line and ranking stored spectra by spectral distance.  The
one-stage baseline stores full-graph spectra instead.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from filelock import FileLock

from .graph import ContractError, Graph
from .summarizer import (
    ReducedGraph,
    SummaryConfig,
    SummaryFailed,
    format_summary,
    parse_summary,
    summarize,
)

STORE_MAGIC = "SZE-STORE v1"
KINDS = ("summary", "spectrum")


@dataclass(frozen=True)
class SpectralSignature:
    """Ascending eigenvalues of a graph matrix."""

    eigs: np.ndarray
    source_n: int

    def __len__(self):
        return len(self.eigs)


def _weights(obj) -> np.ndarray:
    if isinstance(obj, Graph):
        return np.asarray(obj.to_dense(), dtype=np.float64)
    if isinstance(obj, ReducedGraph):
        return obj.weights
    w = np.asarray(obj, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ContractError("expected a square weight matrix")
    return w


def spectrum(obj, mode: str = "laplacian") -> SpectralSignature:
    """Full ascending spectrum of ``L = D - W`` (or of ``W`` with ``mode="adjacency"``).

    ``obj`` may be a :class:`Graph`, a :class:`ReducedGraph` or a square
    weight matrix.
    """
    w = _weights(obj)
    if w.shape[0] < 1:
        raise ContractError("spectrum of an empty graph")
    if mode == "laplacian":
        mat = np.diag(w.sum(axis=1)) - w
    elif mode == "adjacency":
        mat = w
    else:
        raise ContractError(f"unknown spectrum mode {mode!r}")
    eigs = np.linalg.eigvalsh(mat)
    return SpectralSignature(eigs, w.shape[0])


def _eigs(s) -> np.ndarray:
    return np.asarray(s.eigs if isinstance(s, SpectralSignature) else s, dtype=np.float64)


def spectral_distance(s1, s2, l: Optional[int] = None) -> float:
    """Head/tail aligned mean absolute eigenvalue gap.

    The shorter spectrum (length ``n1``) is compared head-to-head with the
    other one for its first ``l`` eigenvalues and tail-to-tail for the rest.
    ``l`` defaults to ``n1 // 2``.
    """
    e1, e2 = _eigs(s1), _eigs(s2)
    if len(e1) > len(e2):
        e1, e2 = e2, e1
    n1, n2 = len(e1), len(e2)
    if n1 == 0:
        raise ContractError("spectral distance of an empty spectrum")
    if l is None:
        l = n1 // 2
    if not 0 <= l <= n1:
        raise ContractError(f"head count l={l} outside [0, {n1}]")
    head = np.abs(e2[:l] - e1[:l]).sum()
    tail = np.abs(e2[l + n2 - n1:] - e1[l:]).sum()
    return float(head + tail) / n1


# -- persistent store -----------------------------------------------------------


@dataclass
class SummaryRecord:
    id: int
    sig: SpectralSignature
    meta: dict
    reduced: Optional[ReducedGraph] = None

    def lines(self) -> list:
        out = [f"REC {self.id}"]
        if self.reduced is not None:
            out += format_summary(self.reduced)
        out.append("eigs=" + " ".join(repr(float(x)) for x in self.sig.eigs))
        out.append("meta=" + json.dumps(self.meta, sort_keys=True, separators=(",", ":")))
        out.append("ENDREC")
        return out


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the clock for reproducible stores
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_record(rec_id, body, kind):
    if len(body) < 2 or not body[-2].startswith("eigs=") or not body[-1].startswith("meta="):
        raise ValueError(f"record {rec_id}: missing eigs/meta lines")
    eigs = np.array(body[-2][len("eigs="):].split(), dtype=np.float64)
    meta = json.loads(body[-1][len("meta="):])
    reduced = parse_summary(body[:-2]) if kind == "summary" else None
    n = reduced.k if reduced is not None else len(eigs)
    if len(eigs) != n:
        raise ValueError(f"record {rec_id}: signature length {len(eigs)} does not match {n}")
    return SummaryRecord(rec_id, SpectralSignature(eigs, n), meta, reduced)


class SummaryStore:
    """Append-only single-file store of signed records.

    ``kind="summary"`` records carry a reduced graph and its spectrum;
    ``kind="spectrum"`` records carry a full-graph spectrum only (the
    one-stage baseline).  Writers serialize on a lock file next to the
    store; readers work on the snapshot taken at open or :meth:`reload`.
    """

    def __init__(self, path, kind: str = "summary", create: bool = True):
        if kind not in KINDS:
            raise ContractError(f"store kind must be one of {KINDS}")
        self.path = Path(path)
        self.kind = kind
        self._lock = FileLock(str(self.path) + ".lock")
        if not self.path.exists():
            if not create:
                raise FileNotFoundError(self.path)
            with self._lock:
                if not self.path.exists():
                    self.path.write_text(self._header() + "\n", encoding="utf-8")
        self.reload()

    def _header(self):
        return f"{STORE_MAGIC} kind={self.kind}"

    def reload(self) -> None:
        lines = self.path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith(STORE_MAGIC):
            raise ValueError(f"{self.path}: not a store file")
        kind = lines[0].partition("kind=")[2] or "summary"
        if kind != self.kind:
            raise ContractError(f"{self.path} holds {kind} records, not {self.kind}")
        records, cur, body = [], None, []
        for ln in lines[1:]:
            if ln.startswith("REC "):
                cur, body = int(ln[4:]), []
            elif ln == "ENDREC":
                if cur is None:
                    raise ValueError(f"{self.path}: ENDREC without REC")
                records.append(_parse_record(cur, body, self.kind))
                cur = None
            elif cur is not None:
                body.append(ln)
        # an unterminated trailing record is a write in progress; skip it
        self.records = records

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def _append(self, make) -> int:
        with self._lock:
            self.reload()
            rec_id = self.records[-1].id + 1 if self.records else 0
            rec = make(rec_id)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write("\n".join(rec.lines()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.records.append(rec)
        return rec_id

    def add_summary(self, reduced: ReducedGraph, meta: dict, mode: str = "laplacian") -> int:
        if self.kind != "summary":
            raise ContractError("this store holds full spectra")
        sig = spectrum(reduced, mode)
        return self._append(lambda i: SummaryRecord(i, sig, dict(meta), reduced))

    def add_spectrum(self, sig: SpectralSignature, meta: dict) -> int:
        if self.kind != "spectrum":
            raise ContractError("this store holds summaries")
        return self._append(lambda i: SummaryRecord(i, sig, dict(meta)))


def db_add(db: SummaryStore, g: Graph, cfg: SummaryConfig = None, source: str = "", mode: str = "laplacian") -> int:
    """Summarize ``g`` and append its signed reduced graph; the graph itself is not kept."""
    cfg = cfg or SummaryConfig()
    try:
        summary = summarize(g, cfg)
    except SummaryFailed as exc:
        raise SummaryFailed(f"{source or '<graph>'}: {exc}", exc.trace) from None
    meta = {"n": g.n, "source": str(source), "created": _timestamp(), "config": cfg.describe()}
    return db.add_summary(summary.reduced, meta, mode)


def db_add_full(db: SummaryStore, g: Graph, source: str = "", mode: str = "laplacian") -> int:
    """Append the full-graph spectrum of ``g`` to a one-stage store."""
    meta = {"n": g.n, "source": str(source), "created": _timestamp()}
    return db.add_spectrum(spectrum(g, mode), meta)


@dataclass
class QueryResult:
    """Ranked ``(id, distance)`` pairs plus the three query-time terms in seconds."""

    ranking: list
    t_summary: float = 0.0
    t_eig: float = 0.0
    t_distance: float = 0.0
    note: str = ""
    query_size: int = 0

    @property
    def total(self) -> float:
        return self.t_summary + self.t_eig + self.t_distance

    def ids(self) -> list:
        return [i for i, _ in self.ranking]


def _rank(db, sig, k, l):
    if len(db) == 0:
        raise ContractError("query against an empty store")
    if k < 1:
        raise ContractError("k must be at least 1")
    t0 = time.perf_counter()
    scored = [(spectral_distance(sig, rec.sig, l), rec.id) for rec in db]
    scored.sort()
    t = time.perf_counter() - t0
    note = ""
    if k > len(scored):
        note = f"k={k} exceeds store size {len(scored)}; returning every record"
    return [(i, d) for d, i in scored[:k]], t, note


def db_query(db: SummaryStore, q: Graph, k: int, cfg: SummaryConfig = None, l: Optional[int] = None,
             mode: str = "laplacian") -> QueryResult:
    """Two-stage query: summarize ``q``, sign its reduced graph, rank stored signatures."""
    cfg = cfg or SummaryConfig()
    t0 = time.perf_counter()
    reduced = summarize(q, cfg).reduced
    t1 = time.perf_counter()
    sig = spectrum(reduced, mode)
    t2 = time.perf_counter()
    ranking, t_sd, note = _rank(db, sig, k, l)
    return QueryResult(ranking, t1 - t0, t2 - t1, t_sd, note, reduced.k)


def one_stage_query(db_full: SummaryStore, q: Graph, k: int, l: Optional[int] = None,
                    mode: str = "laplacian") -> QueryResult:
    """Baseline query on full-graph spectra."""
    t0 = time.perf_counter()
    sig = spectrum(q, mode)
    t1 = time.perf_counter()
    ranking, t_sd, note = _rank(db_full, sig, k, l)
    return QueryResult(ranking, 0.0, t1 - t0, t_sd, note, q.n)
