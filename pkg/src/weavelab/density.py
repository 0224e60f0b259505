"""Batch experiments over weaving knots, grid closures and small alternating diagrams.

Every scan cell is independent.  Cells that raise are recorded with an error
string and the scan carries on.  Results are sorted by their parameters so
the output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .anglestruct import axis_volume
from .diagrams import (
    BraidWord,
    LinkDiagram,
    braid_closure,
    change_crossings,
    grid_closure_crossings,
    grid_weave_closure,
    nugatory_crossings,
    tait_graph,
    weaving_diagram,
)
from .errors import ParameterError, WeaveError
from .hypgeom import CATALAN, V3, V8, dehn_filling_factor, weaving_bounds
from .spanning import determinant, log_spanning_tree_count, spanning_tree_count

__all__ = [
    "ScanConfig",
    "DensityRecord",
    "weaving_record",
    "weaving_scan",
    "EntropyRow",
    "grid_entropy_scan",
    "FolnerRow",
    "FolnerReport",
    "folner_density_experiment",
    "CrossingChangeReport",
    "load_corpus",
    "crossing_change_experiment",
    "MuRow",
    "mu_density_scan",
    "SpectrumSummary",
    "spectrum_sample",
    "load_thresholds",
    "write_jsonl",
    "write_csv",
    "format_float",
    "ENTROPY_LIMIT",
    "EXACT_GRID_LIMIT",
]

ENTROPY_LIMIT = 4 * CATALAN / math.pi
EXACT_GRID_LIMIT = 14


def _data_text(name: str) -> str:
    return resources.files("weavelab").joinpath("data").joinpath(name).read_text()


def load_thresholds() -> dict:
    """Named relative-gap thresholds from the bundled ``thresholds.txt``."""
    out = {}
    for line in _data_text("thresholds.txt").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            out[key.strip()] = float(value)
    return out


def _int_range(r) -> tuple:
    vals = tuple(int(x) for x in r)
    if not vals:
        raise ParameterError("empty range")
    return vals


@dataclass(frozen=True)
class ScanConfig:
    """Parameter grid and execution options for a scan."""

    p_range: tuple
    q_range: tuple
    exact: bool = False
    jobs: int = 1
    output: Optional[str] = None
    axis: bool = True

    def __post_init__(self):
        object.__setattr__(self, "p_range", _int_range(self.p_range))
        object.__setattr__(self, "q_range", _int_range(self.q_range))
        if min(self.p_range) < 3:
            raise ParameterError(f"p must be >= 3, got {min(self.p_range)}")
        if min(self.q_range) < 1:
            raise ParameterError(f"q must be >= 1, got {min(self.q_range)}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ParameterError(f"jobs must be a positive integer, got {self.jobs!r}")

    def cells(self) -> list:
        return sorted(set(itertools.product(self.p_range, self.q_range)))


@dataclass
class DensityRecord:
    """One (p, q) cell of a weaving-knot scan."""

    p: int
    q: int
    c: int
    log_det: Optional[float] = None
    det_density: Optional[float] = None
    det_exact: Optional[str] = None
    vol_lower: Optional[float] = None
    vol_upper: Optional[float] = None
    axis_volume: Optional[float] = None
    axis_filled_lower: Optional[float] = None
    verdicts: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def bound_ordering_holds(p: int, q: int, log_det: float) -> bool:
    """Ordering of ``2 pi log det`` against the upper bound and ``v8 c``.

    When ``2p < q^2 + q + 4``: ``upper < 2 pi log det < v8 (p-1) q``;
    otherwise ``2 pi log det < upper < v8 (p-1) q``.
    """
    x = 2 * math.pi * log_det
    upper = (V8 * (p - 3) + 4 * V3) * q
    top = V8 * (p - 1) * q
    if 2 * p < q * q + q + 4:
        return upper < x < top
    return x < upper < top


def weaving_record(p: int, q: int, exact: bool = False, axis: bool = True) -> DensityRecord:
    """Determinant density, volume bounds and verdicts for W(p, q)."""
    c = q * (p - 1)
    rec = DensityRecord(p=p, q=q, c=c)
    try:
        det = determinant(weaving_diagram(p, q), exact=exact)
        rec.log_det = det.log_value
        rec.det_exact = None if det.exact is None else str(det.exact)
        rec.det_density = 2 * math.pi * det.log_value / c
        b = weaving_bounds(p, q)
        rec.vol_lower, rec.vol_upper = b.lower, b.upper
        if axis:
            rec.axis_volume = axis_volume(p, q)
            if q >= 7:
                rec.axis_filled_lower = rec.axis_volume * dehn_filling_factor(q)
        rec.verdicts = {
            "bound_ordering": bound_ordering_holds(p, q, det.log_value),
            "volume_below_2pi_logdet": b.upper < 2 * math.pi * det.log_value,
            "density_below_v8": rec.det_density < V8,
        }
    except WeaveError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _cell(args):
    return weaving_record(*args)


def weaving_scan(cfg: ScanConfig) -> list:
    """Records for every (p, q) in the config, sorted by (p, q)."""
    tasks = [(p, q, cfg.exact, cfg.axis) for p, q in cfg.cells()]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_cell, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))
    else:
        records = [_cell(t) for t in tasks]
    records.sort(key=lambda r: (r.p, r.q))
    return records


@dataclass
class EntropyRow:
    n: int
    entropy: float
    log_tau: float
    exact: bool
    gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def grid_entropy_scan(n_list: Iterable[int], exact_limit: int = EXACT_GRID_LIMIT) -> list:
    """``log tau(n x n grid) / n^2`` with its relative gap below ``4C/pi``."""
    rows = []
    for n in sorted(set(int(n) for n in n_list)):
        if n < 2:
            raise ParameterError(f"grid size must be >= 2, got {n}")
        g = nx.grid_2d_graph(n, n)
        exact = n <= exact_limit
        count = spanning_tree_count(g) if exact else log_spanning_tree_count(g)
        h = count.log_value / (n * n)
        rows.append(EntropyRow(n, h, count.log_value, exact, (ENTROPY_LIMIT - h) / ENTROPY_LIMIT))
    return rows


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass
class FolnerRow:
    n: int
    c: int
    block: int
    block_ratio: float
    log_det: float
    density: float
    gap: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FolnerReport:
    rows: list
    density_increasing: bool
    ratio_increasing: bool
    all_below_v8: bool

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "density_increasing": self.density_increasing,
            "ratio_increasing": self.ratio_increasing,
            "all_below_v8": self.all_below_v8,
        }


def folner_density_experiment(n_list: Iterable[int], closure: str = "ring", exact: bool = False) -> FolnerReport:
    """Determinant density of the n x n grid closure and the share ``n^2 / c`` of lattice crossings."""
    rows = []
    for n in sorted(set(int(n) for n in n_list)):
        d = grid_weave_closure(n, n, closure)
        c = grid_closure_crossings(n, n, closure)
        det = determinant(d, exact=exact)
        dens = 2 * math.pi * det.log_value / c
        rows.append(FolnerRow(n, c, n * n, n * n / c, det.log_value, dens, (V8 - dens) / V8))
    return FolnerReport(
        rows,
        _strictly_increasing([r.density for r in rows]),
        _strictly_increasing([r.block_ratio for r in rows]),
        all(r.density < V8 for r in rows),
    )


def load_corpus() -> list:
    """Bundled prime reduced alternating diagrams (at most seven crossings)."""
    out = []
    for line in _data_text("alternating_corpus.txt").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        strands, word, name = (part.strip() for part in line.split("|"))
        out.append(braid_closure(BraidWord.parse(int(strands), word), force_alternating=True, name=name))
    return out


def _is_prime_diagram(d: LinkDiagram) -> bool:
    # a composite diagram has a Tait graph with a cut vertex
    g = nx.Graph(tait_graph(d).to_networkx())
    return g.number_of_nodes() <= 2 or nx.is_biconnected(g)


@dataclass
class CrossingChangeReport:
    diagrams: int
    subsets: int
    violations: list
    skipped: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return asdict(self)


def crossing_change_experiment(corpus: Optional[Sequence[LinkDiagram]] = None, max_crossings: int = 7) -> CrossingChangeReport:
    """Check ``det`` strictly drops under every proper nonempty set of crossing changes.

    Diagrams that are too large, not alternating, not reduced or composite are
    skipped and listed with the reason.
    """
    if max_crossings > 8:
        raise ParameterError("exhaustive subsets are limited to 8 crossings")
    if corpus is None:
        corpus = load_corpus()
    checked = subsets = 0
    violations, skipped = [], []
    for d in corpus:
        c = d.n_crossings
        reason = None
        if c > max_crossings:
            reason = f"{c} crossings exceeds {max_crossings}"
        elif not d.is_alternating:
            reason = "not alternating"
        elif nugatory_crossings(d):
            reason = "not reduced"
        elif not _is_prime_diagram(d):
            reason = "composite diagram"
        if reason:
            skipped.append({"name": d.name, "reason": reason})
            continue
        base = determinant(d).exact
        checked += 1
        for r in range(1, c):
            for subset in itertools.combinations(range(c), r):
                subsets += 1
                value = determinant(change_crossings(d, subset)).exact
                if value >= base:
                    violations.append({"name": d.name, "subset": list(subset), "det": base, "changed_det": value})
    return CrossingChangeReport(checked, subsets, violations, skipped)


@dataclass
class MuRow:
    p: int
    q: int
    c: int
    det_density: float
    mu_density: float
    gap: float
    identity_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def mu_density_scan(cfg: ScanConfig) -> list:
    """``2 pi log(det / (c+1)) / c`` next to the determinant density for W(p, q)."""
    rows = []
    for p, q in cfg.cells():
        d = weaving_diagram(p, q)
        c = d.n_crossings
        logdet = determinant(d, exact=cfg.exact).log_value
        dd = 2 * math.pi * logdet / c
        mu = 2 * math.pi * (logdet - math.log(c + 1)) / c
        expected_gap = 2 * math.pi * math.log(c + 1) / c
        rows.append(MuRow(p, q, c, dd, mu, dd - mu, abs(dd - mu - expected_gap)))
    return rows


@dataclass
class SpectrumSummary:
    count: int
    det_min: float
    det_max: float
    histogram: dict
    row_tails: dict
    upper_bound_density: dict
    lower_bound_density: dict
    reference: dict
    all_below_v8: bool

    def to_dict(self) -> dict:
        return asdict(self)


def spectrum_sample(records: Sequence[DensityRecord], bins: int = 20) -> SpectrumSummary:
    """Histogram and tail values of determinant densities and volume-bound densities.

    ``row_tails`` maps each p to the density at its largest sampled q, the
    natural candidates for accumulation points of the row.
    """
    good = [r for r in records if r.error is None and r.det_density is not None]
    if not good:
        raise ParameterError("no usable records to summarize")
    dens = np.array([r.det_density for r in good])
    counts, edges = np.histogram(dens, bins=bins, range=(0.0, V8))
    tails = {}
    for r in sorted(good, key=lambda r: (r.p, r.q)):
        tails[r.p] = r.det_density
    upper = [r.vol_upper / r.c for r in good if r.vol_upper is not None]
    lower = [r.vol_lower / r.c for r in good if r.vol_lower is not None]

    def span(vals):
        return {"min": min(vals), "max": max(vals)} if vals else {"min": None, "max": None}

    return SpectrumSummary(
        count=len(good),
        det_min=float(dens.min()),
        det_max=float(dens.max()),
        histogram={"edges": edges.tolist(), "counts": counts.tolist()},
        row_tails=tails,
        upper_bound_density=span(upper),
        lower_bound_density=span(lower),
        reference={"zero": 0.0, "two_v3": 2 * V3, "v8": V8},
        all_below_v8=bool((dens < V8).all()),
    )


# -- output -------------------------------------------------------------

def format_float(x: float) -> float:
    """Round to 12 significant digits so text output is stable."""
    return float(f"{x:.12g}")


def _clean(value):
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _as_dict(row) -> dict:
    return row.to_dict() if hasattr(row, "to_dict") else dict(row)


def write_jsonl(rows: Iterable, fh) -> None:
    for row in rows:
        fh.write(json.dumps(_clean(_as_dict(row)), sort_keys=True) + "\n")


def _flatten(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                out[f"{k}_{kk}"] = vv
        else:
            out[k] = v
    return out


def write_csv(rows: Iterable, fh) -> None:
    flat = [_flatten(_clean(_as_dict(r))) for r in rows]
    if not flat:
        return
    cols = list(flat[0])
    for r in flat[1:]:
        cols.extend(k for k in r if k not in cols)
    w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow({k: "" if r.get(k) is None else r.get(k) for k in cols})


def default_jobs() -> int:
    """Worker count from ``WEAVELAB_THREADS`` (default 1)."""
    raw = os.environ.get("WEAVELAB_THREADS", "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise ParameterError(f"WEAVELAB_THREADS must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ParameterError(f"WEAVELAB_THREADS must be >= 1, got {jobs}")
    return jobs
