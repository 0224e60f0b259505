"""Spanning-tree counts, knot determinants and the densities built from them.

Graphs are ``networkx`` (multi)graphs.  Parallel edges add to Laplacian
entries, loops are ignored.  Signed edges carry a ``sign`` attribute of +1
or -1.  Exact counts use fraction-free (Bareiss) elimination on Python
integers.  The log path uses an LU factorisation in double precision.
"""

from __future__ import annotations

import json
import math
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

import networkx as nx
import numpy as np
from scipy.linalg import LinAlgWarning, lapack, lu_factor

from .diagrams import LinkDiagram, tait_graph
from .errors import DomainError, NumericError, ParameterError, RefusalError
from .hypgeom import CATALAN

__all__ = [
    "TreeCount",
    "SignedTreeSum",
    "bareiss_determinant",
    "laplacian",
    "spanning_tree_count",
    "log_spanning_tree_count",
    "enumerate_spanning_trees",
    "signed_tree_tally",
    "determinant",
    "determinant_density",
    "spanning_tree_entropy",
    "kenyon_check",
    "jones_average",
    "mu_density",
    "read_edge_list",
    "graph_from_json",
    "graph_to_json",
    "ENUMERATION_EDGE_LIMIT",
]

ENUMERATION_EDGE_LIMIT = 25

# exact determinants of large Tait graphs have thousands of digits
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


@dataclass(frozen=True)
class TreeCount:
    """Spanning-tree count (or |signed tree sum|), exact and/or in log scale (nats)."""

    exact: Optional[int] = None
    log_value: Optional[float] = None
    log_error: float = 0.0

    def __post_init__(self):
        if self.exact is not None and self.log_value is None and self.exact > 0:
            object.__setattr__(self, "log_value", _int_log(self.exact))

    @property
    def value(self):
        return self.exact if self.exact is not None else math.exp(self.log_value)

    def to_dict(self) -> dict:
        return {
            "exact": None if self.exact is None else str(self.exact),
            "log": self.log_value,
            "log_error": self.log_error,
        }


@dataclass(frozen=True)
class SignedTreeSum:
    """``value = sum_T (-1)^sigma(T)`` with optional per-sigma tally ``s_sigma``."""

    value: int
    tally: Optional[dict] = None

    @property
    def total_trees(self) -> Optional[int]:
        return None if self.tally is None else sum(self.tally.values())


def _int_log(n: int) -> float:
    if n <= 0:
        raise DomainError(f"log of non-positive count {n}")
    bits = n.bit_length()
    if bits < 1000:
        return math.log(n)
    shift = bits - 64
    return math.log(n >> shift) + shift * math.log(2)


def bareiss_determinant(matrix) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination.

    Every intermediate entry is a minor of the input, so the divisions are
    exact.  Row swaps handle zero pivots.
    """
    a = np.array(matrix, dtype=object)
    if a.size == 0:
        # the empty matrix ([] or 0 x 0)
        return 1
    n = a.shape[0]
    if a.shape != (n, n):
        raise ParameterError(f"matrix must be square, got shape {a.shape}")
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k, k] == 0:
            nz = [i for i in range(k + 1, n) if a[i, k] != 0]
            if not nz:
                return 0
            a[[k, nz[0]]] = a[[nz[0], k]]
            sign = -sign
        pivot = a[k, k]
        a[k + 1:, k + 1:] = (a[k + 1:, k + 1:] * pivot - np.outer(a[k + 1:, k], a[k, k + 1:])) // prev
        prev = pivot
    return sign * int(a[n - 1, n - 1])


def laplacian(g: nx.Graph, weight: Optional[str] = None) -> tuple:
    """Integer Laplacian and node order; ``weight`` names an edge attribute (default 1)."""
    nodes = list(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    lap = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
    edges = g.edges(data=True)
    for u, v, data in edges:
        if u == v:
            continue
        w = 1 if weight is None else int(data.get(weight, 1))
        i, j = index[u], index[v]
        lap[i, j] -= w
        lap[j, i] -= w
        lap[i, i] += w
        lap[j, j] += w
    return lap, nodes


def _require_connected(g: nx.Graph):
    if g.number_of_nodes() == 0:
        raise DomainError("graph has no vertices")
    if not nx.is_connected(g):
        raise DomainError("graph is disconnected; it has no spanning tree")


def spanning_tree_count(g: nx.Graph) -> TreeCount:
    """Exact number of spanning trees via the reduced Laplacian."""
    _require_connected(g)
    lap, _ = laplacian(g)
    return TreeCount(exact=bareiss_determinant(lap[1:, 1:].tolist()))


def _log_abs_det(a: np.ndarray) -> tuple:
    n = a.shape[0]
    if n == 0:
        return 0.0, 0.0
    a = np.asarray(a, dtype=float)
    with warnings.catch_warnings():
        # singularity is reported below as a NumericError
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0):
        raise NumericError("matrix is singular to working precision")
    anorm = np.abs(a).sum(axis=0).max()
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < np.finfo(float).eps:
        raise NumericError(f"matrix is numerically singular (rcond={rcond:.3g})")
    # first-order bound on the relative determinant perturbation
    err = n * np.finfo(float).eps / rcond
    return float(np.log(diag).sum()), float(err)


def log_spanning_tree_count(g: nx.Graph) -> TreeCount:
    """Natural log of the spanning-tree count with an error estimate."""
    _require_connected(g)
    lap, _ = laplacian(g)
    value, err = _log_abs_det(lap[1:, 1:])
    return TreeCount(log_value=value, log_error=err)


def enumerate_spanning_trees(g: nx.Graph, limit: int = ENUMERATION_EDGE_LIMIT) -> Iterator[tuple]:
    """Yield every spanning tree once as a tuple of edge indices into ``list(g.edges)``.

    Include/exclude backtracking over the edge list; refuses graphs with more
    than ``limit`` edges.
    """
    edges = [(u, v) for u, v, *_ in g.edges]
    if len(edges) > limit:
        raise RefusalError(f"{len(edges)} edges exceeds the enumeration guard of {limit}")
    _require_connected(g)
    nodes = list(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    pairs = [(index[u], index[v]) for u, v in edges]
    need = len(nodes) - 1
    m = len(pairs)

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def rec(i, chosen, parent):
        if len(chosen) == need:
            yield tuple(chosen)
            return
        if m - i < need - len(chosen):
            return
        u, v = pairs[i]
        ru, rv = find(parent, u), find(parent, v)
        if ru != rv:
            parent2 = list(parent)
            parent2[ru] = rv
            chosen.append(i)
            yield from rec(i + 1, chosen, parent2)
            chosen.pop()
        yield from rec(i + 1, chosen, parent)

    yield from rec(0, [], list(range(len(nodes))))


def signed_tree_tally(g: nx.Graph, limit: int = ENUMERATION_EDGE_LIMIT) -> SignedTreeSum:
    """Enumerate trees and tally them by their number of positive edges."""
    signs = [data.get("sign", 1) for *_, data in g.edges(data=True)]
    tally = {}
    for tree in enumerate_spanning_trees(g, limit):
        sigma = sum(1 for i in tree if signs[i] > 0)
        tally[sigma] = tally.get(sigma, 0) + 1
    value = sum((-1) ** s * k for s, k in tally.items())
    return SignedTreeSum(value, dict(sorted(tally.items())))


def _signed_graph(d: LinkDiagram, shading: str) -> nx.MultiGraph:
    g = tait_graph(d, shading).to_networkx()
    for u, v, k, data in g.edges(keys=True, data=True):
        # positive edges weigh -1, negative +1: det = sum_T (-1)^sigma(T)
        data["weight"] = -data["sign"]
    return g


def determinant(d: LinkDiagram, exact: bool = True, shading: str = "even") -> TreeCount:
    """Knot determinant from the Tait graph.

    Alternating diagrams count spanning trees directly; otherwise the
    absolute value of the signed matrix-tree sum (weights -1 on positive and
    +1 on negative edges) is returned.  ``exact=False`` gives only the log.
    """
    g = _signed_graph(d, shading)
    if not nx.is_connected(g):
        raise DomainError("Tait graph is disconnected; the diagram is split")
    if d.is_alternating:
        lap, _ = laplacian(g)
    else:
        lap, _ = laplacian(g, weight="weight")
    reduced = lap[1:, 1:]
    if exact:
        value = abs(bareiss_determinant(reduced.tolist()))
        return TreeCount(exact=value, log_value=_int_log(value) if value else None)
    value, err = _log_abs_det(reduced)
    return TreeCount(log_value=value, log_error=err)


def determinant_density(d: LinkDiagram, exact: bool = True) -> float:
    """``2 pi log det(d) / c(d)``."""
    det = determinant(d, exact=exact)
    if det.exact == 0:
        raise DomainError("determinant is zero; density undefined")
    return 2 * math.pi * det.log_value / d.n_crossings


def spanning_tree_entropy(g: nx.Graph, normalizer: str = "vertices", exact: bool = True) -> float:
    """``log tau(g)`` divided by the vertex or edge count."""
    if normalizer not in ("vertices", "edges"):
        raise ParameterError(f"normalizer must be 'vertices' or 'edges', got {normalizer!r}")
    count = spanning_tree_count(g) if exact else log_spanning_tree_count(g)
    size = g.number_of_nodes() if normalizer == "vertices" else g.number_of_edges()
    return count.log_value / size


def kenyon_check(g: nx.Graph, tol: float = 1e-12) -> bool:
    """True when ``log tau(g) / e(g) <= 2C/pi + tol``."""
    return spanning_tree_entropy(g, "edges") <= 2 * CATALAN / math.pi + tol


def jones_average(d: LinkDiagram) -> Fraction:
    """Average absolute Jones coefficient ``det / (c + 1)`` for an alternating diagram."""
    if not d.is_alternating:
        raise DomainError("the det/(c+1) identity needs an alternating diagram")
    return Fraction(determinant(d).exact, d.n_crossings + 1)


def mu_density(d: LinkDiagram, exact: bool = True) -> float:
    """``2 pi log mu(d) / c(d)`` with ``mu = det / (c + 1)``."""
    if not d.is_alternating:
        raise DomainError("the det/(c+1) identity needs an alternating diagram")
    c = d.n_crossings
    return 2 * math.pi * (determinant(d, exact=exact).log_value - math.log(c + 1)) / c


# -- graph I/O ----------------------------------------------------------

def read_edge_list(text: str) -> nx.MultiGraph:
    """Parse lines ``u v [sign]``; ``#`` starts a comment."""
    g = nx.MultiGraph()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParameterError(f"line {lineno}: expected 'u v [sign]'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            u, v = parts[0], parts[1]
        sign = 1
        if len(parts) == 3:
            if parts[2] not in ("+", "-", "+1", "-1", "1"):
                raise ParameterError(f"line {lineno}: bad sign {parts[2]!r}")
            sign = -1 if parts[2].startswith("-") else 1
        g.add_edge(u, v, sign=sign)
    return g


def graph_to_json(g: nx.Graph) -> str:
    return json.dumps({
        "vertices": list(g.nodes),
        "edges": [[u, v, data.get("sign", 1)] for u, v, data in g.edges(data=True)],
    })


def graph_from_json(text: str) -> nx.MultiGraph:
    data = json.loads(text)
    g = nx.MultiGraph()
    g.add_nodes_from(data.get("vertices", []))
    for edge in data["edges"]:
        u, v = edge[0], edge[1]
        g.add_edge(u, v, sign=int(edge[2]) if len(edge) > 2 else 1)
    return g
