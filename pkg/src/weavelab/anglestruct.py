"""Ideal triangulation of the weaving-knot-plus-axis complement and its angle structures.

The complement of W(p, 1) together with its braid axis B decomposes into four
outer ideal tetrahedra and p - 3 ideal octahedra.  Each octahedron is stellated
(an edge is added through its top and bottom vertices) and split into four
tetrahedra, giving ``4 (p - 2)`` tetrahedra in total.

Edges come in three kinds:

* one crossing edge per crossing of W(p, 1);
* knot-to-axis edges, one per region of the projection above the plane and
  one per region below, identified along the way the strands pass over and
  under each other;
* one stellation edge per octahedron.

An angle structure assigns dihedral angles to each tetrahedron so that each
tetrahedron's angles sum to pi and the angles around every edge class sum to
2 pi.  Opposite edges of a tetrahedron carry the same angle, so each
tetrahedron has three unknowns, one per opposite-edge pair.
"""

from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import null_space

from .errors import ConstructionError, DomainError, NumericError
from .hypgeom import lobachevsky, lobachevsky_derivative

__all__ = [
    "Triangulation",
    "AngleAssignment",
    "AngleSpace",
    "SolverDiagnostics",
    "VolumeMaximum",
    "build_weaving_triangulation",
    "right_angled_point",
    "regular_point",
    "angle_space",
    "total_volume",
    "maximize_volume",
    "max_axis_volume",
    "axis_volume",
    "trace_to_csv",
]

EQUALITY_TOL = 1e-12
GRAD_TOL = 1e-9


@dataclass(frozen=True)
class Triangulation:
    """Tetrahedra as three opposite-edge pairs of edge-class indices.

    ``tets[t][j]`` is the pair of class indices of the two opposite edges that
    share angle variable j of tetrahedron t.  ``labels[t]`` records where the
    tetrahedron comes from: ``("outer", region, "top"|"bottom")`` or
    ``("oct", octahedron, k)`` where k runs over the four stellation pieces.
    """

    p: int
    tets: tuple
    edge_classes: tuple
    labels: tuple
    family: str = "weaving"
    cusp_tally: dict = field(default_factory=dict)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def edge_valence(self) -> list:
        """Number of edge slots (angle incidences) in each class."""
        val = [0] * len(self.edge_classes)
        for tet in self.tets:
            for pair in tet:
                for e in pair:
                    val[e] += 1
        return val

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "family": self.family,
            "tets": [[list(pair) for pair in tet] for tet in self.tets],
            "edge_classes": list(self.edge_classes),
            "labels": [list(lab) for lab in self.labels],
            "cusp_tally": dict(self.cusp_tally),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _weaving_pieces(p):
    """Tetrahedra of the stellated decomposition with symbolic edge names."""
    # strand segments in the region picture: L_j, M_j are the two segments on
    # position j; E1 and Ep are the end segments at the outermost positions
    def seg_end(j):
        return "E1" if j == 1 else f"L{j}"

    def seg_start(j):
        return f"E{p}" if j == p else f"L{j}"

    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            x = parent[x]
        return x

    def union(a, b):
        parent[find(a)] = find(b)

    # at each crossing the over-strand glues the two "above" arcs it
    # separates, the under-strand glues the two "below" arcs
    for i in range(1, p):
        out_pair = (seg_end(i), seg_start(i + 1))
        inn_pair = (f"E{p}" if i + 1 == p else f"M{i + 1}", "E1" if i == 1 else f"M{i}")
        over, under = (out_pair, inn_pair) if i % 2 == 1 else (inn_pair, out_pair)
        union(("A", over[0]), ("A", over[1]))
        union(("U", under[0]), ("U", under[1]))
    # the end segments reach the axis on both sides
    union(("A", "E1"), ("U", "E1"))
    union(("A", f"E{p}"), ("U", f"E{p}"))

    def above(v):
        return find(("A", v))

    def below(v):
        return find(("U", v))

    def crossing(s):
        return ("C", s)

    pieces = []
    for i in range(1, p):
        if i == 1:
            verts, sides = ["E1", "M2", "L2"], [1, 2, 1]
        elif i == p - 1:
            verts, sides = [f"M{i}", f"L{i}", f"E{p}"], [i - 1, i, i]
        else:
            verts, sides = [f"M{i}", f"L{i}", f"M{i + 1}", f"L{i + 1}"], [i - 1, i, i + 1, i]
        if len(verts) == 3:
            a, b, c = verts
            for side, f in (("top", above), ("bottom", below)):
                pairs = (
                    (crossing(sides[0]), f(c)),
                    (crossing(sides[1]), f(a)),
                    (crossing(sides[2]), f(b)),
                )
                pieces.append((pairs, ("outer", i, side)))
        else:
            hub = ("S", i)
            for k in range(4):
                vk, vk1 = verts[k], verts[(k + 1) % 4]
                pairs = (
                    (crossing(sides[k]), hub),
                    (above(vk), below(vk1)),
                    (above(vk1), below(vk)),
                )
                pieces.append((pairs, ("oct", i - 1, k)))
    return pieces


def _class_name(key, axis_names):
    if key[0] == "C":
        return f"crossing-{key[1]}"
    if key[0] == "S":
        return f"stellation-{key[1] - 1}"
    return axis_names[key]


def build_weaving_triangulation(p: int) -> Triangulation:
    """Stellated ideal triangulation of the complement of W(p, 1) and its axis."""
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 3:
        raise DomainError(f"p must be an integer >= 3, got {p!r}")
    p = int(p)
    pieces = _weaving_pieces(p)

    keys = sorted({e for pairs, _ in pieces for pr in pairs for e in pr}, key=repr)
    axis_keys = sorted((k for k in keys if k[0] in ("A", "U")), key=repr)
    axis_names = {}
    counts = {"A": 0, "U": 0}
    for k in axis_keys:
        side = k[0]
        axis_names[k] = f"{'above' if side == 'A' else 'below'}-{counts[side]}"
        counts[side] += 1
    names = [_class_name(k, axis_names) for k in keys]
    order = sorted(range(len(keys)), key=lambda i: _name_order(names[i]))
    index = {keys[i]: pos for pos, i in enumerate(order)}
    classes = tuple(names[i] for i in order)

    tets = tuple(tuple((index[a], index[b]) for a, b in pairs) for pairs, _ in pieces)
    labels = tuple(lab for _, lab in pieces)

    n_outer = sum(1 for lab in labels if lab[0] == "outer")
    n_oct = len({lab[1] for lab in labels if lab[0] == "oct"})
    # on the axis cusp each outer tetrahedron leaves a triangle, each
    # octahedron two quadrilaterals (its top and bottom ideal vertices)
    tally = {"triangles": n_outer, "quadrilaterals": 2 * n_oct}

    t = Triangulation(p=p, tets=tets, edge_classes=classes, labels=labels, cusp_tally=tally)
    _check_triangulation(t)
    return t


def _name_order(name):
    kind, _, num = name.rpartition("-")
    rank = {"crossing": 0, "above": 1, "below": 2, "stellation": 3}[kind]
    return rank, int(num)


def _check_triangulation(t: Triangulation):
    p = t.p
    if t.n_tets != 4 * (p - 2):
        raise ConstructionError(f"expected {4 * (p - 2)} tetrahedra, built {t.n_tets}")
    if len(t.edge_classes) != t.n_tets:
        raise ConstructionError(
            f"{len(t.edge_classes)} edge classes for {t.n_tets} tetrahedra; Euler characteristic must vanish"
        )
    if sum(t.edge_valence()) != 6 * t.n_tets:
        raise ConstructionError("edge slots do not partition")
    if t.cusp_tally != {"triangles": 4, "quadrilaterals": 2 * (p - 3)}:
        raise ConstructionError(f"unexpected axis cusp tally {t.cusp_tally}")
    n_cross = sum(1 for c in t.edge_classes if c.startswith("crossing-"))
    if n_cross != p - 1:
        raise ConstructionError(f"{n_cross} crossing edges for W({p},1)")


@dataclass(frozen=True)
class AngleAssignment:
    """Dihedral angles, one row ``(x, y, z)`` per tetrahedron."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.array(self.angles, dtype=float)
        if a.ndim == 1 and a.size % 3 == 0:
            a = a.reshape(-1, 3)
        if a.ndim != 2 or a.shape[1] != 3:
            raise DomainError(f"angles must have shape (T, 3), got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @property
    def flat(self) -> np.ndarray:
        return self.angles.reshape(-1)

    def min_angle(self) -> float:
        return float(self.angles.min())

    def to_list(self) -> list:
        return self.angles.tolist()


def regular_point(t: Triangulation) -> AngleAssignment:
    """All tetrahedra regular (every angle pi/3)."""
    return AngleAssignment(np.full((t.n_tets, 3), math.pi / 3))


def _constraints(t: Triangulation):
    T, E = t.n_tets, len(t.edge_classes)
    A = np.zeros((T + E, 3 * T))
    b = np.empty(T + E)
    for i, tet in enumerate(t.tets):
        A[i, 3 * i:3 * i + 3] = 1.0
        for j, pair in enumerate(tet):
            for e in pair:
                A[T + e, 3 * i + j] += 1.0
    b[:T] = math.pi
    b[T:] = 2 * math.pi
    return A, b


def right_angled_point(t: Triangulation) -> AngleAssignment:
    """Angle structure of volume ``v8 (p - 2)`` built from right-angled pieces.

    Each stellation piece gets pi/2 on its stellation pair and pi/4 on the
    others.  Each outer tetrahedron gets one pi/2 and two pi/4; which of its
    pairs carries pi/2 is forced by the edge equations, and exactly one
    arrangement works.  For p = 3 there are no octahedra and the regular
    point is returned instead.
    """
    if t.family != "weaving":
        raise DomainError(f"no right-angled structure known for family {t.family!r}")
    if t.p == 3:
        return regular_point(t)
    A, b = _constraints(t)
    base = np.full((t.n_tets, 3), math.pi / 4)
    outer = []
    for i, lab in enumerate(t.labels):
        if lab[0] == "oct":
            base[i, 0] = math.pi / 2
        else:
            outer.append(i)
    feasible = []
    for arrangement in itertools.product(range(3), repeat=len(outer)):
        x = base.copy()
        for i, j in zip(outer, arrangement):
            x[i, j] = math.pi / 2
        if np.abs(A @ x.reshape(-1) - b).max() < EQUALITY_TOL:
            feasible.append(x)
    if len(feasible) != 1:
        raise DomainError(f"expected one feasible outer arrangement, found {len(feasible)}")
    return AngleAssignment(feasible[0])


@dataclass(frozen=True)
class AngleSpace:
    """Affine solution set ``particular + basis @ w`` of the angle equations.

    ``basis`` has orthonormal columns spanning the null space of ``A``.
    Positivity of the angles is not encoded here.
    """

    triangulation: Triangulation
    A: np.ndarray
    b: np.ndarray
    particular: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def point(self, w) -> np.ndarray:
        return self.particular + self.basis @ np.asarray(w, dtype=float)

    def residual(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(np.abs(self.A @ x - self.b).max())

    def contains(self, a: AngleAssignment, tol: float = 1e-9) -> bool:
        return a.flat.size == self.A.shape[1] and self.residual(a.flat) <= tol


def angle_space(t: Triangulation) -> AngleSpace:
    """Equality constraints, a particular solution and an orthonormal null-space basis."""
    A, b = _constraints(t)
    try:
        x0 = right_angled_point(t).flat.copy()
    except DomainError:
        x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    if np.abs(A @ x0 - b).max() > EQUALITY_TOL:
        raise ConstructionError("angle equations are infeasible; the triangulation is malformed")
    basis = null_space(A)
    return AngleSpace(t, A, b, x0, basis)


def _check_sums(a: AngleAssignment, tol=1e-9):
    sums = a.angles.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - math.pi) > tol)
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"tetrahedron {i} angles sum to {sums[i]!r}, expected pi")


def total_volume(a: AngleAssignment) -> float:
    """Sum of ideal tetrahedron volumes; angles must be positive and sum to pi per tetrahedron."""
    _check_sums(a)
    if a.min_angle() <= 0:
        raise DomainError(f"angle structure is not strictly positive (min angle {a.min_angle()!r})")
    return float(lobachevsky(a.flat).sum())


@dataclass
class SolverDiagnostics:
    kkt_residual: float
    equality_residual: float
    iterations: int
    min_angle: float
    barrier_stages: int
    trace: list

    def to_dict(self) -> dict:
        return {
            "kkt_residual": self.kkt_residual,
            "equality_residual": self.equality_residual,
            "iterations": self.iterations,
            "min_angle": self.min_angle,
            "barrier_stages": self.barrier_stages,
        }


class VolumeMaximum(NamedTuple):
    assignment: AngleAssignment
    volume: float
    diagnostics: SolverDiagnostics


def _volume(x):
    return float(lobachevsky(x).sum())


def maximize_volume(
    space: AngleSpace,
    init: Optional[AngleAssignment] = None,
    mu0: float = 1e-3,
    mu_min: float = 1e-12,
    max_iter: int = 20000,
) -> VolumeMaximum:
    """Maximize the volume over the positive part of ``space``.

    Projected gradient ascent with Armijo backtracking on the barrier
    objective ``vol + mu * sum(log x)``, for mu = mu0, mu0/10, ... down to
    mu_min, followed by a barrier-free stage until the projected gradient of
    the volume is below 1e-9.  Steps that would lower the volume are
    rejected, so the recorded volumes never decrease.
    """
    if init is None:
        init = right_angled_point(space.triangulation)
    x = init.flat.astype(float).copy()
    if x.size != space.A.shape[1]:
        raise DomainError("initial assignment does not match the triangulation")
    if x.min() <= 0:
        raise DomainError(f"initial point is not interior (min angle {x.min()!r})")
    if space.residual(x) > 1e-9:
        raise DomainError(f"initial point violates the angle equations by {space.residual(x)!r}")

    B = space.basis
    vol = _volume(x)
    trace = [(0, vol, float(np.linalg.norm(B.T @ lobachevsky_derivative(x))))]
    it = 0
    stages = 0
    mus = []
    mu = mu0
    while mu >= mu_min:
        mus.append(mu)
        mu /= 10
    mus.append(0.0)

    for mu in mus:
        stages += 1
        step = 1.0
        prev = None
        while True:
            gx = lobachevsky_derivative(x) + (mu / x if mu else 0.0)
            g = B.T @ gx
            gnorm = float(np.linalg.norm(g))
            if not np.isfinite(gnorm):
                raise NumericError(f"non-finite gradient at iteration {it}", trace=trace)
            # intermediate barrier problems are solved only to O(mu)
            if gnorm < max(GRAD_TOL, mu):
                break
            if it >= max_iter:
                raise NumericError(
                    f"ascent did not converge in {max_iter} iterations (gradient norm {gnorm:.3e})",
                    trace=trace,
                )
            d = B @ g
            # Barzilai-Borwein trial step from the last move
            if prev is not None:
                s, y = prev[0], g - prev[1]
                sy = float(s @ y)
                if sy < 0:
                    step = float(s @ s) / -sy
            neg = d < 0
            if neg.any():
                step = min(step, 0.95 * float(np.min(-x[neg] / d[neg])))
            f0 = vol + (mu * float(np.log(x).sum()) if mu else 0.0)
            slope = gnorm * gnorm
            noise = 1e-13 * (1.0 + abs(f0))
            accepted = False
            for _ in range(60):
                xn = x + step * d
                if xn.min() > 0:
                    vn = _volume(xn)
                    fn = vn + (mu * float(np.log(xn).sum()) if mu else 0.0)
                    if fn >= f0 + 1e-4 * step * slope - noise and vn >= vol - 1e-13:
                        accepted = True
                        break
                step *= 0.5
            if not accepted:
                if mu:
                    # barrier stage cannot improve further without lowering the volume
                    break
                raise NumericError(
                    f"line search failed at iteration {it} (gradient norm {gnorm:.3e})", trace=trace
                )
            it += 1
            w_step = step * g
            x = space.particular + B @ (B.T @ (xn - space.particular))
            vol = _volume(x)
            prev = (w_step, g)
            trace.append((it, vol, gnorm))

    pg = B.T @ lobachevsky_derivative(x)
    diag = SolverDiagnostics(
        kkt_residual=float(np.linalg.norm(pg)),
        equality_residual=space.residual(x),
        iterations=it,
        min_angle=float(x.min()),
        barrier_stages=stages,
        trace=trace,
    )
    a = AngleAssignment(x)
    return VolumeMaximum(a, total_volume(a), diag)


@functools.lru_cache(maxsize=None)
def max_axis_volume(p: int) -> float:
    """Maximal angle-structure volume for the complement of W(p, 1) and its axis."""
    t = build_weaving_triangulation(p)
    return maximize_volume(angle_space(t)).volume


def axis_volume(p: int, q: int) -> float:
    """Volume of the complement of W(p, q) and its axis, via the q-fold cyclic cover."""
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)) or q < 1:
        raise DomainError(f"q must be an integer >= 1, got {q!r}")
    return q * max_axis_volume(p)


def trace_to_csv(trace, fh=None) -> str:
    """Write an optimizer trace as CSV (iteration, volume, grad_norm)."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "volume", "grad_norm"])
    for i, v, g in trace:
        w.writerow([i, f"{v:.12g}", f"{g:.12g}"])
    return buf.getvalue() if fh is None else ""
