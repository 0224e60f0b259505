"""Combinatorial link diagrams stored as rotation systems.

A crossing is four edge labels listed counterclockwise around the crossing
point.  Slots ``k`` and ``k + 2`` belong to the same strand; ``over`` names
which of the two strands (slots 0/2 or slots 1/3) passes over.  Every edge
label occurs in exactly two slots.  Faces, checkerboard colouring and Tait
graphs are all derived from this data; no coordinates are stored.

Corner ``k`` of a crossing is the sector between slot ``k`` and slot
``k + 1``.  Face tracing arrives at a crossing through slot ``s`` and leaves
through slot ``s + 1``, so the arrival ``(c, s)`` identifies corner ``s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx

from .errors import DomainError, ParameterError

__all__ = [
    "Crossing",
    "LinkDiagram",
    "BraidWord",
    "TaitGraph",
    "braid_closure",
    "weaving_diagram",
    "grid_weave_closure",
    "grid_closure_crossings",
    "make_alternating",
    "tait_graph",
    "projection_graph",
    "change_crossings",
    "nugatory_crossings",
    "twist_number",
]


@dataclass(frozen=True)
class Crossing:
    slots: tuple
    over: int = 0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(int(s) for s in self.slots))
        if len(self.slots) != 4:
            raise ParameterError(f"a crossing has 4 slots, got {self.slots}")
        if self.over not in (0, 1):
            raise ParameterError(f"over flag must be 0 or 1, got {self.over!r}")

    def is_over(self, slot: int) -> bool:
        return slot % 2 == self.over

    def flipped(self) -> "Crossing":
        return Crossing(self.slots, 1 - self.over)


@dataclass(frozen=True)
class LinkDiagram:
    """A connected plane link diagram.

    Construction validates that each label is used twice and that the
    rotation system is a connected planar map (``V - E + F == 2``).
    """

    crossings: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "crossings", tuple(self.crossings))
        if not self.crossings:
            raise ParameterError("a diagram needs at least one crossing")
        counts = {}
        for c in self.crossings:
            for label in c.slots:
                counts[label] = counts.get(label, 0) + 1
        bad = [label for label, k in counts.items() if k != 2]
        if bad:
            raise ParameterError(f"edge labels not used exactly twice: {sorted(bad)[:5]}")
        v, e, f = len(self.crossings), len(counts), len(self.faces)
        if v - e + f != 2:
            raise ParameterError(
                f"rotation system is not a connected plane diagram (V-E+F = {v - e + f})"
            )

    # -- structure -----------------------------------------------------
    @property
    def n_crossings(self) -> int:
        return len(self.crossings)

    @cached_property
    def edge_ends(self) -> dict:
        ends = {}
        for ci, c in enumerate(self.crossings):
            for s, label in enumerate(c.slots):
                ends.setdefault(label, []).append((ci, s))
        return {label: tuple(v) for label, v in sorted(ends.items())}

    def partner(self, c: int, s: int) -> tuple:
        a, b = self.edge_ends[self.crossings[c].slots[s]]
        return b if a == (c, s) else a

    @cached_property
    def faces(self) -> tuple:
        """Faces as tuples of arrivals ``(crossing, slot)`` in boundary order."""
        seen = set()
        faces = []
        for ci in range(len(self.crossings)):
            for s in range(4):
                if (ci, s) in seen:
                    continue
                face = []
                h = (ci, s)
                while h not in seen:
                    seen.add(h)
                    face.append(h)
                    h = self.partner(h[0], (h[1] + 1) % 4)
                faces.append(tuple(face))
        return tuple(faces)

    @cached_property
    def corner_face(self) -> tuple:
        """``corner_face[c][k]`` is the face index of corner k at crossing c."""
        table = [[-1] * 4 for _ in self.crossings]
        for fi, face in enumerate(self.faces):
            for c, s in face:
                table[c][s] = fi
        return tuple(tuple(row) for row in table)

    @cached_property
    def face_colors(self) -> tuple:
        """Checkerboard 2-colouring; colour 0 holds corner 0 of crossing 0."""
        nf = len(self.faces)
        adj = [[] for _ in range(nf)]
        for (c1, s1), (c2, s2) in self.edge_ends.values():
            f1, f2 = self.corner_face[c1][s1], self.corner_face[c2][s2]
            adj[f1].append(f2)
            adj[f2].append(f1)
        color = [-1] * nf
        start = self.corner_face[0][0]
        color[start] = 0
        stack = [start]
        while stack:
            f = stack.pop()
            for g in adj[f]:
                if color[g] == -1:
                    color[g] = 1 - color[f]
                    stack.append(g)
                elif color[g] == color[f]:
                    raise RuntimeError("face structure is not checkerboard colourable")
        return tuple(color)

    @cached_property
    def is_alternating(self) -> bool:
        for (c1, s1), (c2, s2) in self.edge_ends.values():
            if self.crossings[c1].is_over(s1) == self.crossings[c2].is_over(s2):
                return False
        return True

    def strands(self) -> list:
        """Link components as lists of oriented arrivals ``(crossing, slot)``."""
        visited = set()
        components = []
        for label, ends in self.edge_ends.items():
            if label in visited:
                continue
            comp = []
            c, s = ends[1]
            while True:
                lab = self.crossings[c].slots[s]
                if lab in visited:
                    break
                visited.add(lab)
                comp.append((c, s))
                c, s = self.partner(c, (s + 2) % 4)
            components.append(comp)
        return components

    @property
    def n_components(self) -> int:
        return len(self.strands())

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "crossings": [{"slots": list(c.slots), "over": c.over} for c in self.crossings],
            "edges": [
                {"label": label, "ends": [list(a), list(b)]}
                for label, (a, b) in self.edge_ends.items()
            ],
            "alternating": self.is_alternating,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "LinkDiagram":
        try:
            crossings = [Crossing(tuple(c["slots"]), int(c.get("over", 0))) for c in data["crossings"]]
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed diagram record: {exc}") from None
        d = cls(tuple(crossings), data.get("name", ""))
        if "alternating" in data and bool(data["alternating"]) != d.is_alternating:
            raise ParameterError("stored alternating flag disagrees with the crossing data")
        return d

    @classmethod
    def from_json(cls, text: str) -> "LinkDiagram":
        return cls.from_dict(json.loads(text))

    def pd_code(self) -> list:
        """PD code: per crossing, labels counterclockwise from the incoming under-strand.

        Edges are renumbered 1..2V along the traversal of the components.
        """
        incoming = [[] for _ in self.crossings]
        relabel = {}
        for comp in self.strands():
            for c, s in comp:
                incoming[c].append(s)
                relabel.setdefault(self.crossings[c].slots[s], len(relabel) + 1)
        code = []
        for ci, c in enumerate(self.crossings):
            start = next(s for s in incoming[ci] if not c.is_over(s))
            code.append(tuple(relabel[c.slots[(start + k) % 4]] for k in range(4)))
        return code

    def pd_text(self) -> str:
        return "\n".join("X[%d, %d, %d, %d]" % x for x in self.pd_code())

    @classmethod
    def from_pd(cls, code: Iterable[Sequence[int]], name: str = "") -> "LinkDiagram":
        """Inverse of :meth:`pd_code` (slots 0/2 of each tuple are the under-strand)."""
        return cls(tuple(Crossing(tuple(x), over=1) for x in code), name)


@dataclass(frozen=True)
class BraidWord:
    """Braid on ``strands`` strands; letter ``+i``/``-i`` is sigma_i or its inverse."""

    strands: int
    letters: tuple

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(x) for x in self.letters))
        if not isinstance(self.strands, int) or self.strands < 2:
            raise ParameterError(f"a braid needs at least 2 strands, got {self.strands!r}")
        for x in self.letters:
            if x == 0 or abs(x) >= self.strands:
                raise ParameterError(f"generator {x} invalid on {self.strands} strands")

    @classmethod
    def parse(cls, strands: int, text: str) -> "BraidWord":
        try:
            letters = tuple(int(tok) for tok in text.replace(",", " ").split())
        except ValueError:
            raise ParameterError(f"cannot parse braid word {text!r}") from None
        return cls(strands, letters)


def _compact(crossings: list) -> list:
    labels = {}
    for c in crossings:
        for s in c.slots:
            labels.setdefault(s, len(labels))
    return [Crossing(tuple(labels[s] for s in c.slots), c.over) for c in crossings]


def braid_closure(word: BraidWord, force_alternating: bool = False, name: str | None = None) -> LinkDiagram:
    """Trace closure of a braid drawn bottom to top.

    Each crossing lists its slots as bottom-left, bottom-right, top-right,
    top-left.  For sigma_i the strand entering bottom-left passes over.
    """
    if not word.letters:
        raise ParameterError("braid word is empty")
    used = {abs(x) for x in word.letters}
    missing = sorted(set(range(1, word.strands)) - used)
    if missing:
        raise ParameterError(f"generators {missing} never occur; the closure would be split")
    cur = list(range(word.strands))
    fresh = word.strands
    crossings = []
    for x in word.letters:
        i = abs(x) - 1
        tr, tl = fresh, fresh + 1
        fresh += 2
        crossings.append(Crossing((cur[i], cur[i + 1], tr, tl), 0 if x > 0 else 1))
        cur[i], cur[i + 1] = tl, tr
    closing = {cur[k]: k for k in range(word.strands)}
    crossings = [Crossing(tuple(closing.get(s, s) for s in c.slots), c.over) for c in crossings]
    if name is None:
        name = "closure(%s; %s)" % (word.strands, " ".join(map(str, word.letters)))
    d = LinkDiagram(tuple(_compact(crossings)), name)
    return make_alternating(d) if force_alternating else d


def make_alternating(d: LinkDiagram) -> LinkDiagram:
    """Reassign over/under so every Tait edge (even shading) is positive."""
    colors, corner = d.face_colors, d.corner_face
    crossings = []
    for ci, c in enumerate(d.crossings):
        k = 0 if colors[corner[ci][0]] == 0 else 1
        crossings.append(Crossing(c.slots, k))
    return LinkDiagram(tuple(crossings), d.name)


def _check_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")


def weaving_diagram(p: int, q: int) -> LinkDiagram:
    """Alternating closure of the p-braid (sigma_1 ... sigma_{p-1})^q, i.e. W(p, q)."""
    _check_int("p", p, 2)
    _check_int("q", q, 1)
    word = BraidWord(p, tuple(range(1, p)) * q)
    return braid_closure(word, force_alternating=True, name=f"W({p},{q})")


def grid_closure_crossings(m: int, n: int, closure: str = "ring") -> int:
    """Crossing count of :func:`grid_weave_closure`.

    ``ring`` adds one crossing per boundary stub: ``m n + 2 (m + n)``.
    ``minimal`` adds none: ``m n``.
    """
    return m * n + (2 * (m + n) if closure == "ring" else 0)


def grid_weave_closure(m: int, n: int, closure: str = "ring") -> LinkDiagram:
    """Alternating diagram containing the m x n square-lattice block.

    Crossing ``i * n + j`` is lattice point (row i, column j); its slots are
    east, north, west, south.  The 2(m + n) boundary stubs are closed in one
    of two ways:

    ``minimal``
        consecutive stubs along the boundary are joined pairwise with no new
        crossings.  Requires m and n even so no corner closes onto itself.
    ``ring``
        every stub first crosses a circle running around the block, then
        consecutive stubs are joined outside it.  The block is then an
        induced subgraph of the projection graph with no doubled edges.
    """
    _check_int("m", m, 2)
    _check_int("n", n, 2)
    if closure not in ("ring", "minimal"):
        raise ParameterError(f"unknown closure {closure!r}")
    if closure == "minimal" and (m % 2 or n % 2):
        raise ParameterError("minimal closure needs even m and n")
    total = grid_closure_crossings(m, n, closure)
    slots = [[None] * 4 for _ in range(total)]
    label = iter(range(4 * total))

    def join(a, b):
        lab = next(label)
        slots[a[0]][a[1]] = lab
        slots[b[0]][b[1]] = lab

    v = lambda i, j: i * n + j
    for i in range(m):
        for j in range(n):
            if j + 1 < n:
                join((v(i, j), 0), (v(i, j + 1), 2))
            if i + 1 < m:
                join((v(i, j), 3), (v(i + 1, j), 1))
    # boundary stubs, clockwise from the top-left corner
    stubs = [(v(0, j), 1) for j in range(n)]
    stubs += [(v(i, n - 1), 0) for i in range(m)]
    stubs += [(v(m - 1, j), 3) for j in reversed(range(n))]
    stubs += [(v(i, 0), 2) for i in reversed(range(m))]
    if closure == "minimal":
        for k in range(0, len(stubs), 2):
            join(stubs[k], stubs[k + 1])
    else:
        ring = len(stubs)
        r = lambda k: m * n + (k % ring)
        # ring crossing slots: inward, clockwise-next, outward, clockwise-previous
        for k, stub in enumerate(stubs):
            join((r(k), 0), stub)
            join((r(k), 1), (r(k + 1), 3))
        for k in range(0, ring, 2):
            join((r(k), 2), (r(k + 1), 2))
    d = LinkDiagram(tuple(Crossing(tuple(s)) for s in slots), f"grid({m},{n},{closure})")
    return make_alternating(d)


@dataclass(frozen=True)
class TaitGraph:
    """Signed checkerboard graph.

    ``edges`` holds ``(u, v, sign, crossing)``; vertex ``i`` is diagram face
    ``faces[i]``.  ``rotation[i]`` lists the crossings met walking around
    that face, which is the cyclic edge order at the vertex.
    """

    n_vertices: int
    edges: tuple
    faces: tuple
    rotation: tuple = field(default=(), compare=False)
    shading: str = "even"

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def signs(self) -> tuple:
        return tuple(e[2] for e in self.edges)

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n_vertices))
        for u, v, sign, c in self.edges:
            g.add_edge(u, v, key=c, sign=sign, crossing=c)
        return g


def tait_graph(d: LinkDiagram, shading: str = "even") -> TaitGraph:
    """Tait graph on the faces of colour 0 (``even``) or colour 1 (``odd``).

    An edge is positive when the slot just clockwise of its shaded corner
    carries the over-strand.  Alternating diagrams give one sign throughout.
    """
    if shading not in ("even", "odd"):
        raise ParameterError(f"shading must be 'even' or 'odd', got {shading!r}")
    want = 0 if shading == "even" else 1
    colors, corner = d.face_colors, d.corner_face
    shaded = [f for f in range(len(d.faces)) if colors[f] == want]
    index = {f: i for i, f in enumerate(shaded)}
    edges = []
    for ci, c in enumerate(d.crossings):
        k = 0 if colors[corner[ci][0]] == want else 1
        if colors[corner[ci][k + 2]] != want:
            raise RuntimeError(f"opposite corners of crossing {ci} have different colours")
        u, w = index[corner[ci][k]], index[corner[ci][k + 2]]
        edges.append((u, w, 1 if c.is_over(k) else -1, ci))
    rotation = tuple(tuple(c for c, _ in d.faces[f]) for f in shaded)
    return TaitGraph(len(shaded), tuple(edges), tuple(shaded), rotation, shading)


def projection_graph(d: LinkDiagram) -> nx.MultiGraph:
    """Unsigned 4-valent graph: one vertex per crossing, one edge per arc (loops kept)."""
    g = nx.MultiGraph()
    g.add_nodes_from(range(d.n_crossings))
    for label, ((c1, _), (c2, _)) in d.edge_ends.items():
        g.add_edge(c1, c2, key=label)
    return g


def change_crossings(d: LinkDiagram, subset: Iterable[int]) -> LinkDiagram:
    """Flip over/under at the given crossing ids."""
    subset = set(subset)
    unknown = [c for c in subset if not (isinstance(c, int) and 0 <= c < d.n_crossings)]
    if unknown:
        raise ParameterError(f"unknown crossing ids {sorted(map(str, unknown))}")
    crossings = tuple(c.flipped() if i in subset else c for i, c in enumerate(d.crossings))
    return LinkDiagram(crossings, d.name)


def nugatory_crossings(d: LinkDiagram) -> list:
    """Crossings whose removal disconnects the projection graph.

    Such a crossing has one face on two opposite corners.
    """
    corner = d.corner_face
    return [c for c in range(d.n_crossings) if corner[c][0] == corner[c][2] or corner[c][1] == corner[c][3]]


def twist_number(d: LinkDiagram) -> int:
    """Number of twist regions: crossings joined through bigon faces count once."""
    bad = nugatory_crossings(d)
    if bad:
        raise DomainError(f"diagram is not reduced; nugatory crossings {bad}")
    parent = list(range(d.n_crossings))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for face in d.faces:
        if len(face) == 2 and face[0][0] != face[1][0]:
            parent[find(face[0][0])] = find(face[1][0])
    return len({find(c) for c in range(d.n_crossings)})
