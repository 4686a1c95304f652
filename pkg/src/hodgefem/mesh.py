"""Planar triangulations, structured generators, file I/O, Whitney hats.

A Triangulation validates its input on construction: cells are oriented
positively (reordering when needed), degenerate or duplicate cells and
isolated or duplicate vertices are rejected with messages naming the
offending entity, edges may be shared by at most two cells, every vertex
star must be a single fan (disk or half-disk), and, when the mesh has
interior vertices at all, every boundary vertex must share an edge with
at least one interior vertex (the constraint pipeline relies on this).
A mesh without interior vertices (a single triangle, a strip) is
accepted and flagged in ``warnings``.

The mesh file format is line based and exact:

    ndim 2
    vertices N
    x y            (N lines; integers, exact decimals, or p/q fractions)
    cells M
    i j k          (M lines; 0-based vertex ids)

Coordinates with terminating decimal expansions are written as decimals,
anything else as p/q, so write/read round-trips reproduce coordinates
bit for bit.

The structured unit-square generators produce the DIAGONAL pattern
(bottom-left to top-right diagonals, with the two corner squares that a
parallel-diagonal mesh would leave cut off from the interior flipped the
other way) and the CRISSCROSS pattern (four triangles per square around
a center vertex).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .forms import PolyForm, Polynomial
from .simplices import Simplex

__all__ = [
    "DIAGONAL",
    "CRISSCROSS",
    "INTERIOR",
    "BOUNDARY",
    "LAGRANGE_FULL",
    "LAGRANGE_ZERO",
    "Triangulation",
    "WhitneySpace",
    "generate_square_mesh",
    "read_mesh",
    "write_mesh",
    "parse_mesh",
    "format_mesh",
    "whitney_basis",
]

DIAGONAL = "diagonal"
CRISSCROSS = "crisscross"
INTERIOR = "interior"
BOUNDARY = "boundary"
LAGRANGE_FULL = "lagrange_full"
LAGRANGE_ZERO = "lagrange_zero"


def _fr(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


class Triangulation:
    """A validated conforming triangulation of a planar domain."""

    def __init__(self, vertices, cells):
        self.vertices: list[tuple[Fraction, Fraction]] = [
            (_fr(v[0]), _fr(v[1])) for v in vertices
        ]
        self.warnings: list[str] = []
        nv = len(self.vertices)
        seen: dict[tuple[Fraction, Fraction], int] = {}
        for i, v in enumerate(self.vertices):
            if v in seen:
                raise ValueError(f"vertex {i} duplicates vertex {seen[v]} at {v}")
            seen[v] = i

        oriented: list[tuple[int, int, int]] = []
        cell_keys: dict[frozenset, int] = {}
        for ci, cell in enumerate(cells):
            tri = tuple(int(x) for x in cell)
            if len(tri) != 3 or len(set(tri)) != 3:
                raise ValueError(f"cell {ci} must have three distinct vertices, got {tri}")
            for v in tri:
                if not (0 <= v < nv):
                    raise ValueError(f"cell {ci} references missing vertex {v}")
            key = frozenset(tri)
            if key in cell_keys:
                raise ValueError(f"cell {ci} duplicates cell {cell_keys[key]}")
            cell_keys[key] = ci
            a, b, c = (self.vertices[t] for t in tri)
            area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if area2 == 0:
                raise ValueError(f"cell {ci} with vertices {tri} is degenerate")
            if area2 < 0:
                tri = (tri[0], tri[2], tri[1])
            oriented.append(tri)
        self.cells: list[tuple[int, int, int]] = oriented

        used = set()
        for tri in self.cells:
            used.update(tri)
        for i in range(nv):
            if i not in used:
                raise ValueError(f"vertex {i} is not referenced by any cell")

        # edge incidence
        edge_cells: dict[tuple[int, int], list[int]] = {}
        for ci, tri in enumerate(self.cells):
            for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(e), max(e))
                lst = edge_cells.setdefault(key, [])
                lst.append(ci)
                if len(lst) > 2:
                    raise ValueError(f"edge {key} is shared by more than two cells")
        self.edge_cells = edge_cells
        self.edges: list[tuple[int, int]] = sorted(edge_cells)
        self.boundary_edges = {e for e, cs in edge_cells.items() if len(cs) == 1}

        self._check_no_hanging_vertices()

        # connectivity across shared edges
        if self.cells:
            adj: dict[int, list[int]] = {i: [] for i in range(len(self.cells))}
            for cs in edge_cells.values():
                if len(cs) == 2:
                    adj[cs[0]].append(cs[1])
                    adj[cs[1]].append(cs[0])
            stack, visited = [0], {0}
            while stack:
                c = stack.pop()
                for nb in adj[c]:
                    if nb not in visited:
                        visited.add(nb)
                        stack.append(nb)
            if len(visited) != len(self.cells):
                raise ValueError("mesh is not edge-connected")

        boundary_vertices = set()
        for (a, b) in self.boundary_edges:
            boundary_vertices.add(a)
            boundary_vertices.add(b)
        self.vertex_class = [
            BOUNDARY if i in boundary_vertices else INTERIOR for i in range(nv)
        ]
        self.interior_vertices = [i for i in range(nv) if self.vertex_class[i] == INTERIOR]

        self.patches: dict[int, list[int]] = {}
        incident: dict[int, list[int]] = {i: [] for i in range(nv)}
        for ci, tri in enumerate(self.cells):
            for v in tri:
                incident[v].append(ci)
        for v in range(nv):
            self.patches[v] = self._fan_order(v, incident[v])

        if self.interior_vertices:
            neighbor: dict[int, set[int]] = {i: set() for i in range(nv)}
            for (a, b) in self.edges:
                neighbor[a].add(b)
                neighbor[b].add(a)
            for v in range(nv):
                if self.vertex_class[v] == BOUNDARY and not any(
                    self.vertex_class[u] == INTERIOR for u in neighbor[v]
                ):
                    raise ValueError(
                        f"boundary vertex {v} has no edge to an interior vertex"
                    )
        else:
            self.warnings.append("mesh has no interior vertices")

        self.euler_characteristic = nv - len(self.edges) + len(self.cells)
        if self.euler_characteristic != 1:
            self.warnings.append(
                f"Euler characteristic {self.euler_characteristic} != 1 (not a disk)"
            )

        self._simplices: list[Simplex | None] = [None] * len(self.cells)

    # -- derived geometry ------------------------------------------------

    def simplex(self, cell: int) -> Simplex:
        s = self._simplices[cell]
        if s is None:
            s = Simplex([self.vertices[v] for v in self.cells[cell]])
            self._simplices[cell] = s
        return s

    @property
    def h(self) -> float:
        return max(self.simplex(c).h for c in range(len(self.cells)))

    def vertex_degree(self, v: int) -> int:
        return len(self.patches[v])

    def cell_slot(self, cell: int, vertex: int) -> int:
        tri = self.cells[cell]
        for i in range(3):
            if tri[i] == vertex:
                return i
        raise ValueError(f"vertex {vertex} not in cell {cell}")

    # -- validation helpers ----------------------------------------------

    def _check_no_hanging_vertices(self) -> None:
        """No vertex may lie in the open interior of another cell's edge."""
        if not self.edges:
            return
        pts = np.array([[float(x), float(y)] for (x, y) in self.vertices])
        for (a, b) in self.edges:
            pa, pb = pts[a], pts[b]
            d = pb - pa
            rel = pts - pa
            cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
            dot = rel @ d
            L2 = float(d @ d)
            scale = math.sqrt(L2)
            suspicious = np.nonzero(
                (np.abs(cross) <= 1e-9 * scale * scale) & (dot > 1e-12) & (dot < L2 - 1e-12)
            )[0]
            for v in suspicious:
                if v == a or v == b:
                    continue
                va = self.vertices[a]
                vb = self.vertices[b]
                vv = self.vertices[v]
                ex = (vb[0] - va[0], vb[1] - va[1])
                rv = (vv[0] - va[0], vv[1] - va[1])
                cr = rv[0] * ex[1] - rv[1] * ex[0]
                dt = rv[0] * ex[0] + rv[1] * ex[1]
                l2 = ex[0] * ex[0] + ex[1] * ex[1]
                if cr == 0 and 0 < dt < l2:
                    raise ValueError(
                        f"vertex {int(v)} lies inside edge ({a}, {b}): nonconforming mesh"
                    )

    def _fan_order(self, v: int, cells: list[int]) -> list[int]:
        """Order the cells around ``v`` into a single fan (cycle or path).

        In a positively oriented cell (v, p, q) the walk proceeds across
        the (v, q) edge to the neighbor sharing it.  Interior vertices
        give a closed cycle (started at the lowest cell id for
        determinism); boundary vertices give a path starting at the cell
        whose entry edge (v, p) is on the boundary.  Anything else is a
        pinched star and is rejected.
        """
        if not cells:
            raise ValueError(f"vertex {v} is not referenced by any cell")

        def pq(cell: int) -> tuple[int, int]:
            tri = self.cells[cell]
            i = tri.index(v)
            return tri[(i + 1) % 3], tri[(i + 2) % 3]

        def neighbor_across(cell: int, q: int) -> int | None:
            key = (min(v, q), max(v, q))
            cs = self.edge_cells[key]
            others = [c for c in cs if c != cell]
            return others[0] if others else None

        starts = []
        for c in cells:
            p, _ = pq(c)
            key = (min(v, p), max(v, p))
            if key in self.boundary_edges:
                starts.append(c)
        if len(starts) > 1:
            raise ValueError(f"vertex {v} has a pinched (multi-fan) star")
        start = starts[0] if starts else min(cells)

        order = [start]
        seen = {start}
        current = start
        while True:
            _, q = pq(current)
            nxt = neighbor_across(current, q)
            if nxt is None:
                break
            if nxt == start:
                if not starts:
                    break  # closed the interior cycle
                raise ValueError(f"vertex {v} has an inconsistent star")
            if nxt in seen:
                raise ValueError(f"vertex {v} has a pinched (multi-fan) star")
            order.append(nxt)
            seen.add(nxt)
            current = nxt
        if len(order) != len(cells):
            raise ValueError(f"vertex {v} has a pinched (multi-fan) star")
        return order


def generate_square_mesh(m: int, pattern: str = DIAGONAL) -> Triangulation:
    """Uniform triangulation of the unit square with m x m subsquares."""
    if not isinstance(m, int) or m < 2:
        raise ValueError(f"mesh parameter m must be an integer >= 2, got {m}")
    if pattern not in (DIAGONAL, CRISSCROSS):
        raise ValueError(f"unknown mesh pattern {pattern!r}")

    def gid(i: int, j: int) -> int:
        return j * (m + 1) + i

    vertices: list[tuple[Fraction, Fraction]] = [
        (Fraction(i, m), Fraction(j, m)) for j in range(m + 1) for i in range(m + 1)
    ]
    cells: list[tuple[int, int, int]] = []

    if pattern == DIAGONAL:
        flipped = {(m - 1, 0), (0, m - 1)}
        for j in range(m):
            for i in range(m):
                bl, br = gid(i, j), gid(i + 1, j)
                tr, tl = gid(i + 1, j + 1), gid(i, j + 1)
                if (i, j) in flipped:
                    cells.append((bl, br, tl))
                    cells.append((br, tr, tl))
                else:
                    cells.append((bl, br, tr))
                    cells.append((bl, tr, tl))
    else:
        centers: dict[tuple[int, int], int] = {}
        for j in range(m):
            for i in range(m):
                centers[(i, j)] = len(vertices)
                vertices.append((Fraction(2 * i + 1, 2 * m), Fraction(2 * j + 1, 2 * m)))
        for j in range(m):
            for i in range(m):
                bl, br = gid(i, j), gid(i + 1, j)
                tr, tl = gid(i + 1, j + 1), gid(i, j + 1)
                c = centers[(i, j)]
                cells.extend([(bl, br, c), (br, tr, c), (tr, tl, c), (tl, bl, c)])

    return Triangulation(vertices, cells)


def _format_fraction(x: Fraction) -> str:
    """Exact decimal when the denominator is 2^a 5^b, else p/q."""
    q = x.denominator
    if q == 1:
        return str(x.numerator)
    a = 0
    while q % 2 == 0:
        q //= 2
        a += 1
    b = 0
    while q % 5 == 0:
        q //= 5
        b += 1
    if q != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(a, b)
    scaled = x.numerator * 10**digits // x.denominator
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}" if digits else f"{sign}{s}"


def format_mesh(tri: Triangulation) -> str:
    lines = ["ndim 2", f"vertices {len(tri.vertices)}"]
    for (x, y) in tri.vertices:
        lines.append(f"{_format_fraction(x)} {_format_fraction(y)}")
    lines.append(f"cells {len(tri.cells)}")
    for (a, b, c) in tri.cells:
        lines.append(f"{a} {b} {c}")
    return "\n".join(lines) + "\n"


def parse_mesh(text: str) -> Triangulation:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"mesh file ended while expecting {what}")
        ln = lines[pos]
        pos += 1
        return ln

    header = take("'ndim' header").split()
    if header != ["ndim", "2"]:
        raise ValueError(f"first line must be 'ndim 2', got {' '.join(header)!r}")
    vh = take("'vertices N' header").split()
    if len(vh) != 2 or vh[0] != "vertices":
        raise ValueError(f"expected 'vertices N', got {' '.join(vh)!r}")
    try:
        nv = int(vh[1])
    except ValueError:
        raise ValueError(f"vertex count {vh[1]!r} is not an integer") from None
    vertices = []
    for i in range(nv):
        toks = take(f"vertex {i}").split()
        if len(toks) != 2:
            raise ValueError(f"vertex {i}: expected two coordinates, got {len(toks)}")
        coords = []
        for t in toks:
            try:
                coords.append(Fraction(t))
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"vertex {i}: bad coordinate token {t!r}") from None
        vertices.append(tuple(coords))
    ch = take("'cells M' header").split()
    if len(ch) != 2 or ch[0] != "cells":
        raise ValueError(f"expected 'cells M', got {' '.join(ch)!r}")
    try:
        nc = int(ch[1])
    except ValueError:
        raise ValueError(f"cell count {ch[1]!r} is not an integer") from None
    cells = []
    for i in range(nc):
        toks = take(f"cell {i}").split()
        if len(toks) != 3:
            raise ValueError(f"cell {i}: expected three vertex ids, got {len(toks)}")
        try:
            cells.append(tuple(int(t) for t in toks))
        except ValueError:
            raise ValueError(f"cell {i}: bad vertex id in {toks}") from None
    if pos != len(lines):
        raise ValueError(f"unexpected trailing content at line {pos + 1}")
    return Triangulation(vertices, cells)


def read_mesh(path) -> Triangulation:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mesh(fh.read())


def write_mesh(tri: Triangulation, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_mesh(tri))


class WhitneySpace:
    """Piecewise-linear vertex (hat) functions on a triangulation.

    LAGRANGE_FULL attaches one function to every vertex, LAGRANGE_ZERO
    only to interior vertices.  Per cell and local slot the hat is an
    exact linear Polynomial in that cell's centered coordinates; helper
    accessors wrap it as a 0-form, as the volume form hat * dx^12, and
    give the Green codifferential of the latter (the rotated gradient).
    """

    def __init__(self, tri: Triangulation, kind: str):
        if kind not in (LAGRANGE_FULL, LAGRANGE_ZERO):
            raise ValueError(f"unknown Whitney space kind {kind!r}")
        self.tri = tri
        self.kind = kind
        if kind == LAGRANGE_FULL:
            self.dof_vertices = list(range(len(tri.vertices)))
        else:
            self.dof_vertices = list(tri.interior_vertices)
        self.index_of = {v: i for i, v in enumerate(self.dof_vertices)}
        self._hats: list[list[Polynomial] | None] = [None] * len(tri.cells)

    @property
    def dim(self) -> int:
        return len(self.dof_vertices)

    def cell_hats(self, cell: int) -> list[Polynomial]:
        """The three barycentric hats of a cell, slot order, exact."""
        cached = self._hats[cell]
        if cached is not None:
            return cached
        simplex = self.tri.simplex(cell)
        grads = simplex.barycentric_gradients()
        hats = []
        third = Fraction(1, 3)
        for i in range(3):
            terms = {(0, 0): third}
            g = grads[i]
            if g[0] != 0:
                terms[(1, 0)] = g[0]
            if g[1] != 0:
                terms[(0, 1)] = g[1]
            hats.append(Polynomial(2, terms))
        self._hats[cell] = hats
        return hats

    def hat(self, cell: int, slot: int) -> Polynomial:
        return self.cell_hats(cell)[slot]

    def hat_form(self, cell: int, slot: int) -> PolyForm:
        return PolyForm(2, 0, {(): self.hat(cell, slot)})

    def hat_volume_form(self, cell: int, slot: int) -> PolyForm:
        return PolyForm(2, 2, {(1, 2): self.hat(cell, slot)})

    def delta_hat_volume(self, cell: int, slot: int) -> PolyForm:
        """Green codifferential of hat * dx^12: d2(hat) dx^1 - d1(hat) dx^2."""
        lam = self.hat(cell, slot)
        return PolyForm(2, 1, {(1,): lam.partial(2), (2,): -lam.partial(1)})

    def grad_hat(self, cell: int, slot: int) -> PolyForm:
        """Exterior derivative of the hat 0-form."""
        lam = self.hat(cell, slot)
        return PolyForm(2, 1, {(1,): lam.partial(1), (2,): lam.partial(2)})


def whitney_basis(tri: Triangulation, kind: str = LAGRANGE_FULL) -> WhitneySpace:
    return WhitneySpace(tri, kind)
