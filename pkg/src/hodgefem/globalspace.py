"""Global broken space, vertex-patch constraints, and an explicit basis.

The discrete space is the product of the local shape spaces (six
coefficients per cell, cell-major layout) intersected with the kernel of
two families of constraint functionals built from piecewise-linear hat
functions:

    div rows   (every vertex a)      sum_T <delta mu, phi_a>_T - <mu, d phi_a>_T
    rot rows   (interior vertices)   sum_T <d mu, phi_a dx^12>_T - <mu, delta(phi_a dx^12)>_T

with delta the Green-sign codifferential.  Both test families lie inside
the span of the element's DOF test forms on each cell, which is what
makes the cellwise interpolant conforming in this weak sense.

The kernel has an explicit local basis, built from dual local functions:
on each cell the six Whitney functionals above (three rot, three div,
one per vertex) are biorthogonalized against the shape basis, giving
mu^rot_{a,T} and mu^div_{a,T}.  Then

    DIV_PATCH  per vertex a: differences mu^div_{a,T_i} - mu^div_{a,T_{i+1}}
               along the fan around a (degree-1 functions, 2-cell support)
    ROT_PATCH  the same with mu^rot for interior vertices
    ROT_CELL   per cell, mu^rot_{a,T} for each boundary vertex a of T
               (single-cell support)

All dual coefficients are exact rationals and the constraint identities
B v = 0 hold exactly, by biorthogonality.  Congruent cells (equal up to
translation) share one cached template: shape space, DOF matrix, Whitney
matrix, dual coefficients, cell Gram, and quadrature-node value tables
are computed once per congruence class, which collapses the structured
meshes to a handful of exact computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .element import (
    DofBasis,
    DofMatrix,
    FormCallback,
    ShapeSpace,
    build_dof_basis,
    build_dof_matrix,
    build_shape_space,
    form_values,
    poly_values,
)
from .forms import PolyForm, Polynomial, codifferential_green, exterior_derivative
from .mesh import LAGRANGE_FULL, LAGRANGE_ZERO, Triangulation, whitney_basis
from .simplices import Simplex, l2_inner, quadrature_rule, solve_rational

__all__ = [
    "DIV_PATCH",
    "ROT_PATCH",
    "ROT_CELL",
    "CellTemplate",
    "ProductSpace",
    "ConstraintSystem",
    "CellDuals",
    "GlobalBasis",
    "BasisFunction",
    "build_product_space",
    "build_constraints",
    "build_dual_local_functions",
    "build_global_basis",
    "global_interpolate",
]

DIV_PATCH = "DIV_PATCH"
ROT_PATCH = "ROT_PATCH"
ROT_CELL = "ROT_CELL"


class CellTemplate:
    """Per-congruence-class exact element data (translation invariant)."""

    __slots__ = (
        "key",
        "simplex",
        "space",
        "dofs",
        "matrix",
        "minv",
        "whitney",
        "duals",
        "gram",
        "gram_float",
        "_tables",
    )

    def __init__(self, key, simplex: Simplex, scaled: bool):
        self.key = key
        self.simplex = simplex
        self.space = build_shape_space(2, 1, simplex, scaled=scaled)
        self.dofs = build_dof_basis(2, 1, simplex, scaled=scaled)
        self.matrix = build_dof_matrix(self.space, self.dofs)
        self.minv = np.linalg.inv(self.matrix.as_float)

        # Whitney functional matrix: rows rot slot 0..2 then div slot 0..2
        grads = simplex.barycentric_gradients()
        third = Fraction(1, 3)
        hats = []
        for g in grads:
            terms = {(0, 0): third}
            if g[0] != 0:
                terms[(1, 0)] = g[0]
            if g[1] != 0:
                terms[(0, 1)] = g[1]
            hats.append(Polynomial(2, terms))
        basis = self.space.basis
        d_basis = [exterior_derivative(mu) for mu in basis]
        g_basis = [codifferential_green(mu) for mu in basis]
        rows: list[list[Fraction]] = []
        for lam in hats:
            eta = PolyForm(2, 2, {(1, 2): lam})
            geta = codifferential_green(eta)
            rows.append(
                [
                    l2_inner(dmu, eta, simplex) - l2_inner(mu, geta, simplex)
                    for mu, dmu in zip(basis, d_basis)
                ]
            )
        for lam in hats:
            tau = PolyForm(2, 0, {(): lam})
            dtau = exterior_derivative(tau)
            rows.append(
                [
                    l2_inner(gmu, tau, simplex) - l2_inner(mu, dtau, simplex)
                    for mu, gmu in zip(basis, g_basis)
                ]
            )
        self.whitney = rows
        eye = [[Fraction(1 if r == c else 0) for c in range(6)] for r in range(6)]
        self.duals = solve_rational([list(r) for r in rows], eye)  # column j: dual coeffs

        self.gram = [
            [
                l2_inner(d_basis[i], d_basis[j], simplex)
                + l2_inner(g_basis[i], g_basis[j], simplex)
                + l2_inner(basis[i], basis[j], simplex)
                for j in range(6)
            ]
            for i in range(6)
        ]
        self.gram_float = np.array([[float(v) for v in row] for row in self.gram])
        self._tables: dict[int, dict[str, np.ndarray]] = {}

    def dual_coeffs(self, kind: str, slot: int) -> list[Fraction]:
        """Exact shape coefficients of mu^rot (kind 'rot') or mu^div at a slot."""
        col = slot if kind == "rot" else 3 + slot
        return [self.duals[i][col] for i in range(6)]

    def tables(self, order: int) -> dict[str, np.ndarray]:
        """Quadrature-node value tables in centered coordinates.

        Keys: centered (nq,2), weights (nq,), val (6,nq,2), dval (6,nq),
        gval (6,nq), eta_v (3,nq), eta_g (3,nq,2), tau_v (3,nq),
        tau_d (3,nq,2).  Shared by every congruent cell.
        """
        t = self._tables.get(order)
        if t is not None:
            return t
        bary, w = quadrature_rule(2, order)
        verts = np.array([[float(x) for x in v] for v in self.simplex.centered])
        nodes = np.array([[float(b) for b in node] for node in bary]) @ verts
        weights = np.array([float(x) for x in w]) * 2.0 * float(self.simplex.volume)
        basis = self.space.basis
        val = np.stack([form_values(mu, nodes) for mu in basis])
        dval = np.stack(
            [form_values(exterior_derivative(mu), nodes)[:, 0] for mu in basis]
        )
        gval = np.stack(
            [poly_values(codifferential_green(mu).component(()), nodes) for mu in basis]
        )
        eta_v = np.stack(
            [form_values(eta, nodes)[:, 0] for eta in self.dofs.eta_basis]
        )
        eta_g = np.stack([form_values(g, nodes) for g in self.dofs.eta_green])
        tau_v = np.stack(
            [poly_values(tau.component(()), nodes) for tau in self.dofs.tau_basis]
        )
        tau_d = np.stack([form_values(d, nodes) for d in self.dofs.tau_d])
        t = {
            "centered": nodes,
            "weights": weights,
            "val": val,
            "dval": dval,
            "gval": gval,
            "eta_v": eta_v,
            "eta_g": eta_g,
            "tau_v": tau_v,
            "tau_d": tau_d,
        }
        self._tables[order] = t
        return t


class ProductSpace:
    """Cell-major broken space: coefficients [6*cell : 6*cell + 6] per cell."""

    def __init__(self, tri: Triangulation, scaled: bool = True):
        self.tri = tri
        self.scaled = scaled
        self.templates: dict[tuple, CellTemplate] = {}
        self.cell_template: list[CellTemplate] = []
        index: dict[tuple, list[int]] = {}
        for c in range(len(tri.cells)):
            simplex = tri.simplex(c)
            key = tuple(simplex.centered)
            t = self.templates.get(key)
            if t is None:
                t = CellTemplate(key, simplex, scaled)
                self.templates[key] = t
                index[key] = []
            index[key].append(c)
            self.cell_template.append(t)
        self.cells_by_template = {k: np.array(v) for k, v in index.items()}
        self.barycenters = np.array(
            [[float(x) for x in tri.simplex(c).barycenter] for c in range(len(tri.cells))]
        )

    @property
    def dim(self) -> int:
        return 6 * len(self.tri.cells)

    def template(self, cell: int) -> CellTemplate:
        return self.cell_template[cell]

    def cell_form(self, cell: int, coeffs) -> PolyForm:
        """The PolyForm on one cell from its 6 coefficients (exact input)."""
        return self.template(cell).space.combine(list(coeffs))


class ConstraintSystem:
    """Sparse constraint rows: div rows for all vertices, rot rows interior."""

    def __init__(self, tri: Triangulation, B_div: sp.csr_matrix, B_rot: sp.csr_matrix):
        self.tri = tri
        self.B_div = B_div
        self.B_rot = B_rot
        self.B = sp.vstack([B_div, B_rot]).tocsr() if B_rot.shape[0] else B_div.tocsr()
        self.div_vertices = list(range(len(tri.vertices)))
        self.rot_vertices = list(tri.interior_vertices)

    @property
    def rows(self) -> int:
        return self.B.shape[0]

    def rank(self, tol: float = 1e-9) -> int:
        """Numerical rank of B (dense SVD below 800 rows, Gram eigens above)."""
        B = self.B
        if B.shape[0] <= 800:
            s = np.linalg.svd(B.toarray(), compute_uv=False)
            return int(np.sum(s > tol * s[0]))
        G = (B @ B.T).toarray()
        w = np.linalg.eigvalsh(G)
        return int(np.sum(w > (tol**2) * w[-1]))

    def nullity(self) -> int:
        return self.B.shape[1] - self.rank()


def build_product_space(tri: Triangulation, scaled: bool = True) -> ProductSpace:
    return ProductSpace(tri, scaled=scaled)


def build_constraints(tri: Triangulation, prod: ProductSpace) -> ConstraintSystem:
    nv = len(tri.vertices)
    full = whitney_basis(tri, LAGRANGE_FULL)
    zero = whitney_basis(tri, LAGRANGE_ZERO)
    rot_row = {v: i for i, v in enumerate(zero.dof_vertices)}

    div_data, div_r, div_c = [], [], []
    rot_data, rot_r, rot_c = [], [], []
    for c, tri_cell in enumerate(tri.cells):
        t = prod.template(c)
        W = t.whitney
        base = 6 * c
        for slot in range(3):
            a = tri_cell[slot]
            row = W[3 + slot]
            for i in range(6):
                v = row[i]
                if v != 0:
                    div_r.append(a)
                    div_c.append(base + i)
                    div_data.append(float(v))
            r = rot_row.get(a)
            if r is not None:
                row = W[slot]
                for i in range(6):
                    v = row[i]
                    if v != 0:
                        rot_r.append(r)
                        rot_c.append(base + i)
                        rot_data.append(float(v))
    B_div = sp.coo_matrix((div_data, (div_r, div_c)), shape=(nv, prod.dim)).tocsr()
    B_rot = sp.coo_matrix(
        (rot_data, (rot_r, rot_c)), shape=(len(zero.dof_vertices), prod.dim)
    ).tocsr()
    B_div.sum_duplicates()
    B_rot.sum_duplicates()
    return ConstraintSystem(tri, B_div, B_rot)


@dataclass
class CellDuals:
    """The six dual local forms of one cell, keyed by vertex id."""

    cell: int
    vertices: tuple[int, int, int]
    rot: dict[int, PolyForm]
    div: dict[int, PolyForm]
    rot_coeffs: dict[int, list[Fraction]]
    div_coeffs: dict[int, list[Fraction]]


def build_dual_local_functions(tri: Triangulation, cell: int, prod: ProductSpace | None = None) -> CellDuals:
    """Biorthogonal dual forms for one cell's six Whitney functionals."""
    if prod is None:
        prod = build_product_space(tri)
    t = prod.template(cell)
    verts = tri.cells[cell]
    rot, div, rc, dc = {}, {}, {}, {}
    for slot in range(3):
        a = verts[slot]
        cr = t.dual_coeffs("rot", slot)
        cd = t.dual_coeffs("div", slot)
        rc[a] = cr
        dc[a] = cd
        rot[a] = t.space.combine(cr)
        div[a] = t.space.combine(cd)
    return CellDuals(cell, tuple(verts), rot, div, rc, dc)


@dataclass
class BasisFunction:
    """One member of the explicit kernel basis (support of one or two cells)."""

    category: str
    anchor: int
    cells: tuple[int, ...]
    entries: list[tuple[int, Fraction]] = field(repr=False)

    @property
    def support_size(self) -> int:
        return len(self.cells)


class GlobalBasis:
    """Explicit basis of null(B) with category metadata and sparse Phi."""

    def __init__(self, functions: list[BasisFunction], dim: int):
        self.functions = functions
        self.dim = dim
        data, rows, cols = [], [], []
        for j, fn in enumerate(functions):
            for idx, val in fn.entries:
                rows.append(idx)
                cols.append(j)
                data.append(float(val))
        self.Phi = sp.coo_matrix((data, (rows, cols)), shape=(dim, len(functions))).tocsr()

    def __len__(self) -> int:
        return len(self.functions)

    def counts(self) -> dict[str, int]:
        out = {DIV_PATCH: 0, ROT_PATCH: 0, ROT_CELL: 0}
        for fn in self.functions:
            out[fn.category] += 1
        return out

    def count_for_vertex(self, category: str, vertex: int) -> int:
        return sum(
            1 for fn in self.functions if fn.category == category and fn.anchor == vertex
        )


def build_global_basis(tri: Triangulation, prod: ProductSpace, cons: ConstraintSystem | None = None) -> GlobalBasis:
    """Assemble DIV_PATCH, ROT_PATCH and ROT_CELL functions.

    The fan differences use consecutive cells of each vertex patch, so a
    vertex of degree d contributes d-1 functions per applicable family;
    every (cell, boundary-vertex) incidence contributes one single-cell
    ROT_CELL function.  All vectors satisfy B v = 0 exactly by
    biorthogonality of the dual forms.
    """
    functions: list[BasisFunction] = []
    interior = set(tri.interior_vertices)

    def dual_entries(cell: int, kind: str, vertex: int) -> list[tuple[int, Fraction]]:
        t = prod.template(cell)
        slot = tri.cell_slot(cell, vertex)
        coeffs = t.dual_coeffs(kind, slot)
        base = 6 * cell
        return [(base + i, c) for i, c in enumerate(coeffs) if c != 0]

    for a in range(len(tri.vertices)):
        fan = tri.patches[a]
        for i in range(len(fan) - 1):
            plus = dual_entries(fan[i], "div", a)
            minus = [(idx, -c) for idx, c in dual_entries(fan[i + 1], "div", a)]
            functions.append(
                BasisFunction(DIV_PATCH, a, (fan[i], fan[i + 1]), plus + minus)
            )
    for a in tri.interior_vertices:
        fan = tri.patches[a]
        for i in range(len(fan) - 1):
            plus = dual_entries(fan[i], "rot", a)
            minus = [(idx, -c) for idx, c in dual_entries(fan[i + 1], "rot", a)]
            functions.append(
                BasisFunction(ROT_PATCH, a, (fan[i], fan[i + 1]), plus + minus)
            )
    for c, tri_cell in enumerate(tri.cells):
        for slot in range(3):
            a = tri_cell[slot]
            if a not in interior:
                functions.append(BasisFunction(ROT_CELL, a, (c,), dual_entries(c, "rot", a)))

    return GlobalBasis(functions, prod.dim)


def global_interpolate(
    mu: FormCallback, tri: Triangulation, prod: ProductSpace, quad_order: int = 6
) -> np.ndarray:
    """Cellwise interpolation onto the broken space, vectorized by template.

    The callback must provide value, d and delta (Green sign).  Set the
    attribute ``cellwise = True`` on a callback whose functions take
    (points, cell) to interpolate fields defined piecewise on the mesh.
    """
    if mu.d is None or mu.delta is None:
        raise ValueError("global interpolation needs d and delta callback data")
    out = np.zeros(prod.dim)
    cellwise = bool(getattr(mu, "cellwise", False))
    for key, cells in prod.cells_by_template.items():
        t = prod.templates[key]
        tab = t.tables(quad_order)
        nodes, w = tab["centered"], tab["weights"]
        nq = nodes.shape[0]
        pts = prod.barycenters[cells][:, None, :] + nodes[None, :, :]  # (C, nq, 2)
        C = len(cells)
        if cellwise:
            val = np.empty((C, nq, 2))
            dv = np.empty((C, nq))
            gv = np.empty((C, nq))
            for i, c in enumerate(cells):
                val[i] = np.asarray(mu.value(pts[i], int(c)), dtype=float)
                dv[i] = np.asarray(mu.d(pts[i], int(c)), dtype=float).reshape(nq)
                gv[i] = np.asarray(mu.delta(pts[i], int(c)), dtype=float).reshape(nq)
        else:
            flat = pts.reshape(-1, 2)
            val = np.asarray(mu.value(flat), dtype=float).reshape(C, nq, 2)
            dv = np.asarray(mu.d(flat), dtype=float).reshape(C, nq)
            gv = np.asarray(mu.delta(flat), dtype=float).reshape(C, nq)
        f_eta = np.einsum("q,eq,cq->ce", w, tab["eta_v"], dv) - np.einsum(
            "q,eqx,cqx->ce", w, tab["eta_g"], val
        )
        f_tau = np.einsum("q,tq,cq->ct", w, tab["tau_v"], gv) - np.einsum(
            "q,tqx,cqx->ct", w, tab["tau_d"], val
        )
        dofs = np.concatenate([f_eta, f_tau], axis=1)  # (C, 6)
        coeffs = dofs @ t.minv.T
        for i, c in enumerate(cells):
            out[6 * c : 6 * c + 6] = coeffs[i]
    return out
