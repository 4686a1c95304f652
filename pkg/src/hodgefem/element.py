"""The local nonconforming element: shape space, DOFs, interpolation.

Per simplex T the k-form shape space is the direct sum of four blocks

    P0        constant k-forms                                C(n,k)
    KAPPA     koszul(constant (k+1)-forms)                    C(n,k+1)
    STARKAPPA star koszul star (constant (k-1)-forms)         C(n,k-1)
    H2D       quadratic forms with d = 0 and constant delta   C(n,k)

with polynomials in barycenter-centered coordinates throughout.  The H2D
block member attached to dx^alpha is

    sum_j [ (x^{b_j})^2 - c^{b_j} ] dx^alpha,   b = complement(alpha),

where c^{(j)} is the simplex's second moment, so every component has
zero mean.  The companion family build_h2delta_form (quadratics in the
alpha-variables, delta = 0, d constant) is provided for identity tests
but is not part of the shape space.

Degrees of freedom pair the form with test forms through the two Green
functionals (delta below is the Green/adjoint sign, see forms):

    F_eta(mu) = <d mu, eta> - <mu, delta eta>,   eta in P0^{k+1} + star koszul star P0^k
    F_tau(mu) = <delta mu, tau> - <mu, d tau>,   tau in P0^{k-1} + koszul P0^k

Row order in DofMatrix: eta block (constants then koszul-type), then tau
block (constants then koszul-type); columns follow the shape basis.

Optional scaling keeps the DofMatrix condition number independent of the
simplex diameter: koszul-type shape and test forms carry 1/h, the H2D
block 1/h^2, with h a rational Chebyshev-diameter surrogate so the exact
rational path is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .forms import (
    PolyForm,
    Polynomial,
    codifferential_green,
    complement,
    exterior_derivative,
    hodge_star,
    koszul,
    multi_indices,
)
from .simplices import Simplex, l2_inner, rule_points, solve_rational

__all__ = [
    "P0",
    "KAPPA",
    "STARKAPPA",
    "H2D",
    "DIRECT",
    "FOURSTEP",
    "ShapeSpace",
    "DofBasis",
    "DofMatrix",
    "FormCallback",
    "build_h2d_form",
    "build_h2delta_form",
    "build_shape_space",
    "build_dof_basis",
    "build_dof_matrix",
    "dof_values",
    "interpolate",
    "interpolate_coeffs",
]

P0 = "P0"
KAPPA = "KAPPA"
STARKAPPA = "STARKAPPA"
H2D = "H2D"

DIRECT = "direct"
FOURSTEP = "fourstep"


def build_h2d_form(alpha: tuple[int, ...], simplex: Simplex) -> PolyForm:
    """Quadratic shape form on dx^alpha: d of it is koszul-type, delta is 0."""
    n = simplex.n
    beta = complement(tuple(alpha), n)
    if not beta:
        raise ValueError("H2D form needs a nonempty complement (k < n)")
    poly = Polynomial(n)
    for b in beta:
        xb = Polynomial.variable(n, b)
        poly = poly + xb * xb - Polynomial.constant(n, simplex.second_moments[b - 1])
    return PolyForm(n, len(alpha), {tuple(alpha): poly})


def build_h2delta_form(alpha: tuple[int, ...], simplex: Simplex) -> PolyForm:
    """Companion quadratic with delta = 0 and constant d; not a shape form."""
    n = simplex.n
    alpha = tuple(alpha)
    if not alpha:
        raise ValueError("the delta-companion quadratic needs k >= 1")
    poly = Polynomial(n)
    for a in alpha:
        xa = Polynomial.variable(n, a)
        poly = poly + xa * xa - Polynomial.constant(n, simplex.second_moments[a - 1])
    return PolyForm(n, len(alpha), {alpha: poly})


def _star_koszul_star(w: PolyForm) -> PolyForm:
    return hodge_star(koszul(hodge_star(w)))


class ShapeSpace:
    """Ordered basis of the local shape space with named blocks.

    ``basis`` lists PolyForms; ``blocks`` maps block name to a range of
    basis positions.  Within each block, forms follow the lexicographic
    order of their generating multi-indices.  ``scales`` records the
    rational factor each basis form was multiplied by (all 1 unscaled).
    """

    __slots__ = ("n", "k", "simplex", "basis", "blocks", "scaled", "scales")

    def __init__(self, n, k, simplex, basis, blocks, scaled, scales):
        self.n = n
        self.k = k
        self.simplex = simplex
        self.basis = basis
        self.blocks = blocks
        self.scaled = scaled
        self.scales = scales

    @property
    def dim(self) -> int:
        return len(self.basis)

    def block_basis(self, name: str) -> list[PolyForm]:
        r = self.blocks[name]
        return self.basis[r.start : r.stop]

    def combine(self, coeffs) -> PolyForm:
        """Linear combination of the basis with scalar coefficients."""
        if len(coeffs) != len(self.basis):
            raise ValueError(f"expected {len(self.basis)} coefficients, got {len(coeffs)}")
        out = PolyForm.zero(self.n, self.k)
        for c, mu in zip(coeffs, self.basis):
            if isinstance(c, float):
                c = Fraction(c)
            if c != 0:
                out = out + c * mu
        return out


def build_shape_space(n: int, k: int, simplex: Simplex, scaled: bool = False) -> ShapeSpace:
    """Assemble the four-block shape basis on a simplex.

    Requires 1 <= k <= n-1 (both neighbor degrees must exist) and a
    nondegenerate simplex (Simplex construction already enforces that).
    """
    if simplex.n != n:
        raise ValueError(f"simplex dimension {simplex.n} does not match n={n}")
    if not (1 <= k <= n - 1):
        raise ValueError(f"form degree k={k} outside 1..{n - 1}")
    inv_h = Fraction(1) / simplex.h_scale
    basis: list[PolyForm] = []
    scales: list[Fraction] = []
    blocks: dict[str, range] = {}

    start = len(basis)
    for alpha in multi_indices(k, n):
        basis.append(PolyForm.basis(n, alpha))
        scales.append(Fraction(1))
    blocks[P0] = range(start, len(basis))

    start = len(basis)
    for beta in multi_indices(k + 1, n):
        s = inv_h if scaled else Fraction(1)
        basis.append(s * koszul(PolyForm.basis(n, beta)))
        scales.append(s)
    blocks[KAPPA] = range(start, len(basis))

    start = len(basis)
    for gamma in multi_indices(k - 1, n):
        s = inv_h if scaled else Fraction(1)
        basis.append(s * _star_koszul_star(PolyForm.basis(n, gamma)))
        scales.append(s)
    blocks[STARKAPPA] = range(start, len(basis))

    start = len(basis)
    for alpha in multi_indices(k, n):
        s = inv_h * inv_h if scaled else Fraction(1)
        basis.append(s * build_h2d_form(alpha, simplex))
        scales.append(s)
    blocks[H2D] = range(start, len(basis))

    return ShapeSpace(n, k, simplex, basis, blocks, scaled, scales)


class DofBasis:
    """Test forms for the DOF functionals, with named sub-blocks.

    ``eta_basis`` holds (k+1)-forms (constants, then star-koszul-star of
    constant k-forms); ``tau_basis`` holds (k-1)-forms (constants, then
    koszul of constant k-forms).  The two sub-blocks of each family are
    mutually L2-orthogonal on the simplex because every koszul-type
    component has zero mean.  ``eta_green``/``tau_d`` cache the Green
    codifferential / exterior derivative of each test form.
    """

    __slots__ = (
        "n",
        "k",
        "simplex",
        "eta_basis",
        "tau_basis",
        "eta_blocks",
        "tau_blocks",
        "eta_green",
        "tau_d",
        "scaled",
    )

    def __init__(self, n, k, simplex, eta_basis, tau_basis, eta_blocks, tau_blocks, scaled):
        self.n = n
        self.k = k
        self.simplex = simplex
        self.eta_basis = eta_basis
        self.tau_basis = tau_basis
        self.eta_blocks = eta_blocks
        self.tau_blocks = tau_blocks
        self.eta_green = [codifferential_green(eta) for eta in eta_basis]
        self.tau_d = [exterior_derivative(tau) for tau in tau_basis]
        self.scaled = scaled

    @property
    def count(self) -> int:
        return len(self.eta_basis) + len(self.tau_basis)


def build_dof_basis(n: int, k: int, simplex: Simplex, scaled: bool = False) -> DofBasis:
    if simplex.n != n:
        raise ValueError(f"simplex dimension {simplex.n} does not match n={n}")
    if not (1 <= k <= n - 1):
        raise ValueError(f"form degree k={k} outside 1..{n - 1}")
    inv_h = Fraction(1) / simplex.h_scale
    eta: list[PolyForm] = []
    eta_blocks: dict[str, range] = {}
    for beta in multi_indices(k + 1, n):
        eta.append(PolyForm.basis(n, beta))
    eta_blocks[P0] = range(0, len(eta))
    start = len(eta)
    for alpha in multi_indices(k, n):
        s = inv_h if scaled else Fraction(1)
        eta.append(s * _star_koszul_star(PolyForm.basis(n, alpha)))
    eta_blocks[STARKAPPA] = range(start, len(eta))

    tau: list[PolyForm] = []
    tau_blocks: dict[str, range] = {}
    for gamma in multi_indices(k - 1, n):
        tau.append(PolyForm.basis(n, gamma))
    tau_blocks[P0] = range(0, len(tau))
    start = len(tau)
    for alpha in multi_indices(k, n):
        s = inv_h if scaled else Fraction(1)
        tau.append(s * koszul(PolyForm.basis(n, alpha)))
    tau_blocks[KAPPA] = range(start, len(tau))

    return DofBasis(n, k, simplex, eta, tau, eta_blocks, tau_blocks, scaled)


class DofMatrix:
    """Functional-by-shape matrix: rows eta then tau, columns shape basis."""

    __slots__ = ("space", "dofs", "exact", "_float")

    def __init__(self, space: ShapeSpace, dofs: DofBasis, exact):
        self.space = space
        self.dofs = dofs
        self.exact = exact
        self._float = None

    @property
    def as_float(self) -> np.ndarray:
        if self._float is None:
            self._float = np.array([[float(v) for v in row] for row in self.exact])
        return self._float

    def cond(self) -> float:
        return float(np.linalg.cond(self.as_float))

    def solve_exact(self, rhs: list[Fraction]) -> list[Fraction]:
        cols = solve_rational([list(r) for r in self.exact], [[v] for v in rhs])
        return [row[0] for row in cols]

    def solve_float(self, rhs: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.as_float, np.asarray(rhs, dtype=float))


def _eta_functional(mu: PolyForm, dofs: DofBasis, i: int, simplex: Simplex) -> Fraction:
    dmu = exterior_derivative(mu)
    return l2_inner(dmu, dofs.eta_basis[i], simplex) - l2_inner(mu, dofs.eta_green[i], simplex)


def _tau_functional(mu: PolyForm, dofs: DofBasis, i: int, simplex: Simplex) -> Fraction:
    gmu = codifferential_green(mu)
    return l2_inner(gmu, dofs.tau_basis[i], simplex) - l2_inner(mu, dofs.tau_d[i], simplex)


def build_dof_matrix(space: ShapeSpace, dofs: DofBasis) -> DofMatrix:
    simplex = space.simplex
    rows: list[list[Fraction]] = []
    d_basis = [exterior_derivative(mu) for mu in space.basis]
    g_basis = [codifferential_green(mu) for mu in space.basis]
    for i in range(len(dofs.eta_basis)):
        eta, geta = dofs.eta_basis[i], dofs.eta_green[i]
        rows.append(
            [
                l2_inner(dmu, eta, simplex) - l2_inner(mu, geta, simplex)
                for mu, dmu in zip(space.basis, d_basis)
            ]
        )
    for i in range(len(dofs.tau_basis)):
        tau, dtau = dofs.tau_basis[i], dofs.tau_d[i]
        rows.append(
            [
                l2_inner(gmu, tau, simplex) - l2_inner(mu, dtau, simplex)
                for mu, gmu in zip(space.basis, g_basis)
            ]
        )
    return DofMatrix(space, dofs, rows)


@dataclass
class FormCallback:
    """Pointwise k-form data for quadrature-based DOF evaluation.

    Each attribute maps an array of points with shape (nq, n) in global
    coordinates to component values (nq, #indices), components in the
    lexicographic multi-index order of the respective degree.  ``d`` and
    ``delta`` supply the exterior derivative and the Green-sign
    codifferential; interpolation requires all three.
    """

    value: Callable[[np.ndarray], np.ndarray]
    d: Callable[[np.ndarray], np.ndarray] | None = None
    delta: Callable[[np.ndarray], np.ndarray] | None = None
    cellwise: bool = False


def poly_values(p: Polynomial, centered: np.ndarray) -> np.ndarray:
    """Evaluate a centered-coordinate polynomial at (nq, n) float points."""
    out = np.zeros(centered.shape[0])
    for e, c in p.terms.items():
        mono = np.full(centered.shape[0], float(c))
        for j, power in enumerate(e):
            if power == 1:
                mono = mono * centered[:, j]
            elif power > 1:
                mono = mono * centered[:, j] ** power
        out += mono
    return out


def form_values(w: PolyForm, centered: np.ndarray) -> np.ndarray:
    """Component values (nq, #indices) in lexicographic index order."""
    idx = multi_indices(w.k, w.n)
    out = np.zeros((centered.shape[0], len(idx)))
    for pos, alpha in enumerate(idx):
        p = w.comps.get(alpha)
        if p is not None:
            out[:, pos] = poly_values(p, centered)
    return out


def dof_values(mu, space: ShapeSpace, dofs: DofBasis, quad_order: int = 6):
    """Evaluate all DOF functionals on ``mu``.

    PolyForm input takes the exact rational path and returns Fractions;
    a FormCallback is integrated with the simplex quadrature and returns
    a float array.  The callback must carry value, d and delta.
    """
    simplex = space.simplex
    if isinstance(mu, PolyForm):
        vals = [_eta_functional(mu, dofs, i, simplex) for i in range(len(dofs.eta_basis))]
        vals += [_tau_functional(mu, dofs, i, simplex) for i in range(len(dofs.tau_basis))]
        return vals
    if not isinstance(mu, FormCallback):
        raise TypeError("mu must be a PolyForm or a FormCallback")
    if mu.d is None or mu.delta is None:
        raise ValueError("callback interpolation needs d and delta data alongside values")
    pts, weights = rule_points(simplex, quad_order)
    centered = pts - np.array([float(x) for x in simplex.barycenter])
    val = np.asarray(mu.value(pts), dtype=float)
    dval = np.asarray(mu.d(pts), dtype=float)
    gval = np.asarray(mu.delta(pts), dtype=float)
    out = np.zeros(dofs.count)
    for i, (eta, geta) in enumerate(zip(dofs.eta_basis, dofs.eta_green)):
        ev = form_values(eta, centered)
        gv = form_values(geta, centered)
        out[i] = np.einsum("q,qc,qc->", weights, dval, ev) - np.einsum(
            "q,qc,qc->", weights, val, gv
        )
    off = len(dofs.eta_basis)
    for i, (tau, dtau) in enumerate(zip(dofs.tau_basis, dofs.tau_d)):
        tv = form_values(tau, centered)
        dv = form_values(dtau, centered)
        out[off + i] = np.einsum("q,qc,qc->", weights, gval, tv) - np.einsum(
            "q,qc,qc->", weights, val, dv
        )
    return out


def _fourstep_blocks(space: ShapeSpace, dofs: DofBasis, matrix: DofMatrix):
    """Index bookkeeping shared by the exact and float four-step solves."""
    eta0 = list(dofs.eta_blocks[P0])
    etak = list(dofs.eta_blocks[STARKAPPA])
    off = len(dofs.eta_basis)
    tau0 = [off + i for i in dofs.tau_blocks[P0]]
    tauk = [off + i for i in dofs.tau_blocks[KAPPA]]
    cols = {name: list(space.blocks[name]) for name in (P0, KAPPA, STARKAPPA, H2D)}
    return eta0, etak, tau0, tauk, cols


def interpolate_coeffs(mu, space: ShapeSpace, dofs: DofBasis, method: str = DIRECT, quad_order: int = 6):
    """Coefficients (shape-basis order) of the local interpolant of ``mu``.

    DIRECT solves the full DofMatrix system.  FOURSTEP solves the four
    decoupled blocks in sequence (delta part, constant part, d part,
    quadratic d part); the two agree to rounding and exactly on the
    rational path.
    """
    if method not in (DIRECT, FOURSTEP):
        raise ValueError(f"unknown interpolation method {method!r}")
    matrix = build_dof_matrix(space, dofs)
    vals = dof_values(mu, space, dofs, quad_order=quad_order)
    exact = isinstance(mu, PolyForm)

    if method == DIRECT:
        if exact:
            return matrix.solve_exact(list(vals))
        return matrix.solve_float(vals)

    eta0, etak, tau0, tauk, cols = _fourstep_blocks(space, dofs, matrix)
    dim = space.dim
    if exact:
        coeffs: list[Fraction] = [Fraction(0)] * dim
        M = matrix.exact

        def solve_block(rows, colids, rhs):
            sub = [[M[r][c] for c in colids] for r in rows]
            sol = solve_rational(sub, [[v] for v in rhs])
            return [row[0] for row in sol]

        # step 1: delta block from constant tau rows
        rhs1 = [vals[r] for r in tau0]
        for c, v in zip(cols[STARKAPPA], solve_block(tau0, cols[STARKAPPA], rhs1)):
            coeffs[c] = v
        # step 2: constant block from koszul tau rows
        rhs2 = [vals[r] for r in tauk]
        for c, v in zip(cols[P0], solve_block(tauk, cols[P0], rhs2)):
            coeffs[c] = v
        # step 3: koszul block from constant eta rows
        rhs3 = [vals[r] for r in eta0]
        for c, v in zip(cols[KAPPA], solve_block(eta0, cols[KAPPA], rhs3)):
            coeffs[c] = v
        # step 4: quadratic block from koszul eta rows, correcting for the
        # constant part seen through <mu0, delta eta>
        mu0 = PolyForm.zero(space.n, space.k)
        for c in cols[P0]:
            if coeffs[c] != 0:
                mu0 = mu0 + coeffs[c] * space.basis[c]
        rhs4 = []
        for r, i in zip(etak, dofs.eta_blocks[STARKAPPA]):
            corr = l2_inner(mu0, dofs.eta_green[i], space.simplex)
            rhs4.append(vals[r] + corr)
        for c, v in zip(cols[H2D], solve_block(etak, cols[H2D], rhs4)):
            coeffs[c] = v
        return coeffs

    M = matrix.as_float
    coeffs_f = np.zeros(dim)
    vals = np.asarray(vals, dtype=float)

    def solve_block_f(rows, colids, rhs):
        sub = M[np.ix_(rows, colids)]
        return np.linalg.solve(sub, rhs)

    coeffs_f[cols[STARKAPPA]] = solve_block_f(tau0, cols[STARKAPPA], vals[tau0])
    coeffs_f[cols[P0]] = solve_block_f(tauk, cols[P0], vals[tauk])
    coeffs_f[cols[KAPPA]] = solve_block_f(eta0, cols[KAPPA], vals[eta0])
    # only the constant block contributes to the step-4 correction term
    mu0 = PolyForm.zero(space.n, space.k)
    for c in cols[P0]:
        if coeffs_f[c] != 0.0:
            mu0 = mu0 + Fraction(float(coeffs_f[c])) * space.basis[c]
    rhs4 = []
    for r, i in zip(etak, dofs.eta_blocks[STARKAPPA]):
        corr = float(l2_inner(mu0, dofs.eta_green[i], space.simplex))
        rhs4.append(vals[r] + corr)
    coeffs_f[cols[H2D]] = solve_block_f(etak, cols[H2D], np.array(rhs4))
    return coeffs_f


def interpolate(mu, space: ShapeSpace, dofs: DofBasis, method: str = DIRECT, quad_order: int = 6) -> PolyForm:
    """The local interpolant as a PolyForm (exact for PolyForm input)."""
    coeffs = interpolate_coeffs(mu, space, dofs, method=method, quad_order=quad_order)
    if isinstance(coeffs, np.ndarray):
        coeffs = [Fraction(float(c)) for c in coeffs]
    return space.combine(coeffs)
