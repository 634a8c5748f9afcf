"""Bifurcation-point detection and branching analysis.

A value lambda0 is a bifurcation candidate when the criticality function

    g(lambda) = a(lambda) * chi_minus(eps(lambda)) + mu0

crosses zero, mu0 being a Dirichlet eigenvalue of -Delta on the domain.
`scan_roots` locates the sign changes of g on a grid, sharpens each root by
bisection, certifies strict monotonicity of g through the root with a
5-point stencil, and attaches the kernel data (eigenfunctions of the mu0
cluster, the eigenvector pair of the 2x2 linearization) needed by the
branch tracer.  Roots where the kernel multiplicity is odd are certified
bifurcation points; even multiplicities stay candidates unless the family
declares a gradient-type remainder.

`identity22_check` verifies the defining property of the linearized branch
operator B1 = -Delta_h + a(lambda)*Xi on the bifurcation subspace: its
Gram matrix against the kernel vectors c x e_i equals
g(lambda) |c|^2 times the identity.

`branching_estimate` measures the leading power of the nonlinear remainder
along the kernel: the remainder of the field equations at trivial + tau *
(c x e_i), projected back onto the adjoint kernel directions c* x e_j,
must scale like tau^l with l the family's nonlinear order (2 for generic
smooth profiles).  The fitted order feeds the branching classification
(l = 2 transcritical-type, l = 3 pitchfork-type).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid, linearize, pde
from .ansatz import AnsatzFamily, verify_flatness
from .errors import DomainError, OrderAmbiguityError
from .grid import DomainSpec
from .omega import DirectionCurve
from .spectral import EigenPair, cluster_of

__all__ = [
    "criticality",
    "BifurcationPoint",
    "scan_roots",
    "Identity22Report",
    "identity22_check",
    "BranchingEstimate",
    "branching_estimate",
]


def _chi_minus(curve: DirectionCurve, fam: AnsatzFamily, lam: float
               ) -> float:
    data = linearize.assemble(curve.eval_direction(lam),
                              curve.species_at(lam, fam), fam,
                              curve.c_light)
    if not data.real_spectrum:
        raise DomainError(
            f"complex linearization spectrum at lambda = {lam:g}; "
            "criticality undefined")
    return data.chi_minus


def criticality(curve: DirectionCurve, fam: AnsatzFamily, mu0: float,
                lam: float, chi_fn=None) -> float:
    """g(lambda) = a(lambda) * chi_minus(lambda) + mu0.

    ``chi_fn`` substitutes a synthetic chi_minus(lambda) (used by algebraic
    oracles); by default chi_minus comes from the assembled linearization.
    """
    chi = chi_fn(lam) if chi_fn is not None else _chi_minus(curve, fam, lam)
    return curve.a_of(lam) * chi + mu0


@dataclass(frozen=True, eq=False)
class BifurcationPoint:
    """A sharpened root of the criticality function with its kernel data."""

    lambda0: float
    mu0: float
    g_residual: float
    monotone: bool
    direction: int
    multiplicity: int | None
    odd_multiplicity: bool | None
    certified: bool
    kernel: tuple[np.ndarray, ...]
    c_vec: np.ndarray | None
    c_star: np.ndarray | None
    chi_minus: float | None
    conditions: tuple[bool, bool] | None


def _bisect_root(g, lo: float, hi: float, g_lo: float, tol: float
                 ) -> float:
    """Bisection on a bracketing interval down to width ``tol``."""
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if (g_lo < 0) == (g_mid < 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _monotone_through(g, lam0: float, tol: float) -> tuple[bool, int]:
    """Strict monotonicity of g across a 5-point stencil of half-width
    1e3 * tol centered at the root."""
    half = 1e3 * tol
    samples = [g(lam0 + j * half / 2.0) for j in (-2, -1, 0, 1, 2)]
    diffs = np.diff(samples)
    if np.all(diffs > 0):
        return True, +1
    if np.all(diffs < 0):
        return True, -1
    return False, 0


def scan_roots(curve: DirectionCurve, fam: AnsatzFamily, mu0: float,
               lam_grid, tol_root: float = 1e-10, chi_fn=None,
               spectrum: list[EigenPair] | None = None,
               spectrum_tol: float | None = None
               ) -> list[BifurcationPoint]:
    """Locate and certify the roots of g on a lambda grid.

    When a Dirichlet ``spectrum`` is supplied, the kernel eigenfunctions
    and the eigenvector pair of the linearization are attached to each
    root and the multiplicity parity decides certification (odd, or any
    parity for gradient-type families).  With a synthetic ``chi_fn`` the
    spectral attachments that require the real linearization are skipped
    unless the curve supports them.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if lam_grid.ndim != 1 or lam_grid.size < 2:
        raise DomainError("lambda grid must hold at least two points")
    if np.any(np.diff(lam_grid) <= 0):
        raise DomainError("lambda grid must increase strictly")

    g = lambda lam: criticality(curve, fam, mu0, lam, chi_fn=chi_fn)
    values = [g(lam) for lam in lam_grid]

    points = []
    for i in range(len(lam_grid) - 1):
        g_lo, g_hi = values[i], values[i + 1]
        if g_lo == 0.0:
            lam0 = float(lam_grid[i])
        elif (g_lo < 0) != (g_hi < 0):
            lam0 = _bisect_root(g, float(lam_grid[i]),
                                float(lam_grid[i + 1]), g_lo, tol_root)
        else:
            continue
        monotone, direction = _monotone_through(g, lam0, tol_root)

        kernel: tuple[np.ndarray, ...] = ()
        mult = odd = None
        c_vec = c_star = chi = conditions = None
        if spectrum is not None:
            tol = spectrum_tol
            if tol is None:
                tol = 1e-6 * max(1.0, abs(mu0))
            cluster = cluster_of(spectrum, mu0, tol)
            kernel = tuple(p.function for p in cluster)
            mult = len(cluster)
            odd = mult % 2 == 1
        if chi_fn is None:
            data = linearize.assemble(curve.eval_direction(lam0),
                                      curve.species_at(lam0, fam), fam,
                                      curve.c_light)
            chi = data.chi_minus
            c_vec, c_star = linearize.eigenvectors(data)
            conditions = linearize.check_conditions(data)

        certified = bool(monotone) and (
            mult is None or odd or fam.potential)
        points.append(BifurcationPoint(
            lambda0=lam0, mu0=float(mu0), g_residual=abs(g(lam0)),
            monotone=monotone, direction=direction, multiplicity=mult,
            odd_multiplicity=odd, certified=certified, kernel=kernel,
            c_vec=c_vec, c_star=c_star, chi_minus=chi,
            conditions=conditions))
    return points


# ---------------------------------------------------------------------------
# bifurcation-subspace identity


@dataclass(frozen=True, eq=False)
class Identity22Report:
    """Gram matrix of B1 against the kernel vectors c x e_i, and its
    distance from g(lambda) |c|^2 times the identity."""

    gram: np.ndarray
    expected_diag: float
    diag_error: float
    offdiag_max: float


def identity22_check(point: BifurcationPoint, curve: DirectionCurve,
                     fam: AnsatzFamily, dom: DomainSpec, lam: float
                     ) -> Identity22Report:
    """Evaluate <B1 (c x e_i), c x e_j> on the kernel at a given lambda.

    B1 = -Delta_h + a(lambda) * Xi(lambda) acts on deviation pairs; on the
    kernel vectors the Gram matrix must equal g(lambda) |c|^2 delta_ij with
    g built from the same mu0 the point was found with.
    """
    if not point.kernel:
        raise DomainError("bifurcation point carries no kernel basis")
    if point.c_vec is None:
        raise DomainError("bifurcation point carries no eigenvector data")
    data = linearize.assemble(curve.eval_direction(lam),
                              curve.species_at(lam, fam), fam,
                              curve.c_light)
    a = curve.a_of(lam)
    c = np.asarray(point.c_vec, dtype=float)
    xi_c = data.matrix @ c
    n = len(point.kernel)
    gram = np.empty((n, n))
    for i, e_i in enumerate(point.kernel):
        lap_i = grid.laplacian_apply(dom, e_i)
        # B1 (c x e_i) = (-lap e_i) c + a e_i (Xi c), interior nodes
        b1 = np.stack([-lap_i * c[0] + a * e_i[1:-1, 1:-1] * xi_c[0],
                       -lap_i * c[1] + a * e_i[1:-1, 1:-1] * xi_c[1]])
        for j, e_j in enumerate(point.kernel):
            ej_int = e_j[1:-1, 1:-1]
            gram[i, j] = dom.h ** 2 * float(
                np.sum(b1[0] * c[0] * ej_int + b1[1] * c[1] * ej_int))

    g_val = a * data.chi_minus + point.mu0
    expected = g_val * float(c @ c)
    diag_err = float(np.max(np.abs(np.diag(gram) - expected)))
    off = gram - np.diag(np.diag(gram))
    return Identity22Report(gram=gram, expected_diag=expected,
                            diag_error=diag_err,
                            offdiag_max=float(np.max(np.abs(off)))
                            if n > 1 else 0.0)


# ---------------------------------------------------------------------------
# branching order


@dataclass(frozen=True, eq=False)
class BranchingEstimate:
    """Fitted leading power of the nonlinear remainder on the kernel."""

    order: int
    slope: float
    coefficients: np.ndarray
    diag_factor: float
    projections: dict
    taus: tuple[float, ...]
    flatness_worst: float
    identity: Identity22Report


def branching_estimate(point: BifurcationPoint, curve: DirectionCurve,
                       fam: AnsatzFamily, dom: DomainSpec, taus,
                       slope_window: float = 0.2) -> BranchingEstimate:
    """Fit the power law of the kernel-projected nonlinear remainder.

    For each amplitude tau the remainder R(tau) = (Delta_h u - a Xi u) -
    [F(trivial + u) - F(trivial)] with u = tau * c x e_i (the part of the
    equations that survives beyond the linearization, with the Laplacian
    contributions cancelling exactly) is projected onto c* x e_j; the
    log-log slope of |projection| versus tau is fitted per kernel pair and
    the median is rounded to the reported order (OrderAmbiguityError when
    it does not settle near an integer within ``slope_window``).  Families
    declaring order > 2 get their flatness cross-checked.
    """
    taus = sorted(float(t) for t in taus)
    if len(taus) < 3:
        raise DomainError("at least three amplitudes needed for the fit")
    if not point.kernel:
        raise DomainError("bifurcation point carries no kernel basis")
    if point.c_vec is None or point.c_star is None:
        raise DomainError("bifurcation point carries no eigenvector data")

    lam0 = point.lambda0
    data = linearize.assemble(curve.eval_direction(lam0),
                              curve.species_at(lam0, fam), fam,
                              curve.c_light)
    a = curve.a_of(lam0)
    c = np.asarray(point.c_vec, dtype=float)
    c_star = np.asarray(point.c_star, dtype=float)
    xi_mat = data.matrix

    base = pde.trivial_state(dom, curve, lam0)
    r_base = pde.residual(base, curve, fam, lam0)

    n = len(point.kernel)
    proj = {(i, j): [] for i in range(n) for j in range(n)}
    for tau in taus:
        for i, e_i in enumerate(point.kernel):
            u1 = tau * c[0] * e_i
            u2 = tau * c[1] * e_i
            state = pde.make_state(dom, base.phi + u1, base.psi + u2,
                                   base.phi0, base.psi0)
            r_state = pde.residual(state, curve, fam, lam0)
            # linear action of -B1 on u equals Delta u - a Xi u
            lap1 = grid.laplacian_apply(dom, u1)
            lap2 = grid.laplacian_apply(dom, u2)
            u1_i = u1[1:-1, 1:-1]
            u2_i = u2[1:-1, 1:-1]
            lin1 = lap1 - a * (xi_mat[0, 0] * u1_i + xi_mat[0, 1] * u2_i)
            lin2 = lap2 - a * (xi_mat[1, 0] * u1_i + xi_mat[1, 1] * u2_i)
            rem1 = lin1 - (r_state[0] - r_base[0])
            rem2 = lin2 - (r_state[1] - r_base[1])
            for j, e_j in enumerate(point.kernel):
                ej_int = e_j[1:-1, 1:-1]
                val = dom.h ** 2 * float(
                    np.sum(rem1 * c_star[0] * ej_int
                           + rem2 * c_star[1] * ej_int))
                proj[(i, j)].append(val)

    scale = max(max(abs(v) for v in series) for series in proj.values())
    floor = 1e-13 * max(scale, 1.0)
    slopes = []
    for series in proj.values():
        mags = np.abs(series)
        if np.min(mags) <= floor:
            continue
        fit = np.polyfit(np.log(taus), np.log(mags), 1)
        slopes.append(float(fit[0]))
    if not slopes:
        raise OrderAmbiguityError(
            "all kernel projections of the remainder sit at round-off; "
            "no order can be fitted")
    slope = float(np.median(slopes))
    order = int(round(slope))
    if abs(slope - order) > slope_window:
        raise OrderAmbiguityError(
            "remainder projections do not follow an integer power law",
            slope)

    flatness = 0.0
    if fam.order > 2:
        species = curve.species_at(lam0, fam)
        p0, s0 = curve.phi0(lam0), curve.psi0(lam0)
        for spc in species:
            flatness = max(flatness, verify_flatness(
                spc, fam, spc.l * p0, spc.k * s0,
                direction=(c[0] * spc.l, c[1] * spc.k),
                duals=(c_star[0], c_star[1])))

    coeff = np.zeros((n, n))
    for (i, j), series in proj.items():
        vals = [p / t ** order for p, t in zip(series, taus)]
        coeff[i, j] = float(np.median(vals))

    identity = identity22_check(point, curve, fam, dom, lam0)
    return BranchingEstimate(order=order, slope=slope, coefficients=coeff,
                             diag_factor=float(c @ c),
                             projections={k: tuple(v)
                                          for k, v in proj.items()},
                             taus=tuple(taus), flatness_worst=flatness,
                             identity=identity)
