"""Discrete semilinear field equations and their solvers.

The reduced field equations on the rectangle are

    Delta phi = a(lambda) * mu * sum_s q_s A_s(l_s phi, k_s psi),
    Delta psi = a(lambda) * nu * sum_s q_s M_s(l_s phi, k_s psi),

with Dirichlet data phi = phi0(lambda), psi = psi0(lambda) on the boundary
and M_s = (j_s, d_1) the axial current moment.  Discretized with the
5-point Laplacian, the residual is evaluated on interior nodes only.  An
optional interior source pair turns the solver into a manufactured-solution
harness.

`newton_solve` runs a damped-free Newton iteration with the analytic
Jacobian (moment derivatives evaluated at the current state, not frozen at
the background) and a smallest-singular-value estimate of the factored
Jacobian: near a bifurcation point the unbordered matrix genuinely
degenerates and the solver reports ConditioningError instead of quietly
stalling.  `continue_branch` traces nontrivial solutions through a
bifurcation point with an amplitude-pinned bordered system: the amplitude
functional <u, chat x e1>_h is fixed to xi while lambda joins the unknowns,
which regularizes the system exactly where the plain Jacobian fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import grid
from .ansatz import AnsatzFamily, moment_axial, moment_axial_derivatives, \
    moment_current, moment_density, moment_derivatives
from .errors import ConditioningError, DivergenceError, DomainError
from .grid import DomainSpec
from .omega import DirectionCurve

__all__ = [
    "GridField",
    "make_state",
    "trivial_state",
    "SolverConfig",
    "ContinuationConfig",
    "residual",
    "jacobian",
    "newton_solve",
    "TrivialReport",
    "verify_trivial",
    "BranchPoint",
    "BranchResult",
    "continue_branch",
]


@dataclass(frozen=True, eq=False)
class GridField:
    """Pair of grid potentials with constant Dirichlet boundary data."""

    dom: DomainSpec
    phi: np.ndarray
    psi: np.ndarray
    phi0: float
    psi0: float

    def __post_init__(self):
        for arr, name in ((self.phi, "phi"), (self.psi, "psi")):
            if arr.shape != self.dom.shape:
                raise DomainError(f"{name} shape mismatch with the domain")
        for arr, val, name in ((self.phi, self.phi0, "phi"),
                               (self.psi, self.psi0, "psi")):
            edges = (arr[0, :], arr[-1, :], arr[:, 0], arr[:, -1])
            if any(np.any(e != val) for e in edges):
                raise DomainError(
                    f"{name} boundary values must equal the Dirichlet "
                    "constant exactly")

    @property
    def u1(self) -> np.ndarray:
        """Deviation of phi from its boundary constant (zero trace)."""
        return self.phi - self.phi0

    @property
    def u2(self) -> np.ndarray:
        return self.psi - self.psi0

    def deviation_norm(self) -> float:
        """Discrete L2 norm of the deviation pair."""
        return float(np.sqrt(grid.inner(self.dom, self.u1, self.u1)
                             + grid.inner(self.dom, self.u2, self.u2)))


def make_state(dom: DomainSpec, phi: np.ndarray, psi: np.ndarray,
               phi0: float, psi0: float) -> GridField:
    """Build a state, stamping the boundary constants exactly."""
    phi = np.array(phi, dtype=float)
    psi = np.array(psi, dtype=float)
    for arr, val in ((phi, phi0), (psi, psi0)):
        arr[0, :] = arr[-1, :] = val
        arr[:, 0] = arr[:, -1] = val
    return GridField(dom=dom, phi=phi, psi=psi, phi0=phi0, psi0=psi0)


def trivial_state(dom: DomainSpec, curve: DirectionCurve, lam: float
                  ) -> GridField:
    """The spatially constant state at the boundary data of lambda."""
    p0, s0 = curve.phi0(lam), curve.psi0(lam)
    return GridField(dom=dom, phi=np.full(dom.shape, p0),
                     psi=np.full(dom.shape, s0), phi0=p0, psi0=s0)


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_iter: int = 25
    cond_check: bool = True
    cond_rel: float = 1e-13


@dataclass(frozen=True)
class ContinuationConfig:
    xi_step: float = 0.02
    max_points: int = 8
    newton_tol: float = 1e-10
    max_iter: int = 30


def _coefficients(curve: DirectionCurve, lam: float):
    ref = curve.species[0]
    alpha1 = curve.alpha_of(lam, 0)
    mu = 8.0 * np.pi * alpha1 * ref.q / ref.m
    eta = 4.0 * np.pi * abs(ref.q) / ref.m
    nu = eta / curve.c_light ** 2
    return curve.a_of(lam), mu, nu


def residual(state: GridField, curve: DirectionCurve, fam: AnsatzFamily,
             lam: float, source=None) -> np.ndarray:
    """Interior residual, shape (2, nx-1, ny-1).

    ``source`` is an optional pair of interior arrays subtracted from the
    two equations (manufactured-solution forcing).
    """
    dom = state.dom
    species = curve.species_at(lam, fam)
    a, mu, nu = _coefficients(curve, lam)
    d1_vec = species[0].d

    phi_i = state.phi[1:-1, 1:-1]
    psi_i = state.psi[1:-1, 1:-1]
    s1 = np.zeros(dom.interior_shape)
    s2 = np.zeros(dom.interior_shape)
    for spc in species:
        x = spc.l * phi_i
        y = spc.k * psi_i
        s1 += spc.q * np.asarray(moment_density(spc, fam, x, y))
        s2 += spc.q * np.asarray(moment_axial(spc, fam, x, y, d1_vec))

    r1 = grid.laplacian_apply(dom, state.phi) - a * mu * s1
    r2 = grid.laplacian_apply(dom, state.psi) - a * nu * s2
    if source is not None:
        r1 = r1 - source[0]
        r2 = r2 - source[1]
    out = np.stack([r1, r2])
    if not np.all(np.isfinite(out)):
        raise DivergenceError("residual is not finite (state left the "
                              "family's evaluation range)")
    return out


def jacobian(state: GridField, curve: DirectionCurve, fam: AnsatzFamily,
             lam: float) -> sp.csc_matrix:
    """Analytic Jacobian of the interior residual at the current state."""
    dom = state.dom
    species = curve.species_at(lam, fam)
    a, mu, nu = _coefficients(curve, lam)
    d1_vec = species[0].d

    phi_i = state.phi[1:-1, 1:-1]
    psi_i = state.psi[1:-1, 1:-1]
    d11 = np.zeros(dom.interior_shape)
    d12 = np.zeros(dom.interior_shape)
    d21 = np.zeros(dom.interior_shape)
    d22 = np.zeros(dom.interior_shape)
    for spc in species:
        x = spc.l * phi_i
        y = spc.k * psi_i
        dax, day = moment_derivatives(spc, fam, x, y)
        dmx, dmy = moment_axial_derivatives(spc, fam, x, y, d1_vec)
        d11 += spc.q * spc.l * np.asarray(dax)
        d12 += spc.q * spc.k * np.asarray(day)
        d21 += spc.q * spc.l * np.asarray(dmx)
        d22 += spc.q * spc.k * np.asarray(dmy)

    lap = -grid.neg_laplacian(dom)
    blk11 = lap - sp.diags(a * mu * d11.ravel())
    blk12 = sp.diags(-a * mu * d12.ravel())
    blk21 = sp.diags(-a * nu * d21.ravel())
    blk22 = lap - sp.diags(a * nu * d22.ravel())
    return sp.bmat([[blk11, blk12], [blk21, blk22]], format="csc")


def _sigma_min_estimate(lu, n: int) -> float:
    """Smallest singular value of the factored matrix by power iteration
    on (J^T J)^{-1}, deterministic start."""
    rng = np.random.default_rng(7)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    growth = 0.0
    for _ in range(8):
        y = lu.solve(x, trans="N")
        z = lu.solve(y, trans="T")
        nz = np.linalg.norm(z)
        if not np.isfinite(nz) or nz == 0.0:
            return 0.0
        growth = nz
        x = z / nz
    return 1.0 / np.sqrt(growth)


def _check_conditioning(J: sp.csc_matrix, lu, cfg: SolverConfig):
    sigma = _sigma_min_estimate(lu, J.shape[0])
    scale = float(np.max(np.abs(J).sum(axis=0)))
    if sigma < cfg.cond_rel * max(scale, 1.0):
        raise ConditioningError(
            "Newton matrix is numerically singular (kernel opening at a "
            "bifurcation point?)", sigma)


def newton_solve(initial: GridField, curve: DirectionCurve,
                 fam: AnsatzFamily, lam: float,
                 cfg: SolverConfig = SolverConfig(), source=None
                 ) -> tuple[GridField, dict]:
    """Newton iteration at fixed lambda.  Returns the converged state and
    an info dict with the iteration count and residual history."""
    dom = initial.dom
    state = initial
    history = []
    for it in range(cfg.max_iter + 1):
        r = residual(state, curve, fam, lam, source=source)
        rnorm = grid.norm_sup(r)
        history.append(rnorm)
        if rnorm <= cfg.newton_tol:
            return state, {"iterations": it, "residual": rnorm,
                           "history": history}
        if it == cfg.max_iter:
            break
        J = jacobian(state, curve, fam, lam)
        try:
            lu = splu(J)
        except RuntimeError as exc:
            raise ConditioningError(
                f"Newton matrix factorization failed: {exc}") from exc
        if cfg.cond_check:
            _check_conditioning(J, lu, cfg)
        delta = lu.solve(-r.reshape(2, -1).ravel())
        if not np.all(np.isfinite(delta)):
            raise DivergenceError("Newton step is not finite", history)
        n = dom.n_interior
        phi = state.phi.copy()
        psi = state.psi.copy()
        phi[1:-1, 1:-1] += delta[:n].reshape(dom.interior_shape)
        psi[1:-1, 1:-1] += delta[n:].reshape(dom.interior_shape)
        state = GridField(dom=dom, phi=phi, psi=psi,
                          phi0=state.phi0, psi0=state.psi0)
    raise DivergenceError(
        f"Newton did not reach {cfg.newton_tol:g} in {cfg.max_iter} "
        "iterations", history)


# ---------------------------------------------------------------------------
# trivial-branch verification


@dataclass(frozen=True)
class TrivialReport:
    """Residual and source-density audit of the constant state along a
    lambda grid."""

    rows: tuple[tuple[float, float, float, float], ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(max(r[1:]) <= self.tol for r in self.rows)

    def worst(self) -> float:
        return max(max(r[1:]) for r in self.rows)


def verify_trivial(curve: DirectionCurve, fam: AnsatzFamily,
                   dom: DomainSpec, lam_grid, tol: float = 1e-10
                   ) -> TrivialReport:
    """Check that the constant state solves the discrete equations along
    the grid and that its charge and current densities vanish."""
    rows = []
    for lam in np.asarray(lam_grid, dtype=float):
        lam = float(lam)
        state = trivial_state(dom, curve, lam)
        r = residual(state, curve, fam, lam)
        species = curve.species_at(lam, fam)
        a = curve.a_of(lam)
        rho = 0.0
        jvec = np.zeros(3)
        for spc in species:
            x0 = spc.l * state.phi0
            y0 = spc.k * state.psi0
            rho += spc.q * float(moment_density(spc, fam, x0, y0))
            jvec = jvec + spc.q * np.asarray(
                moment_current(spc, fam, x0, y0), dtype=float)
        rows.append((lam, grid.norm_sup(r), abs(a * rho),
                     float(a * np.linalg.norm(jvec))))
    return TrivialReport(rows=tuple(rows), tol=tol)


# ---------------------------------------------------------------------------
# branch continuation


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """One converged nontrivial solution on a bifurcating branch."""

    lam: float
    xi: float
    state: GridField
    residual_sup: float
    iterations: int
    u_norm: float


@dataclass(frozen=True)
class BranchResult:
    side: int
    points: tuple[BranchPoint, ...] = field(default_factory=tuple)
    status: str = "ok"


def _bordered_solve(J, f_lam, pin_row, r, pin_res):
    """One bordered Newton step: [[J, f_lam], [pin, 0]] delta = -(r, pin)."""
    n = J.shape[0]
    col = sp.csc_matrix(f_lam.reshape(n, 1))
    row = sp.csc_matrix(np.append(pin_row, 0.0).reshape(1, n + 1))
    big = sp.vstack([sp.hstack([J, col]), row], format="csc")
    rhs = -np.append(r, pin_res)
    try:
        lu = splu(big)
    except RuntimeError as exc:
        raise ConditioningError(
            f"bordered matrix factorization failed: {exc}") from exc
    return lu.solve(rhs)


def continue_branch(point, curve: DirectionCurve, fam: AnsatzFamily,
                    dom: DomainSpec, cfg: ContinuationConfig = ContinuationConfig(),
                    side: int = +1) -> BranchResult:
    """Trace the nontrivial branch through a bifurcation point.

    ``point`` must provide lambda0, the kernel eigenfunction list and the
    eigenvector c_vec (duck-typed; see the bifurcation module).  The
    amplitude functional <u, chat x e1>_h is pinned to xi = side*j*step
    while lambda is free, so the first prediction u = xi * chat x e1 starts
    tangent to the kernel and later points are secant-extrapolated.  Every
    accepted point is checked to be genuinely nontrivial
    (||u|| >= 0.5*|xi|).
    """
    if side not in (-1, +1):
        raise DomainError("side must be +1 or -1")
    if not point.kernel:
        raise DomainError("bifurcation point carries no kernel basis")
    e1 = point.kernel[0]
    if e1.shape != dom.shape:
        raise DomainError("kernel eigenfunction does not match the domain")
    c = np.asarray(point.c_vec, dtype=float)
    chat = c / np.linalg.norm(c)

    e1_int = e1[1:-1, 1:-1].ravel()
    tangent = np.concatenate([chat[0] * e1_int, chat[1] * e1_int])
    pin_row = dom.h ** 2 * tangent  # pin_row @ u_vec = <u, chat x e1>_h

    n = dom.n_interior
    lam0 = float(point.lambda0)

    def state_of(u_vec: np.ndarray, lam: float) -> GridField:
        phi = grid.unpack(dom, u_vec[:n]) + curve.phi0(lam)
        psi = grid.unpack(dom, u_vec[n:]) + curve.psi0(lam)
        return make_state(dom, phi, psi, curve.phi0(lam), curve.psi0(lam))

    def res_of(u_vec: np.ndarray, lam: float) -> np.ndarray:
        return residual(state_of(u_vec, lam), curve, fam,
                        lam).reshape(2, -1).ravel()

    points: list[BranchPoint] = []
    status = "ok"
    prev: list[tuple[np.ndarray, float]] = []

    for j in range(1, cfg.max_points + 1):
        xi = side * j * cfg.xi_step
        if len(prev) >= 2:
            (u_a, lam_a), (u_b, lam_b) = prev[-2], prev[-1]
            u_vec = 2.0 * u_b - u_a
            lam = 2.0 * lam_b - lam_a
        elif prev:
            u_b, lam_b = prev[-1]
            u_vec = u_b + side * cfg.xi_step * tangent
            lam = lam_b
        else:
            u_vec = xi * tangent
            lam = lam0
        if abs(lam) >= curve.half_width:
            status = "domain_truncated"
            break

        converged = False
        history = []
        for it in range(cfg.max_iter):
            r = res_of(u_vec, lam)
            pin_res = float(pin_row @ u_vec) - xi
            rnorm = max(float(np.max(np.abs(r))), abs(pin_res))
            history.append(rnorm)
            if rnorm <= cfg.newton_tol:
                converged = True
                iterations = it
                break
            J = jacobian(state_of(u_vec, lam), curve, fam, lam)
            dl = 1e-6 * max(1.0, abs(lam))
            f_lam = (res_of(u_vec, lam + dl)
                     - res_of(u_vec, lam - dl)) / (2 * dl)
            delta = _bordered_solve(J, f_lam, pin_row, r, pin_res)
            if not np.all(np.isfinite(delta)):
                raise DivergenceError("bordered step is not finite",
                                      history)
            u_vec = u_vec + delta[:-1]
            lam = lam + float(delta[-1])
            if abs(lam) >= curve.half_width:
                status = "domain_truncated"
                break
        if status == "domain_truncated":
            break
        if not converged:
            raise DivergenceError(
                f"branch point at xi = {xi:g} did not converge",
                history)

        state = state_of(u_vec, lam)
        u_norm = state.deviation_norm()
        if u_norm < 0.5 * abs(xi):
            raise DivergenceError(
                f"branch point at xi = {xi:g} collapsed onto the trivial "
                f"solution (||u|| = {u_norm:.3e})")
        r_final = grid.norm_sup(residual(state, curve, fam, lam))
        points.append(BranchPoint(lam=lam, xi=xi, state=state,
                                  residual_sup=r_final,
                                  iterations=iterations, u_norm=u_norm))
        prev.append((u_vec, lam))

    return BranchResult(side=side, points=tuple(points), status=status)
