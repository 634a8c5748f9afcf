"""Parameter curves and the trivial-solution set.

A bifurcation problem is posed along a one-parameter family of species
parameter sets.  The curve eps(lambda) collects, for every species, the
scaled boundary potentials (l_i phi0, k_i psi0), the temperature-like
parameter alpha_i and the signed drift magnitude d_i (drifts point along
the global z axis in the planar reduction), so eps lives in R^{4N}.  All
lambda-dependence enters through polynomials of degree at most six:
the amplitude a(lambda), the boundary data u01/u02 (which set phi0/psi0
through the reference species), the reference drift d1 and the per-species
alpha_i.  Coupling weights l_i, k_i and the derived drifts follow from the
compatibility relations of :mod:`.ansatz`.

The trivial (spatially constant) solution solves the field equations
exactly iff the moment sums

    S1 = sum_k q_k A_k,        S2 = sum_k q_k (j_k, d_1)

vanish at the boundary constants; membership must hold along the whole
curve for the bifurcation analysis to apply.  `project_to_omega` restores
membership by adjusting two additive profile constants with a 2x2 Newton
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .ansatz import (AnsatzFamily, SpeciesParams, SpeciesSpec, build_species,
                     moment_axial, moment_density)
from .errors import (ConditioningError, DivergenceError, DomainError,
                     VmbifError)

__all__ = [
    "DirectionCurve",
    "OmegaResidual",
    "eval_direction",
    "omega_residual",
    "ConditionCReport",
    "check_condition_C",
    "project_to_omega",
    "project_curve",
]

_Z_AXIS = np.array([0.0, 0.0, 1.0])
MAX_CURVE_DEGREE = 6


def _coeffs(c) -> tuple[float, ...]:
    out = tuple(float(v) for v in np.atleast_1d(np.asarray(c, dtype=float)))
    if len(out) > MAX_CURVE_DEGREE + 1:
        raise DomainError(
            f"curve polynomials are limited to degree {MAX_CURVE_DEGREE}")
    return out if out else (0.0,)


def _peval(coeffs: tuple[float, ...], lam: float) -> float:
    return float(npoly.polyval(lam, coeffs))


@dataclass(frozen=True)
class DirectionCurve:
    """Polynomial parameter curve lambda -> eps(lambda) plus the constants
    that do not vary along it (charges, masses, coupling k, profile
    constants, speed of light)."""

    half_width: float
    amplitude: tuple[float, ...]
    u01: tuple[float, ...]
    u02: tuple[float, ...]
    d1: tuple[float, ...]
    alphas: tuple[tuple[float, ...], ...]
    species: tuple[SpeciesSpec, ...]
    c_light: float

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _coeffs(self.amplitude))
        object.__setattr__(self, "u01", _coeffs(self.u01))
        object.__setattr__(self, "u02", _coeffs(self.u02))
        object.__setattr__(self, "d1", _coeffs(self.d1))
        object.__setattr__(self, "alphas",
                           tuple(_coeffs(a) for a in self.alphas))
        object.__setattr__(self, "species", tuple(self.species))
        if self.half_width <= 0:
            raise DomainError("curve half-width must be positive")
        if self.c_light <= 0:
            raise DomainError("speed of light must be positive")
        if len(self.species) < 3:
            raise DomainError("at least three species required")
        if len(self.alphas) != len(self.species):
            raise DomainError("one alpha polynomial per species required")
        ref = self.species[0]
        if ref.q >= 0:
            raise DomainError("reference species must carry negative charge")
        if ref.k != 1.0:
            raise DomainError("reference species must have unit coupling k")
        # the criticality analysis needs at least two distinct k_i/l_i
        ratios = [sp.k / li for sp, li in
                  zip(self.species, self._l_values(0.0))]
        if np.ptp(ratios) < 1e-14 * max(1.0, max(abs(r) for r in ratios)):
            raise DomainError(
                "coupling ratios k_i/l_i must not all coincide")

    # -- scalar curve data -------------------------------------------------

    def _check_lambda(self, lam: float) -> float:
        lam = float(lam)
        if not -self.half_width < lam < self.half_width:
            raise DomainError(
                f"lambda {lam:g} outside the curve interval "
                f"(-{self.half_width:g}, {self.half_width:g})")
        return lam

    def a_of(self, lam: float) -> float:
        a = _peval(self.amplitude, self._check_lambda(lam))
        if a <= 0:
            raise DomainError(
                f"amplitude a({lam:g}) = {a:g} must be positive")
        return a

    def alpha_of(self, lam: float, i: int) -> float:
        val = _peval(self.alphas[i], self._check_lambda(lam))
        if val <= 0:
            raise DomainError(
                f"alpha_{i}({lam:g}) = {val:g} must be positive")
        return val

    def d1_of(self, lam: float) -> float:
        val = _peval(self.d1, self._check_lambda(lam))
        if val == 0.0:
            raise DomainError(f"reference drift vanishes at lambda {lam:g}")
        return val

    def phi0(self, lam: float) -> float:
        ref = self.species[0]
        return -(2.0 * self.alpha_of(lam, 0) * ref.q / ref.m) \
            * _peval(self.u01, lam)

    def psi0(self, lam: float) -> float:
        ref = self.species[0]
        return (ref.q / (ref.m * self.c_light)) * _peval(self.u02, lam)

    def _l_values(self, lam: float) -> list[float]:
        ref = self.species[0]
        a0 = _peval(self.alphas[0], lam)
        return [(ref.m * _peval(self.alphas[i], lam) * sp.q)
                / (a0 * sp.m * ref.q)
                for i, sp in enumerate(self.species)]

    # -- derived structures ------------------------------------------------

    def species_at(self, lam: float, fam: AnsatzFamily
                   ) -> tuple[SpeciesParams, ...]:
        lam = self._check_lambda(lam)
        alphas = [self.alpha_of(lam, i) for i in range(len(self.species))]
        return build_species(self.species, alphas,
                             self.d1_of(lam) * _Z_AXIS, fam)

    def eval_direction(self, lam: float) -> np.ndarray:
        """eps(lambda) as a flat vector, four slots per species:
        (l_i phi0, k_i psi0, alpha_i, d_i)."""
        lam = self._check_lambda(lam)
        p0, s0 = self.phi0(lam), self.psi0(lam)
        d1 = self.d1_of(lam)
        ls = self._l_values(lam)
        ref = self.species[0]
        out = np.empty(4 * len(self.species))
        for i, sp in enumerate(self.species):
            d_i = sp.k * (ref.q * sp.m) / (ref.m * sp.q) * d1
            out[4 * i:4 * i + 4] = (ls[i] * p0, sp.k * s0,
                                    self.alpha_of(lam, i), d_i)
        return out

    def with_species(self, species: Sequence[SpeciesSpec]
                     ) -> "DirectionCurve":
        return replace(self, species=tuple(species))


def eval_direction(curve: DirectionCurve, lam: float) -> np.ndarray:
    """Module-level alias for :meth:`DirectionCurve.eval_direction`."""
    return curve.eval_direction(lam)


# ---------------------------------------------------------------------------
# membership of the trivial-solution set


@dataclass(frozen=True)
class OmegaResidual:
    """Moment sums whose joint vanishing makes the constant state an exact
    solution."""

    s1: float
    s2: float

    @property
    def sup(self) -> float:
        return max(abs(self.s1), abs(self.s2))

    def within(self, tol: float) -> bool:
        return self.sup <= tol


def _eval_species(eps: np.ndarray, species: Sequence[SpeciesParams],
                  i: int) -> SpeciesParams:
    """Species i with alpha and drift taken from the direction vector
    (authoritative at the evaluation point)."""
    sp = species[i]
    alpha = float(eps[4 * i + 2])
    d_vec = float(eps[4 * i + 3]) * _Z_AXIS
    return replace(sp, alpha=alpha, d=d_vec, beta=None)


def omega_residual(eps: np.ndarray, species: Sequence[SpeciesParams],
                   fam: AnsatzFamily) -> OmegaResidual:
    """Moment sums S1, S2 at the boundary constants encoded in eps."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (4 * len(species),):
        raise DomainError("direction vector length must be 4 * N")
    d1_vec = float(eps[3]) * _Z_AXIS
    s1 = 0.0
    s2 = 0.0
    for i, sp in enumerate(species):
        ev = _eval_species(eps, species, i)
        x0, y0 = float(eps[4 * i]), float(eps[4 * i + 1])
        s1 += sp.q * float(moment_density(ev, fam, x0, y0))
        s2 += sp.q * float(moment_axial(ev, fam, x0, y0, d1_vec))
    return OmegaResidual(s1=s1, s2=s2)


@dataclass(frozen=True)
class ConditionCReport:
    """Membership audit along a lambda grid."""

    rows: tuple[tuple[float, float, float, bool], ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.rows)

    def worst(self) -> tuple[float, float]:
        lam, s1, s2, _ = max(self.rows,
                             key=lambda r: max(abs(r[1]), abs(r[2])))
        return lam, max(abs(s1), abs(s2))


def check_condition_C(curve: DirectionCurve, fam: AnsatzFamily,
                      lam_grid, tol: float = 1e-10) -> ConditionCReport:
    """Verify that the constant state stays an exact solution along the
    whole curve, not just at one point."""
    rows = []
    for lam in np.asarray(lam_grid, dtype=float):
        species = curve.species_at(lam, fam)
        res = omega_residual(curve.eval_direction(lam), species, fam)
        rows.append((float(lam), res.s1, res.s2, res.within(tol)))
    return ConditionCReport(rows=tuple(rows), tol=tol)


# ---------------------------------------------------------------------------
# projection onto the trivial-solution set

_FREE_FIELDS = ("c1", "c2")


def project_to_omega(eps: np.ndarray, species: Sequence[SpeciesParams],
                     fam: AnsatzFamily,
                     free: Sequence[tuple[int, str]],
                     tol: float = 1e-12, max_iter: int = 25
                     ) -> tuple[tuple[SpeciesParams, ...], int]:
    """Adjust two additive profile constants until (S1, S2) vanish.

    ``free`` names two slots as (species_index, "c1"|"c2").  Only additive
    constants are eligible: they leave the direction vector and the derived
    coupling weights untouched, so the projection moves the profiles, not
    the curve.  Returns the adjusted species list and the iteration count;
    a structurally singular 2x2 Jacobian (two slots with identical
    influence) raises ConditioningError.
    """
    free = list(free)
    if len(free) != 2:
        raise DomainError("exactly two free slots required")
    for idx, fname in free:
        if not 0 <= idx < len(species):
            raise DomainError(f"free slot species index {idx} out of range")
        if fname not in _FREE_FIELDS:
            raise DomainError(
                f"free slot {fname!r} unsupported; only additive profile "
                "constants keep the direction vector fixed")

    current = list(species)

    def res_vec() -> np.ndarray:
        r = omega_residual(eps, current, fam)
        return np.array([r.s1, r.s2])

    def bump(slot: int, delta: float):
        idx, fname = free[slot]
        sp = current[idx]
        current[idx] = replace(sp, **{fname: getattr(sp, fname) + delta})

    r = res_vec()
    if np.max(np.abs(r)) <= tol:
        return tuple(current), 0

    step = 1e-6
    history = [float(np.max(np.abs(r)))]
    for it in range(1, max_iter + 1):
        jac = np.empty((2, 2))
        for col in range(2):
            bump(col, +step)
            rp = res_vec()
            bump(col, -2 * step)
            rm = res_vec()
            bump(col, +step)
            jac[:, col] = (rp - rm) / (2 * step)
        scale = np.max(np.abs(jac))
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if not np.isfinite(det) or abs(det) <= 1e-14 * max(scale, 1.0) ** 2:
            raise ConditioningError(
                "projection Jacobian is numerically singular; the two free "
                "slots influence the moment sums identically", abs(det))
        delta = np.linalg.solve(jac, -r)
        bump(0, float(delta[0]))
        bump(1, float(delta[1]))
        r = res_vec()
        history.append(float(np.max(np.abs(r))))
        if history[-1] <= tol:
            return tuple(current), it
    raise DivergenceError(
        f"projection did not reach {tol:g} in {max_iter} iterations",
        history)


def project_curve(curve: DirectionCurve, fam: AnsatzFamily,
                  free: Sequence[tuple[int, str]], lam_ref: float = 0.0,
                  tol: float = 1e-12, max_iter: int = 25
                  ) -> tuple[DirectionCurve, int]:
    """Project the curve's species constants at a reference lambda and
    write the adjusted constants back into the curve."""
    species = curve.species_at(lam_ref, fam)
    eps = curve.eval_direction(lam_ref)
    try:
        adjusted, iters = project_to_omega(eps, species, fam, free,
                                           tol=tol, max_iter=max_iter)
    except VmbifError:
        raise
    new_specs = [replace(spec, c1=adj.c1, c2=adj.c2)
                 for spec, adj in zip(curve.species, adjusted)]
    return curve.with_species(new_specs), iters
