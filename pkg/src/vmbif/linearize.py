"""Linearization of the field equations about the constant state.

Linearizing the two moment sums at the boundary constants produces a 2x2
coefficient matrix

    Xi = [[mu*T1, mu*T2],
          [nu*T3, nu*T4]],

where, with the moment partials of species s evaluated at
(x, y) = (l_s phi0, k_s psi0),

    T1 = sum q_s l_s dA_s/dx,     T2 = sum q_s k_s dA_s/dy,
    T3 = sum q_s l_s dM_s/dx,     T4 = sum q_s k_s dM_s/dy,

M_s = (j_s, d_1) being the axial current moment.  The physical constants
come from the reference species: mu = 8 pi alpha_1 q_1 / m_1 (negative by
the charge convention) and nu = eta / c^2 with eta = 4 pi |q_1| / m_1, so
nu carries the 1/c^2 smallness that drives the asymptotics

    chi_plus  -> mu*T1,
    chi_minus -> eta (T1 T4 - T2 T3) / (T1 c^2),

with eigenvectors (for chi_minus, second component normalized to one)
c -> (-T2/T1, 1) and adjoint c* -> (0, 1).  The exact eigenvalues are
computed with the numerically stable quadratic branch (no cancellation in
the small root), and the structural conditions

    (I)  T1 < 0,        (II)  T1 T4 - T2 T3 > 0

are reported; together they pin chi_minus < 0 < chi_plus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .ansatz import (AnsatzFamily, SpeciesParams, moment_axial_derivatives,
                     moment_derivatives)
from .errors import DomainError, SingularityError

__all__ = [
    "LinearizationData",
    "assemble",
    "eigen_asymptotic",
    "eigenvectors",
    "check_conditions",
    "theta_matrix",
]

_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class LinearizationData:
    """The assembled 2x2 linearization and its spectral data."""

    matrix: np.ndarray
    T: tuple[float, float, float, float]
    mu: float
    nu: float
    eta: float
    c_light: float
    chi_plus: float
    chi_minus: float
    real_spectrum: bool
    complex_pair: tuple[complex, complex] | None = None

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def _stable_roots(tr: float, det: float) -> tuple[float, float]:
    """Both roots of x^2 - tr x + det = 0 without subtractive
    cancellation in the small root."""
    disc = tr * tr - 4.0 * det
    sq = np.sqrt(disc)
    if tr >= 0.0:
        big = 0.5 * (tr + sq)
    else:
        big = 0.5 * (tr - sq)
    if big == 0.0:
        return 0.0, 0.0
    other = det / big
    return (max(big, other), min(big, other))


def assemble(eps: np.ndarray, species: Sequence[SpeciesParams],
             fam: AnsatzFamily, c_light: float) -> LinearizationData:
    """Build Xi and its exact eigenvalues at a point of the curve.

    ``eps`` supplies the evaluation point (scaled boundary potentials,
    alpha and drift per species); ``species`` supplies charges, masses,
    coupling weights and profile constants.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (4 * len(species),):
        raise DomainError("direction vector length must be 4 * N")
    if c_light <= 0:
        raise DomainError("speed of light must be positive")

    d1_vec = float(eps[3]) * _Z_AXIS
    t1 = t2 = t3 = t4 = 0.0
    for i, sp in enumerate(species):
        ev = replace(sp, alpha=float(eps[4 * i + 2]),
                     d=float(eps[4 * i + 3]) * _Z_AXIS, beta=None)
        x0, y0 = float(eps[4 * i]), float(eps[4 * i + 1])
        dax, day = moment_derivatives(ev, fam, x0, y0)
        dmx, dmy = moment_axial_derivatives(ev, fam, x0, y0, d1_vec)
        t1 += sp.q * sp.l * float(dax)
        t2 += sp.q * sp.k * float(day)
        t3 += sp.q * sp.l * float(dmx)
        t4 += sp.q * sp.k * float(dmy)

    ref = species[0]
    if ref.q >= 0:
        raise DomainError("reference species must carry negative charge")
    alpha1 = float(eps[2])
    mu = 8.0 * np.pi * alpha1 * ref.q / ref.m
    eta = 4.0 * np.pi * abs(ref.q) / ref.m
    nu = eta / c_light ** 2

    xi = np.array([[mu * t1, mu * t2], [nu * t3, nu * t4]])
    tr = float(xi[0, 0] + xi[1, 1])
    det = float(xi[0, 0] * xi[1, 1] - xi[0, 1] * xi[1, 0])
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        lam = 0.5 * (tr + 1j * np.sqrt(-disc))
        return LinearizationData(
            matrix=xi, T=(t1, t2, t3, t4), mu=mu, nu=nu, eta=eta,
            c_light=c_light, chi_plus=np.nan, chi_minus=np.nan,
            real_spectrum=False, complex_pair=(lam, lam.conjugate()))
    hi, lo = _stable_roots(tr, det)
    return LinearizationData(
        matrix=xi, T=(t1, t2, t3, t4), mu=mu, nu=nu, eta=eta,
        c_light=c_light, chi_plus=hi, chi_minus=lo, real_spectrum=True)


def eigen_asymptotic(data: LinearizationData) -> tuple[float, float]:
    """Leading-order eigenvalues for large c: (mu*T1,
    eta*(T1*T4 - T2*T3)/(T1*c^2))."""
    t1, t2, t3, t4 = data.T
    if t1 == 0.0:
        raise SingularityError(
            "asymptotic eigenvalues undefined: T1 vanishes")
    chi_plus = data.mu * t1
    chi_minus = data.eta * (t1 * t4 - t2 * t3) / (t1 * data.c_light ** 2)
    return chi_plus, chi_minus


def eigenvectors(data: LinearizationData
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Exact eigenvector and adjoint eigenvector for chi_minus, each with
    its second component normalized to one."""
    if not data.real_spectrum:
        raise DomainError("complex eigenvalue pair has no real eigenbasis")
    xi = data.matrix
    denom = data.chi_minus - xi[0, 0]
    if denom == 0.0:
        if xi[0, 1] == 0.0:
            # diagonal with chi_minus in the first slot: eigenvector is
            # (1, 0), which cannot be scaled to a unit second component
            if data.chi_minus != xi[1, 1]:
                raise SingularityError(
                    "chi_minus eigenvector has vanishing second component")
            c_vec = np.array([0.0, 1.0])
        else:
            raise SingularityError(
                "defective linearization: no eigenbasis for chi_minus")
    else:
        c_vec = np.array([xi[0, 1] / denom, 1.0])
    denom_star = data.chi_minus - xi[0, 0]
    if denom_star == 0.0:
        c_star = np.array([0.0, 1.0])
    else:
        c_star = np.array([xi[1, 0] / denom_star, 1.0])
    return c_vec, c_star


def check_conditions(data: LinearizationData) -> tuple[bool, bool]:
    """Structural conditions (I) T1 < 0 and (II) T1*T4 - T2*T3 > 0."""
    t1, t2, t3, t4 = data.T
    return (t1 < 0.0, t1 * t4 - t2 * t3 > 0.0)


def theta_matrix(species: Sequence[SpeciesParams]) -> np.ndarray:
    """Pairwise coupling matrix
    Theta_ij = q_i q_j (l_j k_i - k_j l_i) ((beta_j - beta_i), d_1).

    Requires every species to carry its current-proportionality vector
    (closed form for the exponential family, fitted otherwise).
    """
    n = len(species)
    if n == 0:
        raise DomainError("empty species list")
    if any(sp.beta is None for sp in species):
        raise DomainError(
            "theta matrix needs beta vectors; fit them first")
    d1 = species[0].d
    theta = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            si, sj = species[i], species[j]
            theta[i, j] = si.q * sj.q * (sj.l * si.k - sj.k * si.l) \
                * float(np.dot(sj.beta - si.beta, d1))
    return theta
