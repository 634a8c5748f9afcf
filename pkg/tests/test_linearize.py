import math

import numpy as np
import pytest

from vmbif.ansatz import EXPONENTIAL, SpeciesParams, SpeciesSpec, \
    build_species, moment_density
from vmbif.errors import DomainError
from vmbif.linearize import LinearizationData, _stable_roots, assemble, \
    check_conditions, eigen_asymptotic, eigenvectors, theta_matrix

from conftest import make_corpus_curve

Z = np.array([0.0, 0.0, 1.0])


def make_data(T, c_light=10.0, mu=-8.0 * math.pi, eta=4.0 * math.pi):
    """LinearizationData for prescribed T entries at unit reference
    charge, mass and alpha."""
    nu = eta / c_light ** 2
    xi = np.array([[mu * T[0], mu * T[1]], [nu * T[2], nu * T[3]]])
    tr = float(xi[0, 0] + xi[1, 1])
    det = float(xi[0, 0] * xi[1, 1] - xi[0, 1] * xi[1, 0])
    chi_p, chi_m = _stable_roots(tr, det)
    return LinearizationData(matrix=xi, T=tuple(T), mu=mu, nu=nu, eta=eta,
                             c_light=c_light, chi_plus=chi_p,
                             chi_minus=chi_m, real_spectrum=True)


def test_worked_example_roots():
    # T = (-1, 1, 1, -2) at c = 10 with the unit-reference scales
    data = make_data((-1.0, 1.0, 1.0, -2.0))
    assert data.chi_plus == pytest.approx(25.0076, abs=5e-4)
    assert data.chi_minus == pytest.approx(-0.12630, abs=5e-5)
    chi_p_asym, chi_m_asym = eigen_asymptotic(data)
    assert chi_p_asym == pytest.approx(8.0 * math.pi)  # mu * T1
    assert chi_m_asym == pytest.approx(-0.12566, abs=5e-5)


def test_corpus_assembly_values(corpus_curve):
    data = assemble(corpus_curve.eval_direction(1.0),
                    corpus_curve.species_at(1.0, EXPONENTIAL),
                    EXPONENTIAL, corpus_curve.c_light)
    # independent route: T entries from the closed-form densities
    # A_i = q-weighted derivative sums with dA/dx = dA/dy = A
    from vmbif.ansatz import moment_density
    sp = corpus_curve.species_at(1.0, EXPONENTIAL)
    A = [moment_density(s, EXPONENTIAL, 0.0, 0.0) for s in sp]
    T1 = sum(s.q * s.l * a for s, a in zip(sp, A))
    T2 = sum(s.q * s.k * a for s, a in zip(sp, A))
    # axial moment partials scale the density partials by beta_z * d1_z
    T3 = sum(s.q * s.l * a * s.beta[2] for s, a in zip(sp, A))
    T4 = sum(s.q * s.k * a * s.beta[2] for s, a in zip(sp, A))
    assert data.T == pytest.approx((T1, T2, T3, T4), rel=1e-12)
    assert data.mu == pytest.approx(-8.0 * math.pi)
    assert data.eta == pytest.approx(4.0 * math.pi)
    assert data.nu == pytest.approx(4.0 * math.pi / 100.0)


def test_trace_and_determinant_identities(corpus_curve):
    data = assemble(corpus_curve.eval_direction(1.0),
                    corpus_curve.species_at(1.0, EXPONENTIAL),
                    EXPONENTIAL, corpus_curve.c_light)
    tr = data.matrix[0, 0] + data.matrix[1, 1]
    det = np.linalg.det(data.matrix)
    assert data.chi_plus + data.chi_minus == pytest.approx(tr, rel=1e-12)
    assert data.chi_plus * data.chi_minus == pytest.approx(det, rel=1e-12)


def test_small_root_has_no_cancellation():
    # roots separated by 13 orders of magnitude: the det/big form must
    # hold full relative accuracy on the small root.  Oracle: the same
    # quadratic solved in 50-digit decimal arithmetic.
    from decimal import Decimal, getcontext
    getcontext().prec = 50
    data = make_data((-1.0, 1.0, 1.0, -2.0), c_light=1e6)
    tr = Decimal(data.matrix[0, 0] + data.matrix[1, 1])
    det = Decimal(data.matrix[0, 0]) * Decimal(data.matrix[1, 1]) \
        - Decimal(data.matrix[0, 1]) * Decimal(data.matrix[1, 0])
    disc = tr * tr - 4 * det
    big = (tr + disc.sqrt()) / 2
    small = det / big
    assert abs(data.chi_minus / data.chi_plus) < 1e-12
    assert data.chi_minus == pytest.approx(float(small), rel=1e-13)
    assert data.chi_plus == pytest.approx(float(big), rel=1e-13)


def test_asymptotic_gap_shrinks_like_inverse_c_squared(corpus_curve):
    gaps = []
    for c_light in (10.0, 20.0, 40.0, 80.0):
        curve = make_corpus_curve(c_light=c_light)
        data = assemble(curve.eval_direction(1.0),
                        curve.species_at(1.0, EXPONENTIAL),
                        EXPONENTIAL, c_light)
        _, chi_m_asym = eigen_asymptotic(data)
        gaps.append(abs(data.chi_minus * c_light ** 2
                        - chi_m_asym * c_light ** 2))
    assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))


def test_eigenvector_second_component_is_one(corpus_curve):
    data = assemble(corpus_curve.eval_direction(1.0),
                    corpus_curve.species_at(1.0, EXPONENTIAL),
                    EXPONENTIAL, corpus_curve.c_light)
    c_vec, c_star = eigenvectors(data)
    assert c_vec[1] == 1.0
    assert c_star[1] == 1.0
    assert np.allclose(data.matrix @ c_vec, data.chi_minus * c_vec,
                       atol=1e-12 * np.abs(data.matrix).max())
    assert np.allclose(data.matrix.T @ c_star, data.chi_minus * c_star,
                       atol=1e-12 * np.abs(data.matrix).max())


def test_eigenvector_limits_at_large_c():
    # c -> infinity: right vector tends to (-T2/T1, 1), dual to (0, 1)
    T = (-2.0, 1.5, 0.7, -3.0)
    slopes = []
    for c_light in (10.0, 100.0, 1000.0):
        data = make_data(T, c_light=c_light)
        c_vec, c_star = eigenvectors(data)
        gap_c = abs(c_vec[0] - (-T[1] / T[0]))
        gap_s = abs(c_star[0])
        slopes.append((c_light, gap_c, gap_s))
    for (_, gc1, gs1), (_, gc2, gs2) in zip(slopes, slopes[1:]):
        # both gaps fall roughly like 1/c^2 per decade of c
        assert gc1 / gc2 == pytest.approx(100.0, rel=0.3)
        assert gs1 / gs2 == pytest.approx(100.0, rel=0.3)


def test_structural_conditions(corpus_curve):
    data = assemble(corpus_curve.eval_direction(1.0),
                    corpus_curve.species_at(1.0, EXPONENTIAL),
                    EXPONENTIAL, corpus_curve.c_light)
    cond_i, cond_ii = check_conditions(data)
    assert cond_i and cond_ii
    assert data.T[0] < 0
    assert data.T[0] * data.T[3] - data.T[1] * data.T[2] > 0
    assert data.chi_minus < 0 < data.chi_plus

    flipped = make_data((+1.0, 1.0, 1.0, -2.0))
    assert check_conditions(flipped) == (False, False)


def test_theta_matrix_symmetry_and_values():
    specs = [SpeciesSpec(q=-1.0, m=1.0, k=1.0),
             SpeciesSpec(q=1.0, m=2.0, k=1.0),
             SpeciesSpec(q=1.0, m=1.0, k=-3.0)]
    sp = build_species(specs, alphas=[1.0, 1.0, 2.0], d1=Z, fam=EXPONENTIAL)
    theta = theta_matrix(sp)
    # both factors flip sign under i <-> j, so theta is symmetric with a
    # zero diagonal
    assert np.allclose(theta, theta.T, atol=1e-14)
    assert np.allclose(np.diag(theta), 0.0, atol=1e-14)
    # (0,1): q0 q1 = -1, (l1 k0 - k1 l0) = -3/2, ((b1 - b0), d1) = -3/2
    assert theta[0, 1] == pytest.approx(-2.25, rel=1e-12)
    # (0,2): q0 q2 = -1, (l2 k0 - k2 l0) = 1, ((b2 - b0), d1) = 1/4
    assert theta[0, 2] == pytest.approx(-0.25, rel=1e-12)


def test_complex_pair_is_flagged():
    # weights chosen to make the coupling rotation-dominated: solve the
    # 2x2 moment systems that place Xi near [[0.25, -30], [30, 0.13]]
    alpha = (1.0, 1.0)
    d = (1.0, -2.0)
    q = (-1.0, 1.0)
    beta = [dd / (2.0 * aa) for dd, aa in zip(d, alpha)]
    spp = [SpeciesParams(index=i, q=q[i], m=1.0, alpha=alpha[i],
                         d=d[i] * Z, l=1.0, k=1.0, c1=0.0, c2=0.0,
                         beta=beta[i] * Z)
           for i in range(2)]
    A = [moment_density(s, EXPONENTIAL, 0.0, 0.0) for s in spp]
    mu, eta = -8.0 * math.pi, 4.0 * math.pi  # c = 1
    targets = {"T1": -0.25 / mu, "T3": 30.0 / eta,
               "T2": -30.0 / mu, "T4": 0.13 / eta}
    M = np.array([[1.0, 1.0], beta])
    u = np.linalg.solve(M, [targets["T1"], targets["T3"]])
    v = np.linalg.solve(M, [targets["T2"], targets["T4"]])
    ls = [u[i] / (q[i] * A[i]) for i in range(2)]
    ks = [v[i] / (q[i] * A[i]) for i in range(2)]
    from dataclasses import replace
    spp = [replace(s, l=ls[i], k=ks[i]) for i, s in enumerate(spp)]
    eps = np.array([0.0, 0.0, alpha[0], d[0],
                    0.0, 0.0, alpha[1], d[1]])
    data = assemble(eps, spp, EXPONENTIAL, c_light=1.0)

    assert not data.real_spectrum
    z1, z2 = data.complex_pair
    assert z1 == z2.conjugate()
    assert abs(z1.imag) > 1.0
    assert math.isnan(data.chi_minus) and math.isnan(data.chi_plus)
    with pytest.raises(DomainError):
        eigenvectors(data)
