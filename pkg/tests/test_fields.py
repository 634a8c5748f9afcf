from dataclasses import replace

import numpy as np
import pytest

from vmbif import bifurcate, fields, pde, spectral
from vmbif.ansatz import EXPONENTIAL
from vmbif.errors import DomainError
from vmbif.grid import DomainSpec


@pytest.fixture(scope="module")
def branch_solution(corpus_curve, corpus_branches):
    p = corpus_branches[+1].points[-1]
    sol = fields.reconstruct(p.state, corpus_curve, EXPONENTIAL, p.lam,
                             beta_const=0.0)
    return p, sol


def test_trivial_fields_vanish(corpus_curve, dom32):
    lam = 5.0
    state = pde.trivial_state(dom32, corpus_curve, lam)
    sol = fields.reconstruct(state, corpus_curve, EXPONENTIAL, lam,
                             beta_const=1.5)
    # constant potentials carry no in-plane fields
    assert np.abs(sol.E).max() < 1e-14
    assert np.abs(sol.B[..., :2]).max() < 1e-14
    # the axial induction reduces to the free constant over d3
    d3 = corpus_curve.species_at(lam, EXPONENTIAL)[0].d[2]
    assert np.allclose(sol.B[..., 2], 1.5 / d3, atol=1e-12)
    # membership makes the constant state charge- and current-free
    assert np.abs(sol.rho).max() < 1e-12
    assert np.abs(sol.j).max() < 1e-11


def test_potential_scaling_against_reference_species(branch_solution,
                                                     corpus_curve):
    p, sol = branch_solution
    ref = corpus_curve.species_at(p.lam, EXPONENTIAL)[0]
    scale = -ref.m / (2.0 * ref.alpha * ref.q)
    assert np.allclose(sol.U, scale * p.state.phi, atol=1e-14)


def test_electric_field_is_minus_gradient(branch_solution, dom32):
    p, sol = branch_solution
    dU_dx = (sol.U[2:, 1:-1] - sol.U[:-2, 1:-1]) / (2 * dom32.h)
    dU_dy = (sol.U[1:-1, 2:] - sol.U[1:-1, :-2]) / (2 * dom32.h)
    assert np.allclose(sol.E[1:-1, 1:-1, 0], -dU_dx, atol=1e-12)
    assert np.allclose(sol.E[1:-1, 1:-1, 1], -dU_dy, atol=1e-12)


def test_vector_potential_curl_is_induction(branch_solution, dom32):
    p, sol = branch_solution
    h = dom32.h
    az = sol.A[..., 2]
    # in-plane induction comes from the axial potential component
    bx = (az[1:-1, 2:] - az[1:-1, :-2]) / (2 * h)
    by = -(az[2:, 1:-1] - az[:-2, 1:-1]) / (2 * h)
    assert np.allclose(sol.B[1:-1, 1:-1, 0], bx, atol=1e-9)
    assert np.allclose(sol.B[1:-1, 1:-1, 1], by, atol=1e-9)


def test_gauge_part_carries_the_constant_offset(corpus_curve, dom32):
    # with a free constant the in-plane potential components alone must
    # reproduce the axial induction through their curl
    state = pde.trivial_state(dom32, corpus_curve, 5.0)
    sol = fields.reconstruct(state, corpus_curve, EXPONENTIAL, 5.0,
                             beta_const=0.7)
    h = dom32.h
    ax = sol.A[..., 0]
    ay = sol.A[..., 1]
    bz = (ay[2:, 1:-1] - ay[:-2, 1:-1]) / (2 * h) \
        - (ax[1:-1, 2:] - ax[1:-1, :-2]) / (2 * h)
    assert np.allclose(sol.B[1:-1, 1:-1, 2], bz, atol=1e-12)


def test_maxwell_residual_scales(branch_solution, corpus_curve):
    p, sol = branch_solution
    rep = fields.maxwell_residuals(sol, corpus_curve.c_light)
    assert rep.curl_e_sup < 1e-12 * max(rep.e_scale, 1e-30)
    assert rep.div_b_sup < 1e-12 * max(rep.b_scale, 1e-30)
    # wide-stencil consistency gap stays bounded by the source scales
    assert rep.gauss_sup < 0.1 * rep.rho_scale
    assert rep.ampere_sup < 0.1 * rep.j_scale
    d = rep.as_dict()
    assert set(d) >= {"curl_e_sup", "div_b_sup", "gauss_sup",
                      "ampere_sup", "h"}


def _branch_tip(curve, dom, xi_step, n_points):
    spec = spectral.discrete_spectrum(dom, 6)
    grid = np.linspace(1.0, 60.0, 64)
    pts = bifurcate.scan_roots(
        curve, EXPONENTIAL, spec[0].value, grid, tol_root=1e-10,
        spectrum=spec,
        spectrum_tol=10.0 * dom.h ** 2 * max(1.0, spec[0].value))
    assert len(pts) == 1
    cfg = pde.ContinuationConfig(xi_step=xi_step, max_points=n_points,
                                 newton_tol=1e-11)
    branch = pde.continue_branch(pts[0], curve, EXPONENTIAL, dom, cfg,
                                 side=+1)
    return pts[0], branch.points[-1]


def test_gauss_and_ampere_shrink_quadratically(corpus_curve):
    # trace the same branch segment on two grids; the wide-stencil Maxwell
    # gap of the converged states must fall by ~4x when h halves
    reports = []
    for n in (32, 64):
        dom = DomainSpec(1.0, 1.0, n, n)
        _, tip = _branch_tip(corpus_curve, dom, xi_step=0.05, n_points=2)
        sol = fields.reconstruct(tip.state, corpus_curve, EXPONENTIAL,
                                 tip.lam)
        reports.append(fields.maxwell_residuals(sol, corpus_curve.c_light))
    r32, r64 = reports
    assert r32.gauss_sup / r64.gauss_sup == pytest.approx(4.0, rel=0.2)
    assert r32.ampere_sup / r64.ampere_sup == pytest.approx(4.0, rel=0.2)


def test_planar_states_stay_in_reduction_subspace(branch_solution,
                                                  corpus_curve):
    p, sol = branch_solution
    species = corpus_curve.species_at(p.lam, EXPONENTIAL)
    gaps = fields.subspace_check(p.state, species)
    assert np.allclose(gaps, 0.0)
    # an imposed axial gradient breaks the reduction by the advertised
    # weighted amount
    gaps = fields.subspace_check(p.state, species, dphi_dz=0.25,
                                 dpsi_dz=0.5)
    expect = [abs(s.l) * 0.25 + abs(s.k) * 0.5 for s in species]
    assert np.allclose(gaps, expect, rtol=1e-12)


def test_boundary_charge_matches_membership(branch_solution):
    _, sol = branch_solution
    rho_b, j_b = fields.boundary_density_check(sol)
    assert rho_b < 1e-10
    assert j_b < 1e-10


def test_reconstruct_requires_axial_drift(corpus_curve, dom32):
    state = pde.trivial_state(dom32, corpus_curve, 5.0)

    class FlatCurve:
        c_light = corpus_curve.c_light

        def species_at(self, lam, fam):
            sp = corpus_curve.species_at(lam, fam)
            return tuple(replace(s, d=np.array([1.0, 0.0, 0.0]))
                         for s in sp)

        def __getattr__(self, name):
            return getattr(corpus_curve, name)

    with pytest.raises(DomainError):
        fields.reconstruct(state, FlatCurve(), EXPONENTIAL, 5.0)


def test_field_dump_roundtrip(tmp_path, branch_solution):
    from vmbif.output import read_field_dump, write_field_dump
    p, _ = branch_solution
    path = tmp_path / "dump.bin"
    write_field_dump(path, p.state.phi, p.state.dom.h, p.lam)
    arr, h, lam = read_field_dump(path)
    assert np.array_equal(arr, p.state.phi)
    assert h == p.state.dom.h
    assert lam == p.lam
