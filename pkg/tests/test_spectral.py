import math

import numpy as np
import pytest

from vmbif.errors import DomainError, SpectrumLookupError
from vmbif.grid import DomainSpec, inner, laplacian_apply, neg_laplacian, \
    norm_l2, pack, unpack
from vmbif.spectral import analytic_rectangle_spectrum, cluster_of, \
    discrete_spectrum, multiplicity_of


def closed_form_value(dom, m, n):
    return (4.0 / dom.h ** 2) * (
        math.sin(m * math.pi * dom.h / (2.0 * dom.a)) ** 2
        + math.sin(n * math.pi * dom.h / (2.0 * dom.b)) ** 2)


def test_domain_requires_square_cells():
    with pytest.raises(DomainError):
        DomainSpec(1.0, 1.0, 32, 16)
    dom = DomainSpec(2.0, 1.0, 64, 32)
    assert dom.h == pytest.approx(1.0 / 32.0)


def test_pack_unpack_roundtrip():
    dom = DomainSpec(1.0, 1.0, 8, 8)
    rng = np.random.default_rng(3)
    u = np.zeros(dom.shape)
    u[1:-1, 1:-1] = rng.standard_normal(dom.interior_shape)
    assert np.array_equal(unpack(dom, pack(dom, u)), u)


def test_matrix_agrees_with_stencil_application():
    dom = DomainSpec(1.0, 1.0, 12, 12)
    rng = np.random.default_rng(4)
    u = np.zeros(dom.shape)
    u[1:-1, 1:-1] = rng.standard_normal(dom.interior_shape)
    via_matrix = -(neg_laplacian(dom) @ pack(dom, u))
    via_stencil = laplacian_apply(dom, u).ravel()
    assert np.allclose(via_matrix, via_stencil, atol=1e-12)


def test_inner_product_weights_by_cell_area():
    dom = DomainSpec(1.0, 1.0, 16, 16)
    one = np.ones(dom.shape)
    # h^2-weighted sum over every node; fields with zero boundary trace
    # make this the plain interior quadrature
    n_nodes = dom.shape[0] * dom.shape[1]
    assert inner(dom, one, one) == pytest.approx(dom.h ** 2 * n_nodes)
    interior = np.zeros(dom.shape)
    interior[1:-1, 1:-1] = 1.0
    assert inner(dom, interior, one) == pytest.approx(
        dom.h ** 2 * dom.n_interior)
    assert norm_l2(dom, interior) == pytest.approx(
        math.sqrt(dom.h ** 2 * dom.n_interior))


def test_analytic_values_and_ordering():
    dom = DomainSpec(1.0, 1.0, 32, 32)
    spec = analytic_rectangle_spectrum(dom, 6)
    values = [p.value for p in spec]
    assert values == sorted(values)
    pi2 = math.pi ** 2
    assert values[0] == pytest.approx(2 * pi2, rel=1e-13)
    assert values[1] == pytest.approx(5 * pi2, rel=1e-13)
    assert values[2] == pytest.approx(5 * pi2, rel=1e-13)
    assert values[3] == pytest.approx(8 * pi2, rel=1e-13)


def test_analytic_functions_are_h_normalized():
    dom = DomainSpec(1.0, 1.0, 32, 32)
    spec = analytic_rectangle_spectrum(dom, 3)
    for p in spec:
        assert norm_l2(dom, p.function) == pytest.approx(1.0, rel=1e-12)


def test_sampled_sines_are_exact_discrete_eigenvectors():
    dom = DomainSpec(1.0, 1.0, 24, 24)
    spec = analytic_rectangle_spectrum(dom, 4)
    A = neg_laplacian(dom)
    # mode (m, n) of the matrix has the closed-form discrete value
    modes = [(1, 1), (1, 2), (2, 1), (2, 2)]
    for p, (m, n) in zip(spec, modes):
        v = pack(dom, p.function)
        mu_h = closed_form_value(dom, m, n)
        assert np.max(np.abs(A @ v - mu_h * v)) < 1e-10 * mu_h


def test_discrete_values_match_closed_forms():
    for nx in (16, 32):
        dom = DomainSpec(1.0, 1.0, nx, nx)
        spec = discrete_spectrum(dom, 12)
        closed = sorted(closed_form_value(dom, m, n)
                        for m in range(1, 9) for n in range(1, 9))[:12]
        for p, c in zip(spec, closed):
            assert p.value == pytest.approx(c, abs=1e-10 * max(1.0, c))


def test_discrete_functions_satisfy_matrix_equation():
    dom = DomainSpec(1.0, 1.0, 32, 32)
    spec = discrete_spectrum(dom, 4)
    A = neg_laplacian(dom)
    for p in spec:
        v = pack(dom, p.function) * dom.h
        # solver targets 1e-9 relative to the eigenvalue scale
        assert np.linalg.norm(A @ v - p.value * v) \
            < 2e-9 * max(1.0, p.value)


def test_rectangle_breaks_degeneracy():
    dom = DomainSpec(1.5, 1.0, 48, 32)
    spec = analytic_rectangle_spectrum(dom, 4)
    pi2 = math.pi ** 2
    expect = sorted([pi2 * (m * m / 1.5 ** 2 + n * n)
                     for m in range(1, 5) for n in range(1, 5)])[:4]
    for p, e in zip(spec, expect):
        assert p.value == pytest.approx(e, rel=1e-13)
    assert all(p.multiplicity == 1 for p in spec)


def test_multiplicity_and_cluster_lookup():
    dom = DomainSpec(1.0, 1.0, 32, 32)
    ana = analytic_rectangle_spectrum(dom, 6)
    pi2 = math.pi ** 2
    assert multiplicity_of(ana, 2 * pi2, 1e-6) == (1, True)
    assert multiplicity_of(ana, 5 * pi2, 1e-6) == (2, False)
    with pytest.raises(SpectrumLookupError):
        cluster_of(ana, 3 * pi2, 1e-6)
    pair = cluster_of(ana, 5 * pi2, 1e-6)
    assert len(pair) == 2
    # degenerate partners are h-orthonormal
    g = inner(dom, pair[0].function, pair[1].function)
    assert abs(g) < 1e-12


def test_discrete_spectrum_is_deterministic():
    dom = DomainSpec(1.0, 1.0, 16, 16)
    a = discrete_spectrum(dom, 5)
    b = discrete_spectrum(dom, 5)
    for pa, pb in zip(a, b):
        assert pa.value == pb.value
        assert np.array_equal(pa.function, pb.function)
