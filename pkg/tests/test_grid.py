import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heteroclinic import CrossSection, build_grid, gradient_sq, integrate, laplacian, slab_integral
from heteroclinic.grid import GridError, slab_integrals


def test_small_grid_nodes(line):
    g = build_grid(1, 0.5, line)
    assert g.nx == 5 and g.n_slabs == 2
    np.testing.assert_array_equal(g.x, [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_node_and_slab_counts(line):
    g = build_grid(10, 0.1, line)
    assert g.nx == 201 and g.n_slabs == 20
    assert g.slab_index_range == (-10, 10)


@pytest.mark.parametrize("T,h", [(10, 0.3), (10, 0.15), (2.5, 0.1), (0, 0.1), (3, -0.1)])
def test_rejects_misaligned(line, T, h):
    with pytest.raises(GridError, match="T must|1/h_x|h_x must"):
        build_grid(T, h, line)


def test_rejects_bad_cross():
    with pytest.raises(ValueError):
        CrossSection((1.0,), (1,))
    with pytest.raises(ValueError):
        CrossSection((1.0, 1.0, 1.0), (3, 3, 3))
    with pytest.raises(ValueError):
        CrossSection((-1.0,), (3,))


def test_coordinates_deterministic(line):
    a, b = build_grid(4, 0.05, line), build_grid(4, 0.05, line)
    assert a.x.tobytes() == b.x.tobytes()
    assert all(p.tobytes() == q.tobytes() for p, q in zip(a.y, b.y))


def test_slab_faces_on_grid_lines(small2d):
    for k in range(*small2d.slab_index_range):
        sl = small2d.slab_nodes(k)
        assert small2d.x[sl.start] == k and small2d.x[sl.stop - 1] == k + 1


def test_gradient_sq_constant_and_affine(small2d, small3d):
    for g in (small2d, small3d):
        assert np.max(gradient_sq(np.full(g.shape, 0.3), g)) < 1e-28
    X, Y = np.broadcast_arrays(*small2d.mesh)
    np.testing.assert_allclose(gradient_sq(X, small2d)[1:-1], 1.0, rtol=0, atol=1e-13)
    # affine in x plus a y-dependence that is even about both walls keeps the interior exact
    gx = gradient_sq(2.0 * X - 1.0, small2d)
    np.testing.assert_allclose(gx, 4.0, atol=1e-12)


def test_gradient_sq_second_order(line):
    errs = []
    for h in (0.05, 0.025, 0.0125):
        g = build_grid(2, h, line)
        U = np.broadcast_to(np.sin(g.x)[:, None], g.shape)
        errs.append(np.max(np.abs(gradient_sq(U, g) - np.cos(g.x)[:, None] ** 2)))
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_laplacian_constant_and_quadratic(small2d):
    assert np.all(laplacian(np.full(small2d.shape, 2.0), small2d)[1:-1] == 0)
    X = np.broadcast_to(small2d.x[:, None], small2d.shape)
    np.testing.assert_allclose(laplacian(X**2, small2d)[1:-1], 2.0, atol=1e-10)
    assert np.all(np.isnan(laplacian(X, small2d)[[0, -1]]))


def test_laplacian_neumann_cosine():
    errs = []
    for n in (11, 21, 41):
        g = build_grid(1, 0.5, CrossSection((1.0,), (n,)))
        y = g.y[0]
        U = np.broadcast_to(np.cos(np.pi * y), g.shape)
        exact = -np.pi**2 * np.cos(np.pi * y)
        errs.append(np.max(np.abs(laplacian(U, g)[1:-1] - exact)))
        # centered one-sided normal derivative with the mirrored ghost vanishes at both walls
        assert gradient_sq(U, g)[1, 0] == 0 and gradient_sq(U, g)[1, -1] == 0
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_ghost_reflection_matches_extended_grid():
    # an even extension across y = 0 evaluated on the doubled grid gives the same interior values
    g = build_grid(1, 0.25, CrossSection((1.0,), (5,)))
    ext = build_grid(1, 0.25, CrossSection((2.0,), (9,)))
    rng = np.random.default_rng(3)
    U = rng.standard_normal(g.shape)
    E = np.concatenate([U[:, ::-1], U[:, 1:]], axis=1)  # mirror about y = 0; values at extended y in [0, 2]
    lap_ext = laplacian(E, ext)[:, 4:]
    lap = laplacian(U, g)
    np.testing.assert_allclose(lap[1:-1, :-1], lap_ext[1:-1, :-1], rtol=1e-13, atol=1e-12)


def test_slab_integral_examples(line, small2d):
    g = build_grid(2, 0.1, line)
    ones = np.ones(g.shape)
    for k in range(-2, 2):
        assert slab_integral(ones, k, g) == pytest.approx(1.0, abs=1e-14)
    X = np.broadcast_to(g.x[:, None], g.shape)
    assert slab_integral(X, 0, g) == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(GridError):
        slab_integral(ones, 2, g)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 4), m=st.sampled_from([1, 2, 5, 10]),
       dim3=st.booleans())
def test_slab_partition(seed, T, m, dim3):
    cross = CrossSection((1.0, 0.7), (4, 3)) if dim3 else CrossSection((1.3,), (5,))
    g = build_grid(T, 1.0 / m, cross)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    total = integrate(f, g)
    parts = slab_integrals(f, g)
    assert abs(parts.sum() - total) <= 1e-13 * max(1.0, np.abs(f).sum() * g.weights.max())
    assert abs(sum(slab_integral(f, k, g) for k in range(-T, T)) - total) <= 1e-12 * max(1.0, abs(total))


def test_shape_mismatch(small2d):
    with pytest.raises(ValueError, match="shape"):
        gradient_sq(np.zeros((3, 3)), small2d)
