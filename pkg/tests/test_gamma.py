import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heteroclinic import CrossSection, Field, build_grid, clip, glue, normalization_shifts, seed_phi, tail_norms
from heteroclinic import total_energy, translate
from heteroclinic.gamma import NoTransitionError, default_tau, in_gamma, tail_sup

G = build_grid(6, 0.05, CrossSection((1.0,), (3,)))


def test_seed_values():
    phi = seed_phi(0, G).values
    at = {float(x): phi[i, 0] for i, x in enumerate(G.x)}
    assert at[0.0] == 1 and at[0.5] == 0 and at[1.0] == -1
    assert np.all(np.abs(phi) <= 1)
    with pytest.raises(ValueError):
        seed_phi(6, G)


def test_seed_tail_norms():
    for j in (-2, 0, 3):
        prof = tail_norms(seed_phi(j, G))
        assert all(p.left_norm == 0 for p in prof if p.k <= j - 1)
        assert all(p.right_norm == 0 for p in prof if p.k >= j + 1)


def test_seed_transition_norm():
    # composite trapezoid on int_0^1 (2x)^2 dx carries the error (h^2/12)(f'(1) - f'(0)) = 2h^2/3
    p = next(p for p in tail_norms(seed_phi(0, G)) if p.k == 0)
    assert p.left_norm**2 == pytest.approx(4 / 3 + 2 * G.h_x**2 / 3, rel=1e-12)


def test_constant_tail_norms():
    prof = tail_norms(Field(np.ones(G.shape), G))
    assert all(p.left_norm == 0 and p.right_norm == pytest.approx(2 * np.sqrt(G.slab_measure)) for p in prof)


def test_clip_examples():
    g = build_grid(1, 0.5, CrossSection((1.0,), (3,)))
    v = np.zeros(g.shape)
    v[0], v[1], v[2] = 1.5, -3.0, 0.2
    c = clip(Field(v, g)).values
    assert c[0, 0] == 1 and c[1, 0] == -1 and c[2, 0] == 0.2
    assert np.array_equal(clip(clip(Field(v, g))).values, c)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_clip_moves_towards_wells(seed):
    U = Field(np.random.default_rng(seed).uniform(-3, 3, G.shape), G)
    C = clip(U).values
    assert np.all(np.abs(C - 1) <= np.abs(U.values - 1)) and np.all(np.abs(C + 1) <= np.abs(U.values + 1))


def test_translate_matches_shift_operator():
    phi0 = seed_phi(0, G)
    assert np.array_equal(translate(phi0, 0).values, phi0.values)
    # P_k U(x) = U(x + k): shifting by +3 moves the transition to (-3, -2)
    assert np.array_equal(translate(phi0, 3).values, seed_phi(-3, G).values)
    assert np.array_equal(translate(phi0, -3).values, seed_phi(3, G).values)
    with pytest.raises(ValueError):
        translate(phi0, 12)


def test_translate_inverse_on_common_support():
    rng = np.random.default_rng(5)
    U = Field(rng.uniform(-1, 1, G.shape), G)
    back = translate(translate(U, 1), -1).values
    m = G.per_unit
    assert np.array_equal(back[m:], U.values[m:])


@pytest.mark.parametrize("k", [0, -2, 3])
def test_translate_is_pointwise_shift(k):
    U = Field(np.random.default_rng(9).uniform(-1, 1, G.shape), G)
    V = translate(U, k).values
    for i in range(G.nx):
        src = G.x[i] + k
        if -G.T <= src <= G.T:
            j = int(round((src + G.T) * G.per_unit))
            assert np.array_equal(V[i], U.values[j])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tail_norm_bounds(seed):
    U = clip(Field(np.random.default_rng(seed).uniform(-1.5, 1.5, G.shape), G))
    for p in tail_norms(U):
        assert 0 <= p.left_norm <= 2 * np.sqrt(G.slab_measure) + 1e-12
        assert 0 <= p.right_norm <= 2 * np.sqrt(G.slab_measure) + 1e-12


def test_normalization_shifts_seed():
    assert normalization_shifts(seed_phi(0, G), 0.5) == (0, 0)
    assert normalization_shifts(seed_phi(-2, G), 0.5) == (-2, -2)
    with pytest.raises(NoTransitionError):
        normalization_shifts(Field(np.ones(G.shape), G), 0.5)
    with pytest.raises(ValueError):
        normalization_shifts(seed_phi(0, G), 1.5)


@pytest.mark.parametrize("s", [-2, -1, 1, 2])
def test_normalization_shifts_covariant(s):
    x = G.x[:, None]
    U = Field(np.broadcast_to(-np.tanh(2 * (x - 0.3)), G.shape), G)
    k1, k2 = normalization_shifts(U, default_tau(G))
    assert normalization_shifts(translate(U, s), default_tau(G)) == (k1 - s, k2 - s)


def test_glue():
    one = Field(np.ones(G.shape), G)
    assert np.all(glue(one, 1).values == 1)
    U = Field(np.random.default_rng(2).uniform(-1, 1, G.shape), G)
    j = -1
    Z = glue(U, j).values
    x = G.x
    assert np.all(Z[x <= j] == 1)
    assert np.array_equal(Z[x > j + 1], U.values[x > j + 1])
    mid = int(np.flatnonzero(np.isclose(x, j + 0.5))[0])
    np.testing.assert_allclose(Z[mid], 0.5 + 0.5 * U.values[mid], rtol=0, atol=1e-15)
    assert np.all(np.abs(Z) <= 1)


def test_glue_seed_finite_energy(gl):
    Z = glue(seed_phi(1, G), -4)
    bd = total_energy(Z, 1.0, gl)
    assert np.isfinite(bd.total) and bd.total > 0
    assert np.all(Z.values[G.x <= -4] == 1)


def test_membership_proxy():
    assert in_gamma(seed_phi(0, G), tol=0.0)
    assert not in_gamma(Field(np.ones(G.shape), G), tol=1e-3)
    sup = tail_sup(seed_phi(0, G))
    assert sup[0][1] == 0 and sup[-1][2] == 0
