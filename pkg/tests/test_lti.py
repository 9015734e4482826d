from math import factorial

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nihigs import massspring as ms
from nihigs.errors import DimensionError, NonFiniteError, SingularMatrixError
from nihigs.lti import (
    ContinuousModel,
    StateSpaceModel,
    is_minimal,
    make_model,
    plant_step,
    transfer_eval,
    zoh_discretize,
)

from conftest import random_stable, well_conditioned


def taylor_zoh(Ac, Bc, h, terms=60):
    """Truncated series for exp(Ac h) and int_0^h exp(Ac s) ds Bc."""
    n = Ac.shape[0]
    A = np.zeros((n, n))
    G = np.zeros((n, n))
    Ak = np.eye(n)
    for k in range(terms):
        A += Ak * h**k / factorial(k)
        G += Ak * h ** (k + 1) / factorial(k + 1)
        Ak = Ak @ Ac
    return A, G @ Bc


def pbh_minimal(m):
    """Popov-Belevitch-Hautus test, independent of the Kalman matrices."""
    n = m.n
    ok_c = ok_o = True
    for lam in np.linalg.eigvals(m.A):
        M = m.A - lam * np.eye(n)
        ok_c &= np.linalg.matrix_rank(np.hstack([M, m.B])) == n
        ok_o &= np.linalg.matrix_rank(np.vstack([M, m.C])) == n
    return ok_c, ok_o


# --- make_model -------------------------------------------------------------


def test_make_model_scalar():
    m = make_model([[0]], [[1]], [[1]])
    assert m.n == 1
    assert m.A.shape == (1, 1)


def test_make_model_demo_matrices():
    m = make_model(ms.closed_form_A(), ms.closed_form_B(), [[0, 0, 1, 0]])
    assert m.n == 4


def test_make_model_dimension_mismatch():
    with pytest.raises(DimensionError):
        make_model(np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((1, 2)))


@pytest.mark.parametrize(
    "A, B, C",
    [
        (np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 3))),
        (np.eye(2), np.zeros((2, 2)), np.zeros((1, 2))),  # MIMO input
        (np.eye(2), np.zeros((2, 1)), np.zeros((2, 2))),  # MIMO output
        (np.eye(2), np.zeros((2, 1)), np.zeros((1, 3))),
    ],
)
def test_make_model_rejects_bad_shapes(A, B, C):
    with pytest.raises(DimensionError):
        make_model(A, B, C)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_make_model_rejects_non_finite(bad):
    with pytest.raises(NonFiniteError):
        make_model([[bad]], [[1]], [[1]])


def test_model_is_immutable():
    m = make_model([[0.5]], [[1]], [[1]])
    with pytest.raises(ValueError):
        m.A[0, 0] = 1.0
    with pytest.raises(AttributeError):
        m.A = np.eye(1)


# --- zoh_discretize ---------------------------------------------------------


@pytest.mark.parametrize("h", [0.01, 0.5, 3.0])
def test_zoh_zero_dynamics(h):
    b = np.array([[1.0], [-2.0], [0.5]])
    m = zoh_discretize(ContinuousModel(np.zeros((3, 3)), b, np.ones((1, 3))), h)
    assert_allclose(m.A, np.eye(3), atol=1e-15)
    assert_allclose(m.B, h * b, rtol=1e-14)


def test_zoh_mass_spring_matches_closed_form(demo_model):
    assert np.max(np.abs(demo_model.A - ms.closed_form_A())) <= 1e-9
    assert np.max(np.abs(demo_model.B - ms.closed_form_B())) <= 1e-9
    assert np.array_equal(demo_model.C, [[0, 0, 1, 0]])


def test_printed_input_entry_contradicts_dc_gain(demo_model):
    # the published last entry of B flips the sign of the s2 term
    B = ms.closed_form_B_as_printed()
    assert abs(B[3, 0] - demo_model.B[3, 0]) > 1.0
    g1 = transfer_eval(make_model(ms.closed_form_A(), B, demo_model.C), 1.0)
    assert g1 == pytest.approx(0.5308, abs=1e-4)
    assert abs(g1 - 1.5) > 0.9


def test_mass_spring_continuous_matrices():
    cm = ms.continuous_model()
    expected = [[0, 1, 0, 0], [-75, 0, 25, 0], [0, 0, 0, 1], [50, 0, -50, 0]]
    assert_allclose(cm.Ac, expected, rtol=1e-15)
    assert_allclose(cm.Bc[:, 0], [0, 0, 0, 50], rtol=1e-15)


@pytest.mark.parametrize("seed", range(8))
def test_zoh_matches_taylor_series(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 5)
    Ac = rng.standard_normal((n, n))
    Bc = rng.standard_normal((n, 1))
    h = 0.3
    m = zoh_discretize(ContinuousModel(Ac, Bc, np.ones((1, n))), h)
    A_ref, B_ref = taylor_zoh(Ac, Bc, h)
    assert_allclose(m.A, A_ref, atol=1e-12)
    assert_allclose(m.B, B_ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_zoh_halving_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    # Hurwitz: shift a random matrix left of its spectral abscissa
    M = rng.standard_normal((n, n))
    Ac = M - (max(np.linalg.eigvals(M).real) + rng.uniform(0.1, 1.0)) * np.eye(n)
    cm = ContinuousModel(Ac, rng.standard_normal((n, 1)), np.ones((1, n)))
    h = rng.uniform(0.01, 1.0)
    full = zoh_discretize(cm, h)
    half = zoh_discretize(cm, h / 2)
    assert_allclose(full.A, half.A @ half.A, atol=1e-10)
    assert_allclose(full.B, (half.A + np.eye(n)) @ half.B, atol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_exponential_inverse(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    Ac = rng.standard_normal((n, n))
    h = rng.uniform(0.01, 1.0)
    fwd = zoh_discretize(ContinuousModel(Ac, np.ones((n, 1)), np.ones((1, n))), h)
    bwd = zoh_discretize(ContinuousModel(-Ac, np.ones((n, 1)), np.ones((1, n))), h)
    assert_allclose(fwd.A @ bwd.A, np.eye(n), atol=1e-10)


@pytest.mark.parametrize("h", [0.0, -1.0, np.nan, np.inf])
def test_zoh_rejects_bad_period(h):
    with pytest.raises(ValueError):
        zoh_discretize(ms.continuous_model(), h)


def test_zoh_overflow():
    cm = ContinuousModel([[1e6]], [[1]], [[1]])
    with pytest.raises(NonFiniteError):
        zoh_discretize(cm, 1.0)


# --- transfer_eval ----------------------------------------------------------


def test_dc_gain_demo(demo_model):
    assert transfer_eval(demo_model, 1.0) == pytest.approx(1.5, abs=1e-9)


def test_dc_gain_scalar():
    assert transfer_eval(make_model([[0]], [[1]], [[1]]), 1.0) == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_transfer_neumann_series(seed):
    rng = np.random.default_rng(seed)
    A = random_stable(rng, 3, radius=0.8)
    m = make_model(A, rng.standard_normal((3, 1)), rng.standard_normal((1, 3)))
    for z in (1.0, -1.0, 2.5):
        # G(z) = sum_i C A^i B / z^(i+1)
        total, term = 0.0, m.B / z
        for _ in range(2000):
            total += (m.C @ term).item()
            term = m.A @ term / z
            if np.max(np.abs(term)) < 1e-18:
                break
        assert transfer_eval(m, z) == pytest.approx(total, abs=1e-8)


def test_transfer_singular():
    m = make_model(np.eye(2), [[1], [0]], [[1, 0]])
    with pytest.raises(SingularMatrixError) as info:
        transfer_eval(m, 1.0)
    assert info.value.smallest_singular_value == pytest.approx(0.0, abs=1e-15)


def test_transfer_near_singular():
    m = make_model([[1 - 1e-14]], [[1]], [[1]])
    with pytest.raises(SingularMatrixError):
        transfer_eval(m, 1.0)


# --- is_minimal -------------------------------------------------------------


def test_demo_is_minimal(demo_model):
    res = is_minimal(demo_model)
    assert res.minimal
    assert pbh_minimal(demo_model) == (True, True)


def test_not_minimal_diagonal():
    m = make_model(np.eye(2), [[1], [0]], [[1, 0]])
    res = is_minimal(m)
    assert not res.controllable
    assert not res.observable
    assert not res.minimal
    assert res.controllability_rank == 1


def test_scalar_minimal():
    assert is_minimal(make_model([[0]], [[1]], [[1]])).minimal


def test_zero_model_rank_zero():
    res = is_minimal(make_model(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((1, 2))))
    assert res.controllability_rank == 0
    assert res.observability_rank == 0


@pytest.mark.parametrize("seed", range(10))
def test_minimality_similarity_invariant(seed):
    rng = np.random.default_rng(seed)
    n = 3
    A = random_stable(rng, n)
    B = rng.standard_normal((n, 1))
    C = rng.standard_normal((1, n))
    if seed % 2:
        # knock out a mode to get a non-minimal realization
        A = np.diag([0.5, 0.3, -0.2])
        B = np.array([[1.0], [1.0], [0.0]])
    m = make_model(A, B, C)
    base = is_minimal(m)
    assert base.minimal == all(pbh_minimal(m))
    T = well_conditioned(rng, n)
    moved = is_minimal(m.similarity(T))
    assert moved[:3] == base[:3]


# --- plant_step -------------------------------------------------------------


def test_plant_step_zero(demo_model):
    x_next, y = plant_step(demo_model, np.zeros(4), 0.0)
    assert np.all(x_next == 0) and y == 0


def test_plant_step_scalar():
    x_next, y = plant_step(make_model([[0]], [[1]], [[1]]), [2.0], 3.0)
    assert x_next.tolist() == [3.0]
    assert y == 2.0


def test_plant_step_output_before_update(demo_model):
    _, y = plant_step(demo_model, ms.X0, 0.0)
    assert y == 5.0


def test_plant_step_length_mismatch(demo_model):
    with pytest.raises(DimensionError):
        plant_step(demo_model, np.zeros(3), 0.0)


def test_similarity_roundtrip(rng):
    m = make_model(random_stable(rng, 3), rng.standard_normal((3, 1)), rng.standard_normal((1, 3)))
    T = well_conditioned(rng, 3)
    back = m.similarity(T).similarity(np.linalg.inv(T))
    assert_allclose(back.A, m.A, atol=1e-12)
    assert isinstance(back, StateSpaceModel)
