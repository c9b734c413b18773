import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qarc.laurent import LaurentPoly, d_q, random_poly
from qarc.qcalc import delta_symbol, epsilon_M, gamma_symbol, kronecker_symbol, psi_symbol
from qarc.schur import (
    ENSEMBLES,
    BandedOperator,
    PowerIterationError,
    compress,
    conditional_expectation,
    diagonal,
    identity,
    matrix_unit,
    op_norm,
    power_norm,
    random_operator,
    schur_apply,
    shift,
    symbol_matrix,
)

POINCARE = math.pi / math.sqrt(3)

operators = st.builds(
    random_operator,
    W=st.integers(1, 20),
    seed=st.integers(0, 10_000),
    ensemble=st.sampled_from(ENSEMBLES),
)
qs = st.sampled_from([0.2, 0.5, 0.9, 1.0])


def test_shape_validation_and_immutability():
    with pytest.raises(ValueError):
        BandedOperator(2, np.zeros((4, 4)))
    T = identity(2)
    with pytest.raises(ValueError):
        T.entries[0, 0] = 5


def test_entry_indexing_and_adjoint():
    T = matrix_unit(3, 2, -1)
    assert T.entry(2, -1) == 1 and T.entry(-1, 2) == 0
    assert T.adjoint().entry(-1, 2) == 1
    S = random_operator(3, 1)
    np.testing.assert_array_equal(S.adjoint().entries, S.entries.conj().T)


def test_json_roundtrip():
    T = random_operator(2, 5)
    U = BandedOperator.from_json(T.to_json())
    np.testing.assert_array_equal(U.entries, T.entries)


# schur_apply -----------------------------------------------------------------


@given(T=operators)
def test_constant_one_symbol_is_identity(T):
    np.testing.assert_array_equal(schur_apply(lambda j, k: 1.0, T).entries, T.entries)


@given(T=operators)
def test_kronecker_symbol_is_diagonal(T):
    np.testing.assert_array_equal(schur_apply(kronecker_symbol(), T).entries,
                                  conditional_expectation(T).entries)


@given(T=operators, q=st.sampled_from([0.2, 0.5, 0.9, 1 - 1e-7, 1.0]))
def test_fundamental_identities(T, q):
    E = conditional_expectation(T).entries
    lhs1 = T.entries - schur_apply(psi_symbol(q), schur_apply(delta_symbol(q), T)).entries
    lhs2 = T.entries - schur_apply(delta_symbol(q), schur_apply(psi_symbol(q), T)).entries
    assert np.all(np.abs(lhs1 - E) <= 1e-12 * np.abs(T.entries))
    assert np.all(np.abs(lhs2 - E) <= 1e-12 * np.abs(T.entries))


def test_symbol_matrix_accepts_array_and_checks_shape():
    a = np.ones((5, 5))
    assert symbol_matrix(a, 2) is a
    with pytest.raises(ValueError):
        symbol_matrix(np.ones((3, 3)), 2)


# op_norm ---------------------------------------------------------------------


@pytest.mark.parametrize("method", ["auto", "svd", "power"])
def test_op_norm_examples(method):
    assert op_norm(identity(5), method) == pytest.approx(1.0)
    assert op_norm(matrix_unit(4, 1, -3), method) == pytest.approx(1.0)
    assert op_norm(shift(8), method) == pytest.approx(1.0)


def test_shift_singular_values_brute_force():
    s = np.linalg.svd(shift(8).entries, compute_uv=False)
    assert np.allclose(sorted(s), [0.0] + [1.0] * 16)


def test_op_norm_rejects_unknown_method():
    with pytest.raises(ValueError):
        op_norm(identity(1), "qr")


def test_power_iteration_cap():
    T = random_operator(10, 3)
    with pytest.raises(PowerIterationError):
        power_norm(T, max_iter=2)


def test_power_norm_of_zero():
    assert power_norm(BandedOperator(2, np.zeros((5, 5)))) == 0.0


@given(T=operators)
def test_power_matches_svd(T):
    assert power_norm(T) == pytest.approx(op_norm(T, "svd"), rel=1e-6)


def test_auto_uses_power_above_svd_window():
    T = random_operator(70, 0, "rank_one")
    assert op_norm(T) == pytest.approx(op_norm(T, "svd"), rel=1e-9)


# conditional expectation and random operators --------------------------------


def test_conditional_expectation_examples():
    D = diagonal([1, 2j, 3, 4, 5])
    np.testing.assert_array_equal(conditional_expectation(D).entries, D.entries)
    T = random_operator(4, 2)
    E = conditional_expectation(T)
    np.testing.assert_array_equal(conditional_expectation(E).entries, E.entries)
    assert np.all(np.diag((T - E).entries) == 0)


@pytest.mark.parametrize("ensemble", ENSEMBLES)
def test_random_operator_deterministic(ensemble):
    a, b = random_operator(6, 42, ensemble), random_operator(6, 42, ensemble)
    np.testing.assert_array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, random_operator(6, 43, ensemble).entries)


def test_gaussian_nonzero():
    assert op_norm(random_operator(16, 0, "gaussian")) > 0


def test_sparse_density():
    T = random_operator(40, 0, "sparse")
    assert 0.05 < np.mean(T.entries != 0) < 0.15


def test_rank_one_norm_is_squared_vector_norm():
    T = random_operator(16, 7, "rank_one")
    # T = v v*, so ||T|| = ||v||^2 = trace(T)
    assert op_norm(T) == pytest.approx(np.trace(T.entries).real, rel=1e-12)
    assert np.linalg.matrix_rank(T.entries) == 1


# operator-level inequalities -------------------------------------------------


@given(T=operators, q=qs)
def test_psi_contraction(T, q):
    assert op_norm(schur_apply(psi_symbol(q), T)) <= POINCARE * op_norm(T) * (1 + 1e-9)


@given(T=operators, M=st.integers(0, 20))
def test_fejer_contraction(T, M):
    assert op_norm(schur_apply(gamma_symbol(M), T)) <= op_norm(T) * (1 + 1e-9)


@given(T=operators, q=qs)
def test_poincare_operator_level(T, q):
    off = T - conditional_expectation(T)
    assert op_norm(off) <= POINCARE * op_norm(schur_apply(delta_symbol(q), T)) * (1 + 1e-9)


@given(T=operators, q=qs)
def test_star_equivariance(T, q):
    a = schur_apply(delta_symbol(q), T.adjoint()).entries
    b = schur_apply(delta_symbol(q), T).adjoint().entries
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


@given(T=operators, q=qs, seed=st.integers(0, 1000))
def test_bimodularity(T, q, seed):
    rng = np.random.default_rng(seed)
    n = 2 * T.W + 1
    D1 = diagonal(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    D2 = diagonal(rng.standard_normal(n))
    a = schur_apply(delta_symbol(q), D1 @ T @ D2).entries
    b = (D1 @ schur_apply(delta_symbol(q), T) @ D2).entries
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12 * np.abs(b).max())


@given(T=operators, q=qs, M=st.sampled_from([1, 4, 16]))
def test_epsilon_bound_random(T, q, M):
    lhs = op_norm(T - schur_apply(gamma_symbol(M), T))
    assert lhs <= epsilon_M(M).value * op_norm(schur_apply(delta_symbol(q), T)) * (1 + 1e-9)


@given(seed=st.integers(0, 10_000), q=qs, M=st.sampled_from([1, 4, 16]))
def test_epsilon_bound_on_laurent_compressions(seed, q, M):
    f = random_poly(M + 3, np.random.default_rng(seed))
    T = compress(f, 24)
    lhs = op_norm(T - schur_apply(gamma_symbol(M), T))
    assert lhs <= epsilon_M(M).value * op_norm(schur_apply(delta_symbol(q), T)) * (1 + 1e-9)


def test_compress_entries_and_derivative():
    f = LaurentPoly({-2: 1.5, 0: 1, 3: 2j})
    T = compress(f, 4)
    for j in range(-4, 5):
        for k in range(-4, 5):
            assert T.entry(j, k) == f[j - k]
    # the difference symbol acts on Laurent operators as d_q
    np.testing.assert_allclose(schur_apply(delta_symbol(0.7), T).entries,
                               compress(d_q(f, 0.7), 4).entries, rtol=1e-14)
