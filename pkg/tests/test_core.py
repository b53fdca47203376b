import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oumatrix.core import (
    ConfigurationError,
    ContractError,
    EnsembleBatch,
    GinibreMatrix,
    HermitianMatrix,
    OUParams,
    QuaternionArgument,
    SquareComplexMatrix,
    block_trace,
    quaternion_embed,
    rng_stream,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def test_square_matrix_validation():
    with pytest.raises(ContractError):
        SquareComplexMatrix(np.zeros((2, 3)))
    with pytest.raises(ContractError):
        SquareComplexMatrix(np.array([[np.nan]]))
    m = SquareComplexMatrix([[1 + 2j, 0], [3, 4j]])
    assert m.n == 2
    assert np.array_equal(m.x + 1j * m.y, m.entries)


def test_hermitian_from_any_is_exact(rng):
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = HermitianMatrix.from_any(m)
    assert np.array_equal(h.entries, h.entries.conj().T)
    assert np.array_equal(h.x, h.x.T)
    assert np.array_equal(h.y, -h.y.T)
    with pytest.raises(ContractError):
        HermitianMatrix(m)


def test_ginibre_accepts_anything_finite(rng):
    assert GinibreMatrix(rng.normal(size=(3, 3))).n == 3


def test_quaternion_embed_example():
    q = QuaternionArgument(1 + 2j, 0.5 - 1j)
    expected = np.array([[1 + 2j, -(0.5 + 1j)], [0.5 - 1j, 1 - 2j]])
    assert np.array_equal(quaternion_embed(q), expected)
    # det of the embedding is |z|^2 + |w|^2
    assert np.isclose(np.linalg.det(q.embed()), abs(q.z) ** 2 + abs(q.w) ** 2)


@given(cplx, cplx)
def test_quaternion_component_round_trip(z, w):
    q = QuaternionArgument(z, w)
    back = QuaternionArgument.from_components(*q.components())
    assert back.z == q.z and back.w == q.w


def test_block_trace_example():
    m = np.arange(16.0).reshape(4, 4)
    # blocks [[0,1],[4,5]] etc; traces of the four 2x2 blocks
    assert np.array_equal(block_trace(m, 2), np.array([[5.0, 9.0], [21.0, 25.0]]))


def test_block_trace_identity_and_shape():
    assert np.array_equal(block_trace(np.eye(6), 3), np.diag([3.0, 3.0]))
    with pytest.raises(ContractError):
        block_trace(np.eye(5), 2)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1), finite)
def test_block_trace_is_linear(n, seed, c):
    g = np.random.default_rng(seed)
    a = g.normal(size=(2 * n, 2 * n)) + 1j * g.normal(size=(2 * n, 2 * n))
    b = g.normal(size=(2 * n, 2 * n))
    lhs = block_trace(a + c * b, n)
    rhs = block_trace(a, n) + c * block_trace(b, n)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9 * (1 + abs(c)))


def test_block_trace_batched(rng):
    m = rng.normal(size=(5, 4, 4))
    out = block_trace(m, 2)
    assert out.shape == (5, 2, 2)
    assert np.allclose(out[3], block_trace(m[3], 2))


def test_ou_params_defaults_and_validation():
    assert OUParams(a=0.5).dt == pytest.approx(2e-4)
    assert OUParams(a=0.0).dt == pytest.approx(1e-4)
    for bad in (dict(a=-1), dict(n=0), dict(n=2.5), dict(dt=0.0), dict(seed=-1), dict(seed=2**64)):
        with pytest.raises(ConfigurationError):
            OUParams(**bad)


def test_ensemble_batch_shapes():
    p = OUParams(n=2)
    b = EnsembleBatch(p, 1.0, np.zeros((2, 2)), np.zeros((2, 2)))
    assert len(b) == 1 and b.n == 2
    with pytest.raises(ContractError):
        EnsembleBatch(p, 1.0, np.zeros((3, 2, 4)), np.zeros((2, 2)))
    with pytest.raises(ContractError):
        EnsembleBatch(p, 1.0, np.zeros((3, 2, 2)), np.zeros((2, 2)), kind="real")


def test_rng_streams_are_deterministic_and_distinct():
    a = rng_stream(5, 3).standard_normal(8)
    assert np.array_equal(a, rng_stream(5, 3).standard_normal(8))
    assert not np.array_equal(a, rng_stream(5, 4).standard_normal(8))
    assert not np.array_equal(a, rng_stream(6, 3).standard_normal(8))
