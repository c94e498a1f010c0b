"""Diagram data model: builders, combinators, validation, serialisation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinzx import (
    adjoint,
    cap,
    compose,
    cup,
    deserialize,
    empty_diagram,
    evaluate,
    identity,
    matrix_box,
    permutation_diagram,
    serialize,
    swap,
    tensor,
    tensor_all,
    to_dot,
    x_spider,
    z_spider,
)
from spinzx.errors import (
    BoundaryMismatch,
    DimMismatch,
    ParamLengthMismatch,
    ParseError,
    ValidationError,
)
from spinzx.oracles import permutation_unitary


def mat(D):
    """Matrix of a diagram: rows indexed by outputs, columns by inputs."""
    T = evaluate(D)
    n_in = int(np.prod(D.input_dims)) if D.n_in else 1
    n_out = int(np.prod(D.output_dims)) if D.n_out else 1
    return T.reshape(n_in, n_out).T


def test_identity_shapes():
    D = identity(3, 2)
    assert D.n_in == 2 and D.n_out == 2
    assert list(D.input_dims) == [3, 3]


def test_compose_dim_mismatch_rejected():
    with pytest.raises((DimMismatch, BoundaryMismatch, ValidationError)):
        compose(identity(2), identity(3))


def test_tensor_is_kron_on_matrices():
    A = matrix_box([[1, 2], [3, 4]], [2], [2])
    B = matrix_box([[0, 1], [1, 0]], [2], [2])
    np.testing.assert_allclose(
        mat(tensor(A, B)), np.kron(mat(A), mat(B)), atol=1e-12)


def test_compose_is_matrix_product():
    A = matrix_box([[1, 2], [3, 4]], [2], [2])
    B = matrix_box([[0, 1j], [1, 0]], [2], [2])
    np.testing.assert_allclose(mat(compose(A, B)), mat(B) @ mat(A), atol=1e-12)


def test_adjoint_is_conjugate_transpose():
    A = matrix_box([[1, 2j], [3, 4]], [2], [2])
    np.testing.assert_allclose(mat(adjoint(A)), mat(A).conj().T, atol=1e-12)


def test_cup_cap_snake_identity():
    # (cap x id) . (id x cup) == id
    d = 3
    snake = compose(tensor(identity(d), cup(d)), tensor(cap(d), identity(d)))
    np.testing.assert_allclose(mat(snake), np.eye(d), atol=1e-12)


def test_swap_matrix():
    np.testing.assert_allclose(
        mat(swap(2, 2)), permutation_unitary([1, 0], 2), atol=1e-12)


def test_spider_param_length_validation():
    with pytest.raises(ParamLengthMismatch):
        z_spider(1, 1, 2, params=(1.0, 2.0))


def test_serialize_round_trip():
    D = compose(tensor(z_spider(1, 1, 2, params=(0.5j,)), x_spider(1, 1, 2, 1)),
                swap(2, 2))
    E = deserialize(serialize(D))
    np.testing.assert_allclose(evaluate(E), evaluate(D), atol=1e-12)


def test_deserialize_malformed_reports_location():
    with pytest.raises(ParseError) as exc:
        deserialize('{"nodes": [,]}')
    msg = str(exc.value)
    assert "line" in msg and "column" in msg


def test_deserialize_invalid_schema():
    with pytest.raises(ParseError):
        deserialize('{"nodes": "nope"}')


def test_to_dot_mentions_nodes():
    dot = to_dot(z_spider(2, 1, 2))
    assert dot.startswith("digraph") or dot.startswith("graph")
    assert "Z" in dot


def test_empty_diagram_scalar_one():
    assert evaluate(empty_diagram()).shape == ()
    assert complex(evaluate(empty_diagram())) == 1


def test_tensor_all_of_nothing_is_empty():
    D = tensor_all([])
    assert D.n_in == 0 and D.n_out == 0


@settings(deadline=None, max_examples=40)
@given(st.permutations(list(range(4))))
def test_permutation_diagram_matches_unitary(perm):
    D = permutation_diagram([2] * 4, list(perm))
    np.testing.assert_allclose(
        mat(D), permutation_unitary(list(perm), 4), atol=1e-12)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 2), st.integers(0, 2), st.integers(2, 4))
def test_z_spider_copies_basis(n_in, n_out, d):
    # a plain Z spider is the generalised copy tensor: all-equal entries 1
    D = (z_spider(0, 0, [], dim=d) if n_in + n_out == 0
         else z_spider(n_in, n_out, d))
    T = evaluate(D)
    expect = np.zeros([d] * (n_in + n_out))
    if n_in + n_out == 0:
        expect = np.array(float(d))
    else:
        for k in range(d):
            expect[(k,) * (n_in + n_out)] = 1.0
    np.testing.assert_allclose(T, expect, atol=1e-12)
