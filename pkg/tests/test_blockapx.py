import json
import math

import numpy as np
import pytest

from mclab.blockapx import (
    PartitionPair,
    block_approximate_pair,
    block_average,
    block_transfer_bound,
    clump_perm,
    hidden_block_witness,
    is_block_constant,
    is_refinement,
    limit_estimate,
    partition_from_labels,
    refinement_bound,
    refinement_sequence,
    size_bound,
)
from mclab.cutmetric import cut_norm_exact
from mclab.errors import DimensionError, PreconditionError
from mclab.graphon import (
    constant,
    diagonal_blocks,
    gen_diagonal_blocks,
    gen_half_rows,
    gen_quasirandom,
    half_plane,
    l1_distance,
)
from mclab.matcore import apply_perm, avg_frobenius


def random_partition(rng, size):
    return rng.integers(0, rng.integers(1, size + 1), size=size)


# --- partitions ---
def test_partition_from_labels_orders_by_smallest_member():
    assert partition_from_labels([2, 0, 2, 1]) == ((0, 2), (1,), (3,))


def test_partition_pair_must_cover_indices():
    with pytest.raises(PreconditionError):
        PartitionPair(((0,),), ((0, 1),), (2, 2))


def test_regular_partition():
    part = PartitionPair.regular(4, 6, 2, 3)
    assert part.rows == ((0, 1), (2, 3))
    assert part.cols == ((0, 1), (2, 3), (4, 5))
    assert part.block_count == 6


def test_is_refinement():
    coarse = PartitionPair.regular(4, 4, 2, 2)
    assert is_refinement(PartitionPair.singletons(4, 4), coarse)
    assert is_refinement(coarse, PartitionPair.whole(4, 4))
    assert not is_refinement(PartitionPair.whole(4, 4), coarse)


# --- block averages ---
def test_block_average_examples(rng):
    A = rng.standard_normal((4, 5))
    np.testing.assert_array_equal(block_average(A, PartitionPair.singletons(4, 5)), A)
    np.testing.assert_allclose(block_average(A, PartitionPair.whole(4, 5)), np.full((4, 5), A.mean()))
    blocks = gen_diagonal_blocks(4)
    np.testing.assert_array_equal(block_average(blocks, PartitionPair.regular(4, 4, 2, 2)), blocks)


def test_block_average_keeps_constant_blocks_exact():
    A = np.full((3, 3), 0.1)
    np.testing.assert_array_equal(block_average(A, PartitionPair.whole(3, 3)), A)
    assert is_block_constant(A, PartitionPair.whole(3, 3), tol=0.0)


def test_block_average_shape_check():
    with pytest.raises(DimensionError):
        block_average(np.ones((3, 3)), PartitionPair.whole(3, 4))


def test_block_average_contracts_cut_norm(rng):
    for _ in range(30):
        m, n = rng.integers(2, 9, size=2)
        A = rng.uniform(-1.0, 1.0, size=(m, n))
        part = PartitionPair.from_labels(random_partition(rng, m), random_partition(rng, n))
        assert cut_norm_exact(block_average(A, part)).value <= cut_norm_exact(A).value + 1e-12


def test_clump_perm_makes_classes_contiguous():
    part = PartitionPair.from_labels([0, 1, 0, 1, 1], [0, 0, 1])
    perm, clumped = clump_perm(part)
    assert clumped.rows == ((0, 1, 2), (3, 4))
    assert clumped.cols == ((0, 1), (2,))
    np.testing.assert_array_equal(perm.rows, [1, 3, 4, 0, 2])
    A = np.array([[0, 1, 0, 1, 1]], dtype=float).T @ np.ones((1, 3))
    assert is_block_constant(apply_perm(A, perm), clumped)


# --- simultaneous block approximation ---
def test_pair_of_zero_matrices():
    result = block_approximate_pair(np.zeros((6, 6)), np.zeros((6, 6)), q=1.0, eps=0.5)
    np.testing.assert_array_equal(result.A, np.zeros((6, 6)))
    assert result.block_count == 1
    assert result.err_x == result.err_y == 0.0


def test_constant_matrices_collapse_to_one_block():
    X = np.full((16, 16), 0.5)
    result = block_approximate_pair(X, X, q=1.0, eps=0.5)
    assert result.block_count == 1
    assert result.err_x <= 0.5
    assert result.err_x == pytest.approx(avg_frobenius(apply_perm(X, result.perm) - result.A))


def test_random_rank_two_pair(rng):
    m = n = 32
    X = rng.uniform(-1, 1, size=(m, 2)) @ rng.uniform(-1, 1, size=(2, n)) / 2.0
    Y = rng.uniform(-1, 1, size=(m, 2)) @ rng.uniform(-1, 1, size=(2, n)) / 2.0
    result = block_approximate_pair(X, Y, q=2.0, eps=0.5)
    assert result.err_x <= 0.5 and result.err_y <= 0.5
    assert is_block_constant(result.A, result.partition)
    assert is_block_constant(result.B, result.partition)
    assert math.log10(result.block_count) <= result.log10_block_bound


def test_pair_preconditions():
    with pytest.raises(PreconditionError):
        block_approximate_pair(2 * np.ones((3, 3)), np.zeros((3, 3)), q=1.0, eps=0.5)
    with pytest.raises(PreconditionError):
        block_approximate_pair(np.zeros((3, 3)), np.zeros((3, 3)), q=1.0, eps=1.5)
    H = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float)
    with pytest.raises(PreconditionError):
        block_approximate_pair(H, np.zeros((4, 4)), q=1.0, eps=0.5)


# --- transfer inequality ---
def test_transfer_bound_tight_when_masks_agree(rng):
    part = PartitionPair.regular(6, 6, 2, 3)
    A = block_average(rng.uniform(-1, 1, size=(6, 6)), part)
    B = block_average(rng.uniform(-1, 1, size=(6, 6)), part)
    P = (rng.uniform(size=(6, 6)) < 0.5).astype(float)
    bound = block_transfer_bound(A, B, part, P, P)
    assert bound.cut_distance == 0.0
    assert bound.lhs == pytest.approx(bound.rhs)


def test_transfer_bound_equal_matrices(rng):
    part = PartitionPair.regular(4, 4, 2, 2)
    A = block_average(rng.uniform(size=(4, 4)), part)
    bound = block_transfer_bound(A, A, part, np.ones((4, 4)), rng.uniform(size=(4, 4)))
    assert bound.lhs == 0.0 and bound.holds


def test_transfer_bound_random_instances(rng):
    for _ in range(60):
        part = PartitionPair.from_labels(random_partition(rng, 6), random_partition(rng, 6))
        A = block_average(rng.uniform(-1, 1, size=(6, 6)), part)
        B = block_average(rng.uniform(-1, 1, size=(6, 6)), part)
        P = (rng.uniform(size=(6, 6)) < 0.5).astype(float)
        Q = rng.uniform(size=(6, 6))
        bound = block_transfer_bound(A, B, part, P, Q)
        assert bound.cut_exact
        assert bound.holds


def test_transfer_bound_needs_block_constant_inputs(rng):
    with pytest.raises(PreconditionError):
        block_transfer_bound(rng.uniform(size=(4, 4)), np.zeros((4, 4)), PartitionPair.whole(4, 4),
                             np.ones((4, 4)), np.ones((4, 4)))


# --- refinement sequences ---
def test_refinement_of_zero_matrix():
    seq = refinement_sequence(np.zeros((5, 7)), 3)
    for level in seq.levels:
        assert len(level.partition.rows) == 1 and len(level.partition.cols) == 1
        assert level.residual_bound == 0.0
        assert level.status == "certified"


def test_refinement_of_ones_matrix():
    k = 12
    seq = refinement_sequence(np.ones((k, k)), 4)
    for level in seq.levels[1:]:
        assert level.retained == 1
        assert len(level.partition.rows) == 1
        np.testing.assert_array_equal(level.averaged, np.ones((k, k)))
        assert level.residual_bound == 0.0


def test_refinement_of_random_signs(rng):
    A = rng.choice([-1.0, 1.0], size=(64, 64))
    seq = refinement_sequence(A, 4)
    assert seq.is_nested()
    for level in seq.levels[1:]:
        assert len(level.partition.rows) <= size_bound(level.j)
        assert len(level.partition.cols) <= size_bound(level.j)
        assert level.residual_bound <= refinement_bound(level.j)
        assert level.status == "certified"


def test_refinement_json_is_parseable():
    payload = json.loads(refinement_sequence(gen_half_rows(8), 2).to_json())
    assert payload["shape"] == [8, 8]
    assert [level["j"] for level in payload["levels"]] == [1, 2]
    assert {"status", "residualBound", "bound", "retained"} <= set(payload["levels"][0])


def test_refinement_preconditions():
    with pytest.raises(PreconditionError):
        refinement_sequence(2 * np.ones((3, 3)), 2)
    with pytest.raises(PreconditionError):
        refinement_sequence(np.ones((3, 3)), 0)


def test_hidden_block_witness_of_half_rows():
    P = gen_half_rows(8)
    B = hidden_block_witness(P, 2)
    np.testing.assert_array_equal(B, 1.0 - P)
    assert avg_frobenius(B * P) == 0.0


# --- limit estimates ---
def test_limit_of_identical_block_masks():
    est = limit_estimate([gen_diagonal_blocks(8), gen_diagonal_blocks(8)], 3)
    assert l1_distance(est, diagonal_blocks()) == pytest.approx(0.0, abs=1e-12)


def test_limit_of_half_rows():
    est = limit_estimate([gen_half_rows(k) for k in (16, 32, 64)], 2)
    assert l1_distance(est, half_plane()) <= 0.1


def test_limit_of_quasirandom():
    est = limit_estimate([gen_quasirandom(k) for k in (32, 64, 128)], 2)
    assert l1_distance(est, constant(0.5)) <= 0.15


def test_limit_estimate_preconditions():
    with pytest.raises(PreconditionError):
        limit_estimate([], 2)
    with pytest.raises(PreconditionError):
        limit_estimate([gen_half_rows(8), gen_half_rows(4)], 2)
