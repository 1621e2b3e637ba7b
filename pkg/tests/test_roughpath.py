import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_step_path
from pathwise import (
    AreaProcess,
    CadlagPath,
    GeneratorConfig,
    Partition,
    RoughPathTriple,
    area_n,
    chen_defect,
    discretize,
    generate,
    lebesgue_sequence,
    limit_area,
    rough_distance,
    rough_seminorm,
    superadditivity_defect,
    two_param_p_variation,
)
from pathwise.roughpath import lift, limit_triple, running_integral
from pathwise.variation import VariationTable

STAIR = CadlagPath([0.0, 0.5, 1.0], [0.0, 1.0, 3.0])


def test_staircase_area_by_hand():
    A = area_n(STAIR, Partition.full(STAIR.times))
    assert A(0.0, 1.0)[0, 0] == 2.0


def test_area_vanishes_inside_a_block(rng):
    S = random_step_path(rng, 20, 2)
    P = Partition(np.array([0, 5, 14, 20]), S.times)
    A = area_n(S, P)
    for i in range(5, 14):
        for j in range(i + 1, 14):
            assert np.all(A.values(i, j) == 0.0)
        # closing at the next partition point only cancels up to rounding
        assert np.abs(A.values(i, 14)).max() <= 1e-15 * max(1.0, np.abs(S.values).max() ** 2)


def test_area_matches_step_by_step_oracle(rng):
    S = random_step_path(rng, 25, 2)
    P = Partition(np.array([0, 3, 7, 8, 19, 25]), S.times)
    A = area_n(S, P)
    for i, j in [(0, 25), (2, 9), (7, 8), (4, 24), (10, 21)]:
        np.testing.assert_allclose(A.values(i, j)[0], oracles.area(S.values, P.indices, i, j), atol=1e-13)
    run = running_integral(S, S, P)
    np.testing.assert_allclose(run[-1], oracles.area(S.values, P.indices, 0, 25) + np.outer(
        S.values[0], S.values[-1] - S.values[0]), atol=1e-13)


def test_linear_path_area_converges_to_half():
    gaps = []
    for k in (4, 8, 12):
        t = np.linspace(0, 1, 2**k + 1)
        S = CadlagPath(t, t)
        gaps.append(abs(area_n(S, Partition.full(t))(0.0, 1.0)[0, 0] - 0.5))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 2e-4


def test_area_algebra_concatenates_terms(rng):
    S = random_step_path(rng, 12)
    A = area_n(S, Partition.full(S.times))
    B = area_n(S, Partition.trivial(S.times))
    np.testing.assert_allclose((A - B).dense(), A.dense() - B.dense(), atol=1e-14)
    np.testing.assert_allclose(A.scaled(-2.0).dense(), -2.0 * A.dense(), atol=1e-14)
    assert AreaProcess.zero(S.times, 1).sup_norm() == 0.0


def test_zero_area_and_monotone_reduction():
    t = np.linspace(0, 1, 6)
    assert two_param_p_variation(np.zeros((6, 6)), 1.0) == 0.0
    g = np.array([0.0, 0.2, 0.5, 0.6, 0.9, 1.4])
    dense = g[None, :] - g[:, None]
    assert two_param_p_variation(np.triu(dense, 1), 1.0) == pytest.approx(1.4)
    del t


def test_three_point_staircase_area_variation_by_enumeration():
    A = area_n(STAIR, Partition.full(STAIR.times))
    dense = np.abs(A.dense()[:, :, 0, 0])
    # partitions of {0,1,2}: [0,2] or [0,1],[1,2]
    expected = max(dense[0, 2], dense[0, 1] + dense[1, 2])
    assert two_param_p_variation(A, 1.0) == expected


def test_max_of_controls_is_not_superadditive():
    w1 = np.array([[0, 1, 1], [0, 0, 0], [0, 0, 0]], dtype=float)
    w2 = np.array([[0, 0, 1], [0, 0, 1], [0, 0, 0]], dtype=float)
    table = VariationTable(np.array([0.0, 0.5, 1.0]), np.maximum(w1, w2))
    assert superadditivity_defect(table) == 1.0
    assert superadditivity_defect(VariationTable(np.array([0.0, 1.0]), np.zeros((2, 2)))) == 0.0


def test_chen_exact_for_lifted_paths(rng):
    S = random_step_path(rng, 14, 2)
    for idx in ([0, 14], [0, 6, 14], list(range(15))):
        X = lift(S, Partition(np.array(idx), S.times))
        assert chen_defect(X) <= 1e-13
        assert oracles.chen_gap(X.xx_dense(), X.Z.values, X.X.values) <= 1e-13


def test_chen_detects_a_zero_area():
    S = CadlagPath([0.0, 0.5, 1.0], [[0.0], [1.0], [3.0]])
    X = RoughPathTriple(S, S, AreaProcess.zero(S.times, 1))
    assert chen_defect(X) == pytest.approx(2.0)


def test_limit_triple_chen_defect_within_triangle_bound():
    S = generate(GeneratorConfig(n_steps=300, seed=8))
    seq = lebesgue_sequence(S, 5, base=0.5)
    X = limit_triple(S, seq)
    Sn = discretize(S, seq.level(5)).values
    # XX is Chen for (S, S^n, A^n); replacing S^n by S costs ‖S^n − S‖∞·|S_{u,t}|
    bound = 2 * np.abs(Sn - S.values).max() * (S.values.max() - S.values.min())
    assert chen_defect(X) <= bound + 1e-12


def test_limit_area_cauchy_zero_for_resolved_path():
    t = np.linspace(0, 1, 5)
    S = CadlagPath(t, [0.0, 1.0, 2.0, 3.0, 4.0])
    seq = lebesgue_sequence(S, 3)
    _, cauchy = limit_area(S, seq)
    assert seq.level(2).is_full() and cauchy == 0.0


def test_rough_distance_basic_properties(rng):
    S = random_step_path(rng, 20)
    X1 = lift(S, Partition(np.array([0, 10, 20]), S.times))
    X2 = lift(S, Partition.full(S.times))
    assert rough_distance(X1, X1, 2.5) == 0.0
    assert rough_distance(X1, X2, 2.5) == pytest.approx(rough_distance(X2, X1, 2.5), rel=1e-12)
    assert rough_seminorm(X2, 2.5) > 0


def test_rough_distance_shrinks_with_level():
    S = generate(GeneratorConfig(n_steps=1024, seed=3))
    seq = lebesgue_sequence(S, 8)
    idx = seq.largest_level_within(200).indices
    d = [rough_distance(lift(S, seq.level(n)), lift(S, seq.level(n + 2)), 2.5, indices=idx) for n in (2, 4)]
    assert d[1] < d[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 12), st.integers(1, 2))
def test_property_chen_relation(seed, n, dim):
    g = np.random.default_rng(seed)
    S = random_step_path(g, n, dim)
    inner = np.flatnonzero(g.random(n - 1) < 0.4) + 1
    P = Partition(np.concatenate([[0], inner, [n]]), S.times)
    scale = max(1.0, float(np.abs(S.values).max()) ** 2)
    assert chen_defect(lift(S, P)) <= 1e-12 * scale
