import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_step_path
from pathwise import (
    CadlagPath,
    ContractError,
    ControlledPath,
    GeneratorConfig,
    Partition,
    C2Function,
    RoughPathTriple,
    builtin_function,
    compensated_rough_integral,
    controlled_from_function,
    discrete_qv,
    follmer_bracket,
    generate,
    integration_by_parts_defect,
    lebesgue_sequence,
    left_point_integral,
    rough_integral,
    rough_ito_defect,
    young_integral,
)
from pathwise.integration import ito_terms
from pathwise.roughpath import area_n, lift, limit_triple

STAIR = CadlagPath([0.0, 0.5, 1.0], [0.0, 1.0, 3.0])


def _identity(S):
    return ControlledPath(S, np.broadcast_to(np.eye(S.dim), (S.times.size, S.dim, S.dim)), S)


def test_staircase_by_hand():
    assert left_point_integral(STAIR, STAIR).terminal == 2.0
    assert discrete_qv(STAIR).values[-1, 0, 0] == 5.0
    assert integration_by_parts_defect(STAIR) == 0.0


def test_buy_and_hold_telescopes(rng):
    S = random_step_path(rng, 30, 2)
    one = CadlagPath(S.times, np.ones((31, 2)))
    P = Partition(np.array([0, 7, 19, 30]), S.times)
    np.testing.assert_allclose(left_point_integral(one, S, P).values, (S.values - S.values[0]).sum(axis=1), atol=1e-14)


def test_left_point_matches_loop_oracle(rng):
    S = random_step_path(rng, 40, 2)
    F = random_step_path(rng, 40, 2).with_values(rng.normal(size=(41, 2)))
    F = CadlagPath(S.times, F.values)
    P = Partition(np.array([0, 4, 5, 17, 33, 40]), S.times)
    np.testing.assert_allclose(left_point_integral(F, S, P).values, oracles.left_point(F.values, S.values, P.indices), atol=1e-13)


def test_qv_matches_oracle_and_polarization(rng):
    S = random_step_path(rng, 25, 2)
    P = Partition(np.array([0, 3, 10, 11, 25]), S.times)
    qv = discrete_qv(S, P)
    for t in (0, 5, 11, 25):
        np.testing.assert_allclose(qv.values[t], oracles.discrete_qv(S.values, P.indices, t), atol=1e-14)
    plus = discrete_qv(S.component(0) + S.component(1), P).values[:, 0, 0]
    minus = discrete_qv(S.component(0) - S.component(1), P).values[:, 0, 0]
    np.testing.assert_allclose(0.25 * (plus - minus), qv.component(0, 1), atol=1e-13)
    bracket = follmer_bracket(qv.component(0), qv.component(1), plus)
    np.testing.assert_allclose(bracket, qv.component(0, 1), atol=1e-13)
    np.testing.assert_allclose(follmer_bracket(qv.component(0), qv.component(0), 4 * qv.component(0)), qv.component(0))


def test_disjoint_jumps_have_zero_bracket():
    t = np.linspace(0, 1, 5)
    a = CadlagPath(t, [0.0, 1.0, 1.0, 1.0, 1.0])
    b = CadlagPath(t, [0.0, 0.0, 0.0, 2.0, 2.0])
    qa, qb, qab = (discrete_qv(x).values[:, 0, 0] for x in (a, b, a + b))
    assert np.all(follmer_bracket(qa, qb, qab) == 0.0)


def test_pure_jump_qv_is_sum_of_squared_jumps():
    jumps = np.diff(STAIR.values[:, 0])
    assert discrete_qv(STAIR).values[-1, 0, 0] == np.sum(jumps**2)


def test_constant_path_integrals_vanish():
    S = CadlagPath(np.linspace(0, 1, 9), np.full(9, 2.0))
    assert np.all(left_point_integral(S, S).values == 0.0)
    assert np.all(discrete_qv(S).values == 0.0)
    assert integration_by_parts_defect(S) == 0.0


def test_compensated_constant_integrand():
    S = generate(GeneratorConfig(n_steps=64, seed=1))
    c = ControlledPath(S.with_values(np.full((65, 1), 3.0)), np.zeros((65, 1, 1)), S)
    out = compensated_rough_integral(c, _identity(S), lift(S, Partition.full(S.times)), Partition.full(S.times))
    np.testing.assert_allclose(out.values, 3.0 * (S.values[:, 0] - S.values[0, 0]), atol=1e-13)


def test_compensator_vanishes_without_integrator_derivative(rng):
    S = random_step_path(rng, 20)
    F = controlled_from_function(builtin_function("tanh", 1), S)
    G = ControlledPath(S, np.zeros((21, 1, 1)), S)
    P = Partition(np.array([0, 6, 13, 20]), S.times)
    XX = RoughPathTriple(S, S, area_n(S, Partition.full(S.times)).scaled(17.0))
    out = compensated_rough_integral(F, G, XX, P)
    np.testing.assert_allclose(out.values, left_point_integral(F.F, S, P).values, atol=1e-14)


def test_compensated_equals_full_grid_left_point_with_grid_area():
    # with the area of the grid itself, summing over any coarser partition recovers the grid sums
    S = generate(GeneratorConfig(n_steps=128, seed=2))
    f = builtin_function("linear", 1, matrix=[[2.0]])
    F = controlled_from_function(f, S)
    full = Partition.full(S.times)
    X = lift(S, full)
    coarse = Partition(np.array([0, 40, 77, 128]), S.times)
    out = compensated_rough_integral(F, _identity(S), X, coarse)
    assert out.terminal == pytest.approx(left_point_integral(F.F, S).terminal, abs=1e-12)


def test_linear_path_integral_converges_to_half():
    errs = []
    for k in (4, 8, 12):
        t = np.linspace(0, 1, 2**k + 1)
        S = CadlagPath(t, t)
        F = controlled_from_function(builtin_function("linear", 1), S)
        out = compensated_rough_integral(F, _identity(S), lift(S, Partition.full(t)), Partition.full(t))
        errs.append(abs(out.terminal - 0.5))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2e-4


def test_refinement_reports_error_and_history():
    S = generate(GeneratorConfig(n_steps=512, seed=3))
    seq = lebesgue_sequence(S, 7)
    F = controlled_from_function(builtin_function("tanh", 1), S)
    out = compensated_rough_integral(F, _identity(S), limit_triple(S, seq), seq)
    assert len(out.meta["terminal_history"]) >= 2
    assert np.isfinite(out.meta["error"])
    assert rough_integral(F, limit_triple(S, seq), seq).terminal == pytest.approx(out.terminal, abs=1e-12)


def test_left_point_approaches_compensated_with_level():
    S = generate(GeneratorConfig(n_steps=2**13, seed=4))
    seq = lebesgue_sequence(S, 8)
    F = controlled_from_function(builtin_function("tanh", 1), S)
    ref = compensated_rough_integral(F, _identity(S), limit_triple(S, seq), seq).terminal
    gaps = [abs(left_point_integral(F.F, S, seq, n).terminal - ref) for n in (2, 8)]
    assert gaps[1] < gaps[0]


def test_young_integral_examples():
    t = np.linspace(0, 1, 5)
    B = CadlagPath(t, [0.0, 0.0, 1.0, 1.0, 1.0])
    c = CadlagPath(t, np.full(5, 4.0))
    assert young_integral(c, B).terminal == 4.0
    grid = np.linspace(0, 1, 2**12 + 1)
    lin = CadlagPath(grid, grid)
    assert young_integral(lin, lin, cap=10).terminal == pytest.approx(0.5, abs=2e-4)
    with pytest.raises(ContractError):
        young_integral(c, B, q=2.0)
    with pytest.raises(ContractError):
        young_integral(c, B, p=3.0, q=1.9)


def test_rough_ito_exact_for_square_and_linear(rng):
    S = random_step_path(rng, 40)
    P = Partition(np.array([0, 10, 25, 40]), S.times)
    sq = builtin_function("quadratic", 1)
    lin = builtin_function("linear", 1, matrix=[[1.5]])
    scale = np.abs(S.values).max() ** 2
    assert rough_ito_defect(sq, S, P) <= 1e-12 * scale
    assert rough_ito_defect(lin, S, P) <= 1e-12 * scale
    jumps = S.jump_indices()
    assert rough_ito_defect(sq, S, P, jumps=jumps) <= 1e-12 * scale


def test_rough_ito_cubic_defect_shrinks_with_level():
    S = generate(GeneratorConfig(n_steps=2**12, seed=5))
    seq = lebesgue_sequence(S, 9)
    cube = C2Function(
        lambda X: X**3, lambda X: (3 * X**2)[:, :, None], lambda X: (6 * X)[:, :, None, None], name="cube"
    )
    d = [rough_ito_defect(cube, S, seq, n) for n in (3, 6, 9)]
    assert d[0] > d[1] > d[2]
    terms = ito_terms(cube, S, seq, 9)
    assert set(terms) == {"value", "first", "second", "jump"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30), st.integers(1, 3))
def test_property_integration_by_parts_exact(seed, n, dim):
    g = np.random.default_rng(seed)
    S = random_step_path(g, n, dim)
    inner = np.flatnonzero(g.random(n - 1) < 0.5) + 1
    P = Partition(np.concatenate([[0], inner, [n]]), S.times)
    assert integration_by_parts_defect(S, P) <= 1e-12 * max(1.0, np.abs(S.values).max() ** 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_property_left_point_linear_in_integrand(seed, n):
    g = np.random.default_rng(seed)
    S = random_step_path(g, n)
    F1 = CadlagPath(S.times, g.normal(size=(n + 1, 1)))
    F2 = CadlagPath(S.times, g.normal(size=(n + 1, 1)))
    lhs = left_point_integral(F1 + F2.scaled(2.0), S).values
    rhs = left_point_integral(F1, S).values + 2.0 * left_point_integral(F2, S).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
