import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from felab.model import (
    ACTIONS,
    PREFERENCE_FLOOR,
    FrozenLakeModelConfig,
    ModelError,
    PolicySet,
    StateSpace,
    build_frozenlake_model,
    grid_step,
    normalize_counts,
    preferences_from_rewards,
)

R, D, U, L = (ACTIONS.index(a) for a in ("right", "down", "up", "left"))


@pytest.fixture(scope="module")
def model():
    return build_frozenlake_model()


def loc_of(model, joint):
    return model.states.from_joint(joint)[0]


def next_loc(model, loc, action, ctx=0):
    j = model.states.to_joint(loc, ctx)
    return loc_of(model, int(np.argmax(model.B[action][:, j])))


def test_transitions_on_grid(model):
    assert next_loc(model, 0, R) == 1
    assert next_loc(model, 0, L) == 0
    assert next_loc(model, 4, U) == 1
    for u in range(4):
        assert next_loc(model, 7, u) == 7
        assert next_loc(model, 5, u, ctx=1) == 5


def test_transitions_preserve_context(model):
    for u in range(4):
        s = np.eye(18)[model.states.to_joint(4, 1)]
        np.testing.assert_allclose(model.states.marginal(model.B[u] @ s, 1), [0.0, 1.0])


def test_all_distributions_normalised(model):
    for Am in model.A:
        np.testing.assert_allclose(Am.sum(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(model.B.sum(axis=1), 1.0, atol=1e-10)
    for f in model.D:
        assert abs(f.sum() - 1) < 1e-10
    assert model.D_joint.sum() == pytest.approx(1.0)


def test_initial_prior(model):
    np.testing.assert_array_equal(model.D[0], np.eye(9)[0])
    np.testing.assert_allclose(model.D[1], [0.5, 0.5])


def test_position_likelihood_is_sharp(model):
    A = model.A[0]
    assert A[0, model.states.to_joint(0, 0)] == pytest.approx(101 / 109)
    assert A[3, model.states.to_joint(0, 0)] == pytest.approx(1 / 109)


def test_score_likelihood_per_context(model):
    A = model.A[1]
    assert A[0, model.states.to_joint(7, 0)] == 1.0  # goal at 8 in the first context
    assert A[1, model.states.to_joint(5, 0)] == 1.0
    assert A[0, model.states.to_joint(5, 1)] == 1.0
    assert A[2, model.states.to_joint(4, 1)] == 1.0


def test_normalize_counts_examples():
    np.testing.assert_allclose(normalize_counts(np.array([[2.0], [2.0]])), [[0.5], [0.5]])
    col = normalize_counts(np.array([[100.0], [0.01], [0.01]]))
    np.testing.assert_allclose(col[:, 0], np.array([100, 0.01, 0.01]) / 100.02)
    assert col[0, 0] == pytest.approx(0.9998, abs=1e-4)
    np.testing.assert_array_equal(normalize_counts(np.eye(3)), np.eye(3))


def test_normalize_counts_rejects_bad_columns():
    with pytest.raises(ModelError):
        normalize_counts(np.array([[1.0, -1.0], [1.0, 1.0]]))
    with pytest.raises(ModelError):
        normalize_counts(np.zeros((2, 2)))


@given(st.lists(st.floats(1e-3, 1e3), min_size=4, max_size=4))
def test_normalize_counts_columns_sum_to_one(vals):
    a = np.array(vals).reshape(2, 2)
    np.testing.assert_allclose(normalize_counts(a).sum(axis=0), 1.0, atol=1e-10)


def test_preferences_from_rewards():
    assert preferences_from_rewards({"G": 0, "H": 0, "F": 0}) == {"G": 0.0, "H": 0.0, "F": 0.0}
    c = preferences_from_rewards({"G": 100, "H": -100, "F": 0})
    assert c["G"] > c["F"] > c["H"]
    assert c["H"] == pytest.approx(-np.log(5))
    c = preferences_from_rewards({"G": 100, "H": 100, "F": -10})
    assert c["G"] == c["H"]
    with pytest.raises(ModelError):
        preferences_from_rewards({"G": np.inf})


def test_null_model_has_flat_preferences():
    m = build_frozenlake_model(FrozenLakeModelConfig(score_preferences=(0, 0, 0)))
    assert np.ptp(m.C[1]) == 0.0


def test_preference_floor():
    m = build_frozenlake_model(FrozenLakeModelConfig(score_preferences=(4, -1e6, 0)))
    assert m.C[1].min() == PREFERENCE_FLOOR


def test_policy_set():
    ps = PolicySet.enumerate(4, 3)
    assert len(ps) == 64 and ps.depth == 3
    assert len({tuple(p) for p in ps.actions}) == 64
    with pytest.raises(ModelError):
        ps.with_active(np.zeros(64, dtype=bool))


def test_state_space_roundtrip():
    ss = StateSpace((("location", 9), ("context", 2)))
    for j in range(ss.size):
        assert ss.to_joint(*ss.from_joint(j)) == j
    assert ss.to_joint(3, 1) == 7
    with pytest.raises(ModelError):
        StateSpace((("x", 0),))


def test_bad_config_rejected():
    with pytest.raises(ModelError):
        build_frozenlake_model(FrozenLakeModelConfig(contexts=((10, 6), (6, 8))))
    with pytest.raises(ModelError):
        FrozenLakeModelConfig.from_dict({"nonsense": 1})


def test_config_from_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"grid": {"rows": 3, "cols": 3}, "preferences": {"score": [2, -2, 0]},
                             "policy_depth": 2}))
    cfg = FrozenLakeModelConfig.from_json(p)
    assert cfg.score_preferences == (2, -2, 0) and cfg.policy_depth == 2


def test_learning_counts_initialised():
    m = build_frozenlake_model(FrozenLakeModelConfig(learn_likelihood=True, learn_preferences=True))
    assert np.all(m.a[1] == 5.0) and np.all(m.c[1] == 1.0)
    np.testing.assert_allclose(m.A[1], 1 / 3)
    np.testing.assert_allclose(m.C[1], np.log(1 / 3))


def test_to_dict_is_json(model):
    d = json.loads(json.dumps(model.to_dict()))
    assert np.array(d["B"]).shape == (4, 18, 18)


@given(st.integers(0, 8), st.integers(0, 3))
def test_grid_step_stays_on_grid_and_adjacent(cell, action):
    nxt = grid_step(cell, action)
    assert 0 <= nxt < 9
    (r, c), (r2, c2) = divmod(cell, 3), divmod(nxt, 3)
    assert abs(r - r2) + abs(c - c2) <= 1
