import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmnb.blended import (DEFAULT_GRID, BlendedModel, objective, resolve_priors, select_alpha,
                          train_blended)
from bmnb.data import from_arrays, make_heterogeneous
from bmnb.gaussian_nb import GaussianNB


def two_group_data(n_pos_b=40, seed=0):
    rng = np.random.default_rng(seed)
    y = np.array([0] * 60 + [1] * 60 + [0] * 60 + [1] * n_pos_b)
    g = np.array([0] * 120 + [1] * (60 + n_pos_b))
    X = rng.normal(size=(len(y), 2)) + y[:, None]
    return from_arrays(X, y, g)


def const_model(priors):
    # identical class-conditional densities, so the posterior equals the prior
    return GaussianNB((0, 1), np.array(priors, float), np.zeros((2, 1)), np.ones((2, 1)), 1e-9, np.array([1, 1]))


@pytest.fixture(scope="module")
def hetero():
    return make_heterogeneous(n=2000, seed=3)


def test_both_groups_eligible():
    m = train_blended(two_group_data())
    assert m.eligible_groups == {0, 1} and m.demoted == {}


def test_missing_class_demotes_group():
    m = train_blended(two_group_data(n_pos_b=0))
    assert m.eligible_groups == {0}
    assert m.resolve(1) is m.global_model


def test_support_boundary():
    assert 1 not in train_blended(two_group_data(n_pos_b=29), min_support=30).eligible_groups
    assert 1 in train_blended(two_group_data(n_pos_b=30), min_support=30).eligible_groups


def test_group_models_use_only_their_rows():
    d = two_group_data()
    m = train_blended(d)
    sub = d.take(np.flatnonzero(d.groups == 1))
    np.testing.assert_array_equal(m.group_models[1].means[1], sub.features[sub.labels == 1].mean(axis=0))


def test_alpha_endpoints_are_bit_exact():
    d = two_group_data()
    m = train_blended(d)
    X, g = d.features, d.groups
    assert m.with_alpha(0.0).blend_proba(X, g).tobytes() == m.global_model.predict_proba(X).tobytes()
    one = m.with_alpha(1.0).blend_proba(X, g)
    for code in (0, 1):
        sel = g == code
        assert one[sel].tobytes() == m.group_models[code].predict_proba(X[sel]).tobytes()


def test_convex_midpoint():
    m = BlendedModel(const_model((0.4, 0.6)), {0: const_model((0.8, 0.2))}, 0.5, eligible_groups=frozenset({0}))
    np.testing.assert_allclose(m.blend_proba([[1.0]], [0]), [[0.6, 0.4]], atol=1e-15)
    np.testing.assert_allclose(np.exp(m.blend_log_proba([[1.0]], [0])), [[0.6, 0.4]], atol=1e-15)


def test_unset_and_invalid_alpha():
    m = train_blended(two_group_data())
    with pytest.raises(ValueError, match="alpha is unset"):
        m.blend_proba([[0.0, 0.0]], [0])
    with pytest.raises(ValueError):
        m.with_alpha(1.5)


def test_unseen_group_falls_back():
    d = two_group_data()
    m = train_blended(d).with_alpha(0.7)
    X = d.features[:5]
    np.testing.assert_array_equal(m.blend_proba(X, 9), m.global_model.predict_proba(X))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_convex_and_monotone_in_alpha(a1, a2, seed):
    lo, hi = sorted((a1, a2))
    rng = np.random.default_rng(seed)
    d = two_group_data(seed=seed % 1000)
    m = train_blended(d)
    X = rng.normal(0, 2, (6, 2))
    g = rng.integers(0, 3, 6)
    p_lo, p_hi = m.with_alpha(lo).blend_proba(X, g), m.with_alpha(hi).blend_proba(X, g)
    assert (p_lo >= 0).all()
    np.testing.assert_allclose(p_lo.sum(axis=1), 1.0, atol=1e-12, rtol=0)
    p_group = m.with_alpha(1.0).blend_proba(X, g)
    # moving alpha towards 1 moves each entry towards the group value
    step = (p_hi - p_lo) * np.sign(p_group - p_lo)
    assert (step >= -1e-12).all()


def test_log_odds_agree_with_probabilities():
    d = two_group_data()
    m = train_blended(d).with_alpha(0.3)
    p = m.blend_proba(d.features, d.groups)[:, 1]
    np.testing.assert_allclose(m.positive_logit(d.features, d.groups), np.log(p / (1 - p)), atol=1e-9)


def test_serialization_roundtrip():
    d = two_group_data(n_pos_b=10)
    m = train_blended(d).with_alpha(0.25)
    back = BlendedModel.loads(m.dumps())
    assert back.eligible_groups == m.eligible_groups and back.demoted == m.demoted
    assert back.blend_proba(d.features, d.groups).tobytes() == m.blend_proba(d.features, d.groups).tobytes()


def test_priors_modes():
    y = np.array([0, 0, 0, 1])
    assert resolve_priors(y).tolist() == [0.75, 0.25]
    assert resolve_priors(y, "empirical") is None
    with pytest.raises(ValueError):
        resolve_priors(y, "uniform")


def test_objective():
    assert objective(0.8, 0.6, 0.5) == pytest.approx(0.7)
    assert objective(0.8, float("nan"), 1.0) == 0.8


def test_singleton_grid(hetero):
    sel = select_alpha(hetero, grid=[0.5], folds=3)
    assert sel.chosen_alpha == 0.5 and list(sel.per_alpha_scores) == [0.5]


def test_lambda_one_is_accuracy_argmax(hetero):
    sel = select_alpha(hetero, lam=1.0, folds=3, threshold_mode=None)
    accs = {a: s[0] for a, s in sel.per_alpha_scores.items()}
    best = max(accs.values())
    assert sel.chosen_alpha == min(a for a, v in accs.items() if v == best)
    for a, (acc, fs, j) in sel.per_alpha_scores.items():
        assert j == acc


def test_flipped_groups_pick_group_models(hetero):
    # the pooled model cannot represent the flipped relation; group models can
    sel = select_alpha(hetero, lam=1.0, folds=5, threshold_mode=None)
    assert sel.chosen_alpha == 1.0
    assert sel.per_alpha_scores[1.0][0] > sel.per_alpha_scores[0.0][0] + 0.1


def test_selection_is_deterministic(hetero):
    a = select_alpha(hetero, folds=3, seed=7)
    b = select_alpha(hetero, folds=3, seed=7)
    assert a == b
    for row in a.rows():
        assert row["J"] == pytest.approx(0.5 * row["cv_accuracy"] + 0.5 * row["cv_fairness"])
    assert a.chosen_alpha in DEFAULT_GRID


def test_bad_selection_inputs(hetero):
    with pytest.raises(ValueError):
        select_alpha(hetero, grid=[])
    with pytest.raises(ValueError):
        select_alpha(hetero, lam=2.0)
