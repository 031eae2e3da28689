import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import finite_difference, rel_err
from setvalued.learn import (
    DataError,
    Dataset,
    LogisticModel,
    Preprocessor,
    Schema,
    ShiftSpec,
    accuracy,
    fairness_loss,
    fixed_groups,
    grouped_fairness,
    ingest_dataset,
    load_table,
    predict,
    predict_proba,
    resample_shift,
    sample_losses,
    two_gaussian_frame,
)

TABLE = """age, job, income, sex
39, clerk, >50K, Male
50, ?, <=50K, Female
38, manager, <=50K, Female
53, clerk, >50K, Male
28, exec, <=50K, Female
"""

SCHEMA = Schema(
    label="income", positive=(">50K",), categorical=("job",), continuous=("age",),
    sensitive="sex", sensitive_positive="Male",
)


def random_data(rng, n, d):
    X = rng.normal(size=(n, d))
    y = rng.choice([-1.0, 1.0], size=n)
    a = rng.integers(0, 2, size=n).astype(float)
    return Dataset(X, y, a)


def test_ingest_table(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(TABLE)
    data = ingest_dataset(path, SCHEMA)
    assert len(data) == 4  # row with "?" dropped
    assert data.feature_names == ("age", "job=clerk", "job=exec", "job=manager")
    np.testing.assert_array_equal(data.X[:, 1:].sum(axis=1), 1.0)
    assert data.X[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert data.X[:, 0].std() == pytest.approx(1.0)
    np.testing.assert_array_equal(data.y, [1, -1, 1, -1])
    np.testing.assert_array_equal(data.y01, [1, 0, 1, 0])
    np.testing.assert_array_equal(data.a, [1, 0, 1, 0])
    again = ingest_dataset(path, SCHEMA)
    assert again.X.tobytes() == data.X.tobytes()


def test_ingest_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(TABLE)
    with pytest.raises(DataError, match="unknown column"):
        ingest_dataset(path, Schema(label="wage"))
    bad = tmp_path / "bad.csv"
    bad.write_text("age,income\nold,>50K\n")
    with pytest.raises(DataError, match="unparseable"):
        ingest_dataset(bad, Schema(label="income", continuous=("age",)))
    empty = tmp_path / "empty.csv"
    empty.write_text("age,income\n?,>50K\n")
    with pytest.raises(DataError, match="no rows"):
        load_table(empty, Schema(label="income", continuous=("age",)))
    with pytest.raises(DataError):
        Schema.from_dict({"label": "y", "colour": 1})


def test_preprocessor_uses_training_statistics():
    df = pd.DataFrame({"x": ["1", "2", "3"], "c": ["a", "b", "a"], "y": ["1", "0", "1"]})
    pre = Preprocessor(Schema(label="y", continuous=("x",), categorical=("c",))).fit(df.iloc[:2])
    test = pre.transform(pd.DataFrame({"x": ["3"], "c": ["z"], "y": ["0"]}))
    np.testing.assert_allclose(test.X, [[3.0, 0.0, 0.0]])  # (3 - 1.5) / 0.5, unseen level
    assert test.y[0] == -1


def test_predict_threshold():
    m = LogisticModel(np.zeros(2), 0.0)
    assert predict_proba(m, np.ones(2)) == 0.5
    assert predict(m, np.ones((1, 2)))[0] == 1.0
    m = LogisticModel(np.array([1.0, -1.0]), 0.5)
    assert predict_proba(m, np.array([2.0, 1.0])) == pytest.approx(1 / (1 + np.exp(-1.5)))
    np.testing.assert_array_equal(LogisticModel.from_vector(m.to_vector()).weights, m.weights)


def test_loss_and_fairness_gradients_by_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n, d = int(rng.integers(3, 30)), int(rng.integers(1, 6))
        data = random_data(rng, n, d)
        theta = rng.normal(size=d + 1)
        i = int(rng.integers(n))
        losses, grads = sample_losses(theta, data)
        fd = finite_difference(lambda t: sample_losses(t, data, [i])[0][0], theta)
        assert rel_err(grads[i], fd) <= 1e-6
        val, g = fairness_loss(theta, data)
        fd = finite_difference(lambda t: fairness_loss(t, data)[0], theta)
        assert rel_err(g, fd, floor=1e-6) <= 1e-6
        assert val >= 0


def test_logistic_loss_is_stable_for_large_margins():
    data = Dataset(np.array([[1e4], [-1e4]]), np.array([1.0, 1.0]))
    losses, grads = sample_losses(np.array([1.0, 0.0]), data)
    assert losses[0] == 0.0 and losses[1] == pytest.approx(1e4)
    assert np.all(np.isfinite(grads))


def test_fairness_zero_when_attribute_constant_or_model_flat():
    rng = np.random.default_rng(1)
    data = random_data(rng, 20, 3)
    assert fairness_loss(np.zeros(4), data)[0] <= 1e-30
    flat = Dataset(data.X, data.y, np.ones(20))
    val, g = fairness_loss(rng.normal(size=4), flat)
    assert val == 0.0 and not np.any(g)
    with pytest.raises(DataError):
        fairness_loss(np.zeros(4), Dataset(data.X, data.y))


def test_grouped_fairness_matches_per_group():
    rng = np.random.default_rng(2)
    data = random_data(rng, 50, 3)
    theta = rng.normal(size=4)
    groups = fixed_groups(50, 8, seed=3)
    assert groups.shape == (6, 8) and len(set(groups.ravel())) == 48
    vals, grads = grouped_fairness(theta, data.X[groups], data.a[groups])
    for k, g in enumerate(groups):
        v, gr = fairness_loss(theta, data.subset(g))
        assert vals[k] == pytest.approx(v, rel=1e-12, abs=1e-15)
        np.testing.assert_allclose(grads[k], gr, rtol=1e-10, atol=1e-15)


def test_accuracy():
    data = Dataset(np.array([[1.0], [-1.0], [2.0]]), np.array([1.0, 1.0, -1.0]))
    assert accuracy(np.array([1.0, 0.0]), data) == pytest.approx(1 / 3)


def test_resample_shift_exact_fraction_and_determinism():
    rng = np.random.default_rng(4)
    pool = Dataset(rng.normal(size=(300, 2)), np.where(np.arange(300) < 90, 1.0, -1.0))
    spec = ShiftSpec(rho=0.25, n_test=101, n_rep=3, seed=7)
    a = resample_shift(pool, spec, 0)
    assert len(a) == 101 and int(np.sum(a.y > 0)) == round(0.25 * 101)
    assert resample_shift(pool, spec, 0).X.tobytes() == a.X.tobytes()
    assert resample_shift(pool, spec, 1).X.tobytes() != a.X.tobytes()
    with pytest.raises(DataError):
        resample_shift(pool, ShiftSpec(rho=0.5, n_test=200), 0)
    with pytest.raises(ValueError):
        ShiftSpec(rho=1.0, n_test=10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.integers(1, 60), st.integers(0, 5))
def test_resample_shift_property(rho, n_test, r):
    pool = Dataset(np.arange(120.0)[:, None], np.where(np.arange(120) % 2 == 0, 1.0, -1.0))
    spec = ShiftSpec(rho=rho, n_test=n_test, seed=1)
    sample = resample_shift(pool, spec, r)
    assert int(np.sum(sample.y > 0)) == round(rho * n_test)
    assert len(np.unique(sample.X)) == n_test  # drawn without replacement


def test_two_gaussian_frame():
    df = two_gaussian_frame(4000, seed=0)
    assert df.shape == (4000, 12)
    assert abs(df["label"].mean() - 0.3) < 0.03
    pos = df[df["label"] == 1]
    neg = df[df["label"] == 0]
    assert pos["u3"].std() > 2 * neg["u3"].std()
    assert df.equals(two_gaussian_frame(4000, seed=0))
    # the group attribute leaks into feature u0
    assert df.groupby("group")["u0"].mean().diff().iloc[-1] > 0.5
