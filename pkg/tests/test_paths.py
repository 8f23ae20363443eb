import io

import numpy as np
import pytest

from itoreorder.core import Martingale, Time, Wiener, make_uniform_partition
from itoreorder.paths import (
    CompensatedPoisson, PathSet, ScaledWiener, cumulative_value, sample_batch, sample_paths,
    stream_generator,
)

PART = make_uniform_partition(0.0, 1.0, 64)


def test_same_seed_same_paths():
    a = sample_batch(PART, 2, seed=11, count=5)
    b = sample_batch(PART, 2, seed=11, count=5)
    assert np.array_equal(a.wiener, b.wiener)
    c = sample_batch(PART, 2, seed=12, count=5)
    assert not np.array_equal(a.wiener, c.wiener)


def test_path_independent_of_batch_and_dims():
    big = sample_batch(PART, 3, seed=4, start=0, count=10)
    part = sample_batch(PART, 1, seed=4, start=6, count=2)
    assert np.array_equal(big.wiener[6:8, :1], part.wiener)
    singles = list(sample_paths(PART, 3, seed=4, count=3))
    assert all(s.n_paths == 1 for s in singles)
    assert np.array_equal(np.concatenate([s.wiener for s in singles]), big.wiener[:3])
    assert [s.path_index for s in singles] == [0, 1, 2]


def test_martingale_stream_keyed_by_id():
    m1 = sample_batch(PART, 1, {"a": ScaledWiener(2.0)}, seed=1, count=3)
    m2 = sample_batch(PART, 0, {"b": ScaledWiener(1.0), "a": ScaledWiener(2.0)}, seed=1, count=3)
    assert np.array_equal(m1.martingales["a"], m2.martingales["a"])
    assert not np.array_equal(m2.martingales["a"], 2.0 * m2.martingales["b"])


def test_list_models_get_positional_ids():
    ps = sample_batch(PART, 0, [CompensatedPoisson(1.0)], seed=1, count=2)
    assert list(ps.martingales) == ["0"]


def test_values_pinned_at_zero():
    ps = sample_batch(PART, 1, seed=3, count=4)
    v = ps.values(Wiener(1))
    assert v.shape == (4, 65)
    assert np.all(v[:, 0] == 0)
    assert np.allclose(v[:, -1], ps.wiener[:, 0].sum(axis=1))
    assert np.array_equal(ps.values(Time()), PART.times)


def test_cumulative_value():
    ps = sample_batch(PART, 1, seed=3, count=4)
    assert np.allclose(cumulative_value(ps, Wiener(1), 10), ps.values(Wiener(1))[:, 10])
    assert np.allclose(cumulative_value(ps, Time(), 64), 1.0)
    with pytest.raises(IndexError):
        cumulative_value(ps, Wiener(1), 65)


def test_coarsen_sums_increments():
    ps = sample_batch(PART, 2, {"m": CompensatedPoisson(3.0)}, seed=8, count=3)
    c = ps.coarsen(4)
    assert c.N == 16
    assert np.allclose(c.wiener, ps.wiener.reshape(3, 2, 16, 4).sum(-1))
    assert np.allclose(c.values(Martingale("m"))[:, -1], ps.values(Martingale("m"))[:, -1])
    assert ps.coarsen(1) is ps


def test_missing_driver_errors():
    ps = sample_batch(PART, 1, seed=0, count=1)
    with pytest.raises(ValueError, match="component 2"):
        ps.increments(Wiener(2))
    with pytest.raises(KeyError):
        ps.increments(Martingale("nope"))
    with pytest.raises(ValueError):
        sample_batch(PART, 0, seed=0)
    with pytest.raises(ValueError):
        stream_generator(-1, 0, 1)


def test_dump_roundtrip():
    ps = sample_batch(PART, 2, {"x": ScaledWiener(0.5)}, seed=99, start=5, count=3)
    buf = io.BytesIO()
    ps.dump(buf)
    buf.seek(0)
    back = PathSet.load(buf)
    assert back.partition == ps.partition
    assert np.array_equal(back.wiener, ps.wiener)
    assert np.array_equal(back.martingales["x"], ps.martingales["x"])
    assert list(back.path_indices) == [5, 6, 7]
    assert back.seed == 99
    with pytest.raises(ValueError):
        PathSet.load(io.BytesIO(b"garbage!" * 10))


def test_wiener_increment_moments():
    ps = sample_batch(make_uniform_partition(0, 2, 8), 1, seed=21, count=20_000)
    inc = ps.wiener[:, 0, :]
    se_var = np.sqrt(2 * 0.25 ** 2 / inc.size)
    assert abs(inc.mean()) < 4 * np.sqrt(0.25 / inc.size)
    assert abs(inc.var() - 0.25) < 4 * se_var
    corr = np.corrcoef(inc[:, 0], inc[:, 1])[0, 1]
    assert abs(corr) < 4 / np.sqrt(inc.shape[0])


@pytest.mark.parametrize("model,var", [(ScaledWiener(2.0), 4.0), (CompensatedPoisson(2.0), 2.0)])
def test_martingale_terminal_moments(model, var):
    ps = sample_batch(make_uniform_partition(0, 1, 16), 0, {"m": model}, seed=2, count=40_000)
    end = ps.values(Martingale("m"))[:, -1]
    assert abs(end.mean()) < 4 * np.sqrt(var / end.size)
    # variance of the sample variance, bounded using the fourth moment
    m4 = np.mean(end ** 4)
    assert abs(end.var() - var) < 4 * np.sqrt((m4 - var ** 2) / end.size)
    assert model.rho == var


def test_poisson_rate_must_be_positive():
    with pytest.raises(ValueError):
        CompensatedPoisson(0.0)
