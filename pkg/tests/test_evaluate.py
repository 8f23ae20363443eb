import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from itoreorder.core import (
    ONE, REVERSED, Cos, Deterministic, DiffPow, Exp, IntegralSpec, IteratedValue, KConst,
    KernelProduct, Linear, Martingale, MartingaleValue, MultiIndex, One, Separable, Time,
    Weighted, WeightedPath, Wiener, WienerValue, make_uniform_partition, since_start,
    spec_from_multiindex, until_end,
)
from itoreorder.evaluate import (
    MAX_DIRECT_ARITY, eval_combined, eval_forward, eval_kernel_forward, eval_kernel_reversed,
    eval_reversed, evaluate, prefix_sums, suffix_sums, tail_accumulator, total,
)
from itoreorder.paths import CompensatedPoisson, PathSet, sample_batch

IV = (0.0, 1.0)
F, DT = Wiener(1), Time()


def fixed_path(inc):
    inc = np.asarray(inc, dtype=float)
    N = inc.shape[-1]
    return PathSet(make_uniform_partition(0, 1, N), inc.reshape(1, 1, N))


def J(bits):
    return spec_from_multiindex(MultiIndex.parse(bits))


# -- hand-rolled sums on tiny grids -------------------------------------------


def test_J1_telescopes():
    ps = sample_batch(make_uniform_partition(0, 1, 50), 1, seed=1, count=7)
    assert np.allclose(eval_forward(J("1"), ps), ps.values(F)[:, -1], rtol=0, atol=1e-15)


def test_J00_left_riemann_value():
    ps = sample_batch(make_uniform_partition(0, 1, 1000), 1, seed=1, count=1)
    assert eval_forward(J("00"), ps)[0] == pytest.approx(0.4995, abs=1e-12)


def test_J11_by_hand():
    d = [0.3, -0.5, 0.2, 0.7]
    ps = fixed_path(d)
    expect = sum(d[j1] * sum(d[:j1]) for j1 in range(4))
    assert eval_forward(J("11"), ps)[0] == pytest.approx(expect, abs=1e-15)
    expect_rev = sum(d[l] * sum(d[l + 1:]) for l in range(4))
    assert eval_reversed(J("11").reversed(), ps)[0] == pytest.approx(expect_rev, abs=1e-15)


def test_J10_by_hand():
    # outer dt, inner df: sum_j dt * (f at left end tau_j)
    d = [0.3, -0.5, 0.2, 0.7]
    ps = fixed_path(d)
    f = np.concatenate([[0.0], np.cumsum(d)])
    assert eval_forward(J("10"), ps)[0] == pytest.approx(0.25 * f[:4].sum(), abs=1e-15)
    # reversed: sum_l df_l * (tail of dt from tau_{l+1} on)
    tails = [0.25 * (3 - l) for l in range(4)]
    assert eval_reversed(J("10").reversed(), ps)[0] == pytest.approx(np.dot(d, tails), abs=1e-15)


def test_weighted_three_layer_by_hand():
    d = [0.1, 0.4, -0.3]
    ps = fixed_path(d)
    tau = np.array([0, 1, 2]) / 3
    psi1 = np.exp(tau)
    spec = IntegralSpec(Deterministic(Cos()), (Exp(1.0), ONE), (F, DT, F))
    expect = 0.0
    for j1 in range(3):
        for j2 in range(j1):
            for j3 in range(j2):
                expect += psi1[j1] * d[j1] * (1 / 3) * np.cos(tau[j3]) * d[j3]
    assert eval_forward(spec, ps)[0] == pytest.approx(expect, abs=1e-15)


def test_reversed_tail_is_empty_on_last_cell():
    ps = sample_batch(make_uniform_partition(0, 1, 5), 1, seed=3, count=2)
    acc = tail_accumulator((ONE, ONE), (F, F), ps, IV)
    assert np.all(acc.values[0] == 1)
    assert np.all(acc.top[:, -1] == 0)
    assert acc.level == 2


def test_reversed_k0_equals_forward():
    ps = sample_batch(make_uniform_partition(0, 1, 33), 1, seed=3, count=5)
    s = IntegralSpec(WienerValue(1), (), (F,))
    assert np.array_equal(eval_reversed(s.reversed(), ps), eval_forward(s, ps))


def test_reversed_dt_tail_example():
    ps = sample_batch(make_uniform_partition(0, 1, 8), 1, seed=3, count=3)
    # inner ds, outer df: sum_l dtau_l (f_T - f_{tau_{l+1}})
    spec = IntegralSpec(One(), (ONE,), (F, DT), REVERSED)
    f = ps.values(F)
    expect = (f[:, -1:] - f[:, 1:]) @ ps.partition.steps
    assert np.allclose(eval_reversed(spec, ps), expect, atol=1e-15)


# -- combined integral --------------------------------------------------------


def test_combined_theta_one_is_plain_integral():
    ps = sample_batch(make_uniform_partition(0, 1, 40), 1, seed=5, count=4)
    phi = WienerValue(1)
    plain = eval_forward(IntegralSpec(phi, (), (F,)), ps)
    assert np.allclose(eval_combined(phi, ONE, F, ps), plain, rtol=0, atol=1e-15)


def test_combined_time_right_endpoint():
    N = 200
    ps = sample_batch(make_uniform_partition(0, 1, N), 1, seed=5, count=1)
    tau = ps.partition.times
    expect = np.sum(np.diff(tau) * (1 - tau[1:]))
    val = eval_combined(One(), until_end(1), DT, ps)[0]
    assert val == pytest.approx(expect, abs=1e-14)
    assert val == pytest.approx(0.5, abs=1 / N)


def test_combined_with_tail_matches_reversed():
    ps = sample_batch(make_uniform_partition(0, 1, 30), 1, seed=5, count=4)
    acc = tail_accumulator((Cos(), ONE), (F, DT), ps, IV)
    spec = IntegralSpec(WienerValue(1), (Cos(), ONE), (F, DT, F), REVERSED)
    assert np.allclose(eval_combined(WienerValue(1), acc, F, ps), eval_reversed(spec, ps),
                       rtol=1e-14, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_combined_linear_in_integrand(a, b, seed):
    ps = sample_batch(make_uniform_partition(0, 1, 25), 1, seed=seed, count=3)
    acc = tail_accumulator((Exp(0.5),), (F,), ps, IV)
    phi, psi = WienerValue(1), Deterministic(Cos())
    lhs = eval_combined(Linear(((a, phi), (b, psi))), acc, F, ps)
    rhs = a * eval_combined(phi, acc, F, ps) + b * eval_combined(psi, acc, F, ps)
    scale = np.abs(a * eval_combined(phi, acc, F, ps)) + np.abs(b * eval_combined(psi, acc, F, ps))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(scale, 1e-300))


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from(["forward", "reversed"]))
def test_linear_in_outer_weight(a, b, orientation):
    ps = sample_batch(make_uniform_partition(0, 1, 20), 1, seed=9, count=3)
    u, v = Exp(1.0), since_start(2)

    def val(w):
        return evaluate(IntegralSpec(One(), (ONE, w), (F, DT, F), orientation), ps)

    lhs = val(a * u + b * v)
    rhs = a * val(u) + b * val(v)
    scale = np.abs(a * val(u)) + np.abs(b * val(v))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(scale, 1e-300))


# -- forward vs reversed on one grid (index exchange) ------------------------


@pytest.mark.parametrize("bits", ["11", "10", "01", "110", "101", "0110", "1111"])
def test_forward_equals_reversed_on_same_grid(bits):
    ps = sample_batch(make_uniform_partition(0, 1, 257), 1, seed=2, count=50)
    fwd = eval_forward(J(bits), ps)
    rev = eval_reversed(J(bits).reversed(), ps)
    assert np.allclose(fwd, rev, rtol=1e-12, atol=1e-14)


# -- brute-force oracle -------------------------------------------------------

SPECS = [
    J("1"),
    J("111"),
    J("0101"),
    IntegralSpec(WienerValue(1), (Cos("T"), since_start(1)), (F, DT, F)),
    IntegralSpec(WeightedPath(Exp(-1.0), 2), (ONE,), (Wiener(2), F)),
    IntegralSpec(IteratedValue(J("11"), Exp(1.0)), (ONE,), (DT, F)),
    IntegralSpec(Weighted(MartingaleValue("m"), Cos()), (ONE,), (Martingale("m"), DT)),
    IntegralSpec(One(), (Exp(1.0),), (F, F), REVERSED, post_weight=Cos()),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.describe())
def test_matches_brute_force(spec):
    ps = sample_batch(make_uniform_partition(0, 1, 12), 2, {"m": CompensatedPoisson(3.0)},
                      seed=17, count=10)
    ref = oracles.forward(spec, ps) if spec.orientation == "forward" else oracles.reversed_(spec, ps)
    assert np.allclose(evaluate(spec, ps), ref, rtol=1e-12, atol=1e-15)


# -- kernels ------------------------------------------------------------------


def test_kernel_constant_time_simplex():
    ps = sample_batch(make_uniform_partition(0, 1, 400), 1, seed=0, count=1)
    v = eval_kernel_forward(KConst(1.0), One(), (DT, DT), ps)[0]
    assert v == pytest.approx(0.5, abs=1 / 400)


def test_kernel_single_arg_matches_weighted_spec():
    ps = sample_batch(make_uniform_partition(0, 1, 64), 1, seed=4, count=6)
    k = eval_kernel_forward(Separable((since_start(1),)), One(), (F, F), ps)
    s = eval_forward(IntegralSpec(One(), (since_start(1),), (F, F)), ps)
    assert np.allclose(k, s, rtol=1e-13, atol=1e-15)


def test_kernel_reversed_const_matches_reversed_spec():
    ps = sample_batch(make_uniform_partition(0, 1, 64), 1, seed=4, count=6)
    k = eval_kernel_reversed(KConst(1.0), One(), (F, F), ps)
    s = eval_reversed(IntegralSpec(One(), (ONE,), (F, F), REVERSED), ps)
    assert np.allclose(k, s, rtol=1e-13, atol=1e-15)


KERNEL_CASES = [
    (DiffPow(0, 1, 1), One(), (F, F, F)),
    (KernelProduct((Separable((Exp(1.0),)), DiffPow(0, 1, 2))), WienerValue(1), (F, DT, F)),
    (DiffPow(0, 1, 1), None, (F, F)),
    (Separable((Cos(),)), WienerValue(1), (F, F)),
    (DiffPow(0, 1, 0.5), One(), (F, F, F)),
    (DiffPow(0, 1, 1.5), None, (F, DT)),
]


@pytest.mark.parametrize("kernel,xi,drivers", KERNEL_CASES, ids=lambda x: getattr(x, "describe", lambda: str(x))())
def test_kernel_methods_agree_with_brute_force(kernel, xi, drivers):
    ps = sample_batch(make_uniform_partition(0, 1, 14), 1, seed=8, count=8)
    ref = oracles.kernel(kernel, xi, drivers, ps, IV)
    assert np.allclose(eval_kernel_forward(kernel, xi, drivers, ps), ref, rtol=1e-11, atol=1e-14)
    assert np.allclose(eval_kernel_reversed(kernel, xi, drivers, ps), ref, rtol=1e-11, atol=1e-14)
    if kernel.min_arity <= MAX_DIRECT_ARITY and len(drivers) - (xi is not None) <= MAX_DIRECT_ARITY:
        for fn in (eval_kernel_forward, eval_kernel_reversed):
            assert np.allclose(fn(kernel, xi, drivers, ps, method="direct"), ref,
                               rtol=1e-11, atol=1e-14)


def test_nonseparable_kernel_too_many_arguments():
    ps = sample_batch(make_uniform_partition(0, 1, 8), 1, seed=8, count=1)
    with pytest.raises(NotImplementedError):
        eval_kernel_forward(DiffPow(0, 2, 0.5), None, (F, F, F), ps)


def test_kernel_arity_mismatch():
    ps = sample_batch(make_uniform_partition(0, 1, 8), 1, seed=8, count=1)
    with pytest.raises(ValueError):
        eval_kernel_forward(DiffPow(0, 2, 1), One(), (F, F, F), ps)
    with pytest.raises(ValueError):
        eval_kernel_forward(KConst(1.0), One(), (F, F), ps, method="bogus")


# -- errors -------------------------------------------------------------------


def test_partition_mismatch():
    ps = sample_batch(make_uniform_partition(0, 2, 8), 1, seed=8, count=1)
    with pytest.raises(ValueError, match="does not match"):
        eval_forward(J("11"), ps)


def test_missing_component():
    ps = sample_batch(make_uniform_partition(0, 1, 8), 1, seed=8, count=1)
    with pytest.raises(ValueError):
        eval_forward(IntegralSpec(One(), (ONE,), (Wiener(2), F)), ps)


def test_wrong_orientation():
    ps = sample_batch(make_uniform_partition(0, 1, 8), 1, seed=8, count=1)
    with pytest.raises(ValueError):
        eval_forward(J("11").reversed(), ps)
    with pytest.raises(ValueError):
        eval_reversed(J("11"), ps)


# -- accumulation -------------------------------------------------------------


def test_compensated_sums_beat_naive():
    x = np.full((1, 10 ** 6), 0.1)
    exact = 10 ** 5
    assert abs(total(x)[0] - exact) < abs(np.add.accumulate(x[0])[-1] - exact)
    assert abs(total(x)[0] - exact) < 1e-9


def test_prefix_and_suffix_sums():
    x = np.arange(1.0, 6.0)[None, :]
    assert np.array_equal(prefix_sums(x)[0], [0, 1, 3, 6, 10, 15])
    assert np.array_equal(suffix_sums(x)[0], [15, 14, 12, 9, 5, 0])


# -- statistical --------------------------------------------------------------


def test_ito_isometry_discrete():
    ps = sample_batch(make_uniform_partition(0, 1, 64), 1, seed=31, count=40_000)
    phi = WeightedPath(Cos(), 1)
    vals = eval_forward(IntegralSpec(phi, (), (F,)), ps)
    lhs = vals ** 2
    f = ps.values(F)[:, :-1]
    tau = ps.partition.times[:-1]
    rhs = (np.cos(tau) * f) ** 2 @ ps.partition.steps
    diff = lhs - rhs
    assert abs(diff.mean()) < 4 * diff.std() / np.sqrt(diff.size)


def test_second_moment_J11():
    ps = sample_batch(make_uniform_partition(0, 1, 128), 1, seed=32, count=40_000)
    sq = eval_forward(J("11"), ps) ** 2
    expect = 0.5 * (1 - 1 / 128)  # sum over strict pairs of cell lengths
    assert abs(sq.mean() - expect) < 4 * sq.std() / np.sqrt(sq.size)
