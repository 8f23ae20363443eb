import numpy as np
import pytest

from itoreorder.catalog import Identity, Term, lookup
from itoreorder.core import KConst, MultiIndex, Separable, spec_from_multiindex, since_start
from itoreorder.montecarlo import (
    ENVELOPE_FLOOR, calibrate, check_many, convergence_sweep, covariance_experiment,
    default_factor, derive_seed, envelope, fit_slope, verify_identity, verify_many,
)


def same_both_sides(bits="110"):
    s = spec_from_multiindex(MultiIndex.parse(bits))
    return Identity("same", (Term(1.0, s),), (Term(1.0, s),), "reorder/wiener", reference=False)


def test_degenerate_identity_is_exactly_zero():
    rep = verify_identity(same_both_sides(), 64, 200, seed=1)
    assert rep.ms_error == 0.0
    assert rep.ci95 == (0.0, 0.0)
    assert rep.lhs_mean == rep.rhs_mean


def test_report_fields():
    rep = verify_identity(lookup("J110"), 64, 300, seed=2)
    assert rep.identity_id == "J110" and rep.citation == "reorder/closed-form"
    assert rep.N == 64 and rep.M == 300 and rep.refine == 4
    assert rep.ms_error >= 0
    assert rep.ci95[0] <= rep.ms_error <= rep.ci95[1]
    assert rep.median <= rep.ms_error * 10
    d = rep.to_dict()
    assert "wall_time" not in d
    assert "wall_time" in rep.to_dict(timing=True)


def test_reproducible_across_workers_and_chunks():
    ident = lookup("thm1-k2-mixed")
    a = verify_identity(ident, 32, 450, seed=5, workers=1, chunk=1000)
    b = verify_identity(ident, 32, 450, seed=5, workers=3, chunk=100)
    assert a.to_dict() == b.to_dict()


def test_batch_equals_solo():
    ids = [lookup("J110"), lookup("thm5-poisson-k1"), lookup("thm1-2d")]
    many = verify_many(ids, 32, 150, seed=9)
    for ident, rep in zip(ids, many):
        assert rep.to_dict() == verify_identity(ident, 32, 150, seed=9).to_dict()


@pytest.mark.parametrize("N,M", [(1, 200), (64, 99)])
def test_preconditions(N, M):
    with pytest.raises(ValueError):
        verify_identity(lookup("J110"), N, M, seed=0)


def test_driver_requirements_unmet():
    with pytest.raises(ValueError, match="2 Wiener components"):
        verify_identity(lookup("thm1-2d"), 16, 100, seed=0, dims=1)
    with pytest.raises(ValueError, match="martingale"):
        verify_identity(lookup("thm5-scaled-k1"), 16, 100, seed=0, models={})


def test_ms_error_shrinks_with_N():
    ident = lookup("J110")
    coarse = verify_identity(ident, 32, 2000, seed=3)
    fine = verify_identity(ident, 128, 2000, seed=3)
    assert fine.ms_error < coarse.ms_error / 2


def test_envelope_rule():
    ident = lookup("J110")
    reps = check_many([ident], 128, 500, seed=4, pilot_N=32)
    C = calibrate([ident], 500, seed=4, pilot_N=32)["J110"]
    assert reps[0].envelope == pytest.approx(10 * C / 128 + ENVELOPE_FLOOR)
    assert reps[0].passed
    assert envelope(0.0, 100) == ENVELOPE_FLOOR
    assert default_factor(lookup("thm5-poisson-k1")) == 20
    assert default_factor(ident) == 10


def test_exact_identity_passes_envelope():
    reps = check_many([same_both_sides()], 32, 200, seed=1, pilot_N=16)
    assert reps[0].passed and reps[0].ms_error == 0


def test_derive_seed_stable():
    assert derive_seed(1, "sweep", 256) == derive_seed(1, "sweep", 256)
    assert derive_seed(1, "sweep", 256) != derive_seed(1, "sweep", 512)
    assert 0 <= derive_seed(2**40, "x") < 2**63


def test_fit_slope():
    Ns = np.array([10, 20, 40, 80])
    assert fit_slope(Ns, 3.0 / Ns) == pytest.approx(-1.0)
    assert fit_slope(Ns, 1.0 / Ns ** 2) == pytest.approx(-2.0)
    assert np.isnan(fit_slope(Ns, [1, 0, 1, 1]))


def test_sweep():
    rep = convergence_sweep(lookup("J00-closed"), [64, 16, 32], 100, seed=1)
    assert rep.Ns == [16, 32, 64]
    assert rep.fitted_slope == pytest.approx(-2.0, abs=0.05)
    assert len({r.seed for r in rep.rows}) == 3


@pytest.mark.parametrize("Ns", [[256], [256, 512], [256, 256, 512]])
def test_sweep_needs_three_values(Ns):
    with pytest.raises(ValueError):
        convergence_sweep(lookup("J110"), Ns, 100, seed=0)


def test_covariance_small():
    one = KConst(1.0)
    rep = covariance_experiment(one, one, 1, 1, 64, 4000, seed=3)
    assert rep.quadrature == pytest.approx(0.5)
    assert rep.target == rep.quadrature
    assert rep.within(4)
    rep2 = covariance_experiment(one, one, 1, 2, 64, 4000, seed=3)
    assert rep2.target == 0.0
    assert rep2.within(4)
    assert rep2.to_dict()["pass"] in (True, False)


def test_covariance_nonconstant_kernel():
    phi1 = Separable((since_start(1),))  # value of the first argument
    rep = covariance_experiment(phi1, KConst(1.0), 1, 1, 64, 8000, seed=4)
    assert rep.quadrature == pytest.approx(1 / 3, abs=1e-4)
    assert rep.within(4)


def test_covariance_rejects():
    one = KConst(1.0)
    with pytest.raises(ValueError):
        covariance_experiment(one, one, 0, 1, 16, 100, seed=0)
    from itoreorder.core import DiffPow
    with pytest.raises(ValueError):
        covariance_experiment(DiffPow(0, 2, 1), one, 1, 1, 16, 100, seed=0)
