import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from arwlab.bounds import bound, tail_probabilities
from arwlab.engine import (SLEEP, Configuration, ExplicitTapes, Move, TapeStore, box_region, stabilize)
from arwlab.experiments import (Bernoulli, Poisson, TrapezoidGeometry, activity_probe, detect_crossing,
                                fixation_probe, phase_sweep, run_barrier_algorithm, sample_delta_A_tilde,
                                sample_initial, trapezoid_stabilize, wilson_interval)
from arwlab.experiments.delta_a import delta_A_convergence, total_variation
from arwlab.experiments.phase import PhaseRow, PhaseTable, decays
from arwlab.experiments.trapezoid import GeometryError, choose_K, geometry_for
from arwlab.jumps import nearest_neighbour_1d, nearest_neighbour_2d
from arwlab.rng import derive_seed

R, Lf = Move((1,)), Move((-1,))
TASEP = nearest_neighbour_1d(1.0)
DRIFT2 = nearest_neighbour_2d(0.7, 0.1, 0.1, 0.1)


# initial laws --------------------------------------------------------------

def test_laws():
    assert Poisson(0.4).nu0 == pytest.approx(math.exp(-0.4))
    assert Bernoulli(0.4).nu0 == pytest.approx(0.6)
    with pytest.raises(ValueError):
        Bernoulli(1.2)
    with pytest.raises(ValueError):
        Poisson(-1)


def test_sample_initial_examples():
    region = box_region([0], [49])
    assert sample_initial(Bernoulli(0), region, 1).total() == 0
    full = sample_initial(Bernoulli(1), region, 1)
    assert all(full[x].active == 1 for x in region)
    totals = np.array([sample_initial(Poisson(0.7), region, s).total() for s in range(1000)])
    n, mu = len(region), 0.7
    assert abs(totals.mean() - n * mu) < 4 * math.sqrt(n * mu / 1000)
    assert sample_initial(Poisson(0.7), region, 3) == sample_initial(Poisson(0.7), region, 3)


# probes ----------------------------------------------------------------------

def test_wilson():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0 < hi < 0.35
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_probes_without_particles():
    assert fixation_probe(Bernoulli(0), 1.0, TASEP, 50, 20, 1).estimate == 1.0
    assert activity_probe(Bernoulli(0), 1.0, TASEP, 50, 0.05, 20, 1).estimate == 0.0


def test_fixation_side_plateau():
    est = [fixation_probe(Bernoulli(0.25), 1.0, TASEP, L, 200, 3).estimate for L in (250, 500, 1000)]
    assert min(est) > 0.3
    assert max(est) - min(est) < 0.15


def test_active_side():
    est = [fixation_probe(Bernoulli(0.75), 1.0, TASEP, L, 100, 4).estimate for L in (250, 500, 1000)]
    assert est[-1] <= est[0] and est[-1] < 0.05
    act = [activity_probe(Bernoulli(0.75), 1.0, TASEP, L, 0.05, 100, 4).estimate for L in (250, 500, 1000)]
    assert min(act) > 0.5
    huge = activity_probe(Bernoulli(0.75), 1.0, TASEP, 250, 10 * 0.75 * 2, 50, 4)
    assert huge.estimate == 0.0


def test_budget_failures_are_reported():
    est = fixation_probe(Bernoulli(0.75), 1.0, TASEP, 100, 10, 5, budget=3)
    assert est.budget_failures == 10 and est.trials == 0 and math.isnan(est.estimate)


def test_probe_reproducible_and_worker_independent():
    a = fixation_probe(Bernoulli(0.5), 1.0, TASEP, 100, 30, 6)
    b = fixation_probe(Bernoulli(0.5), 1.0, TASEP, 100, 30, 6, workers=2)
    assert a == b


# barrier algorithm -----------------------------------------------------------

def test_barrier_empty():
    st_ = run_barrier_algorithm(Configuration(1, {}), ExplicitTapes(nearest_neighbour_1d(0.5), {}), 0.5, 1.0, 10)
    assert st_.success and st_.A == [0] and st_.traps == []


def test_barrier_hand_trace():
    tapes = ExplicitTapes(nearest_neighbour_1d(0.5), {(5,): [Lf, SLEEP, Lf], (4,): [R, Lf], (3,): [Lf],
                                                      (2,): [Lf], (1,): [Lf]})
    st_ = run_barrier_algorithm(Configuration.from_counts(1, {(5,): 1}), tapes, 0.5, 1.0, 10)
    rec = st_.explorations[0]
    assert rec.S == [5, 4, 5, 4, 3, 2, 1, 0]
    assert rec.Y[:rec.T] == [0, 0, 1, 0, 0, 0, 0]
    assert st_.traps == [5] and st_.A == [0, 5] and st_.success


def test_barrier_no_sleep_fails():
    tapes = ExplicitTapes(nearest_neighbour_1d(0.5), {(x,): [Lf] for x in range(1, 4)})
    st_ = run_barrier_algorithm(Configuration.from_counts(1, {(3,): 1}), tapes, 0.5, 1.0, 10)
    assert not st_.success and st_.A[-1] == math.inf


def test_barrier_escape_keeps_barrier():
    tapes = ExplicitTapes(nearest_neighbour_1d(0.5), {(x,): [SLEEP, R] for x in range(2, 5)})
    st_ = run_barrier_algorithm(Configuration.from_counts(1, {(2,): 1}), tapes, 0.5, 1.0, 4)
    assert st_.success and st_.A == [0, 0] and st_.traps == [None]


def test_barrier_failure_is_absorbing():
    tapes = ExplicitTapes(nearest_neighbour_1d(0.5), {(x,): [Lf] for x in range(1, 8)})
    st_ = run_barrier_algorithm(Configuration.from_counts(1, {(3,): 1, (6,): 2}), tapes, 0.5, 1.0, 10)
    assert not st_.success and st_.A[1:] == [math.inf] * 3


def test_barrier_rejects_right_bias():
    with pytest.raises(ValueError):
        run_barrier_algorithm(Configuration(1, {}), None, 0.7, 1.0, 10)


@given(st.integers(0, 2**40), st.sampled_from([0.1, 0.3, 0.5]), st.sampled_from([0.5, 1.0]))
def test_barrier_invariants_and_implication(seed, q, lam):
    L = 30
    region = box_region([0], [L])
    eta = sample_initial(Bernoulli(0.5 * bound(lam, q)), region, seed)
    tapes = TapeStore(nearest_neighbour_1d(q), lam, seed)
    st_ = run_barrier_algorithm(eta, tapes, q, lam, L)
    finite = [a for a in st_.A if a != math.inf]
    assert all(a <= b for a, b in zip(finite, finite[1:]))
    for trap, a in zip(st_.traps, st_.A[1:]):
        if trap is not None:
            assert trap <= a
    for rec in st_.explorations:
        assert rec.S[0] == rec.X and len(rec.S) == len(rec.Y)
        assert all(abs(b - a) == 1 for a, b in zip(rec.S, rec.S[1:]))
    if st_.success:
        odo, _ = stabilize(eta, region, tapes)
        assert odo[(0,)] == 0


# barrier increment -----------------------------------------------------------

def test_increment_has_no_mass_at_zero():
    s = sample_delta_A_tilde(0.3, 0.5, trials=20_000, seed=1)
    assert s.counts[0] == 0 and s.failures == 0


def test_increment_matches_closed_form():
    s = sample_delta_A_tilde(0.3, 0.5, trials=20_000, seed=2)
    assert total_variation(s, tail_probabilities(0.5, 0.3, 11)) < 0.02


def test_increment_mean_near_zero_bias():
    s = sample_delta_A_tilde(0.01, 1.0, trials=20_000, seed=3)
    assert s.mean() == pytest.approx(2.0, rel=0.05)


def test_increment_convergence_check():
    z, a, b = delta_A_convergence(0.3, 0.5, trials=5000, seed=4)
    assert z < 1.0 and a.y * 2 == b.y


def test_increment_domain():
    with pytest.raises(ValueError):
        sample_delta_A_tilde(0.6, 1.0, trials=10)


# trapezoid ---------------------------------------------------------------------

def test_geometry_validation_names_inequality():
    with pytest.raises(GeometryError, match="K < L"):
        TrapezoidGeometry(5, 4.0, 5, (1.0, 0.0))
    with pytest.raises(GeometryError, match="g > 0"):
        TrapezoidGeometry(5, 0.0, 1, (1.0, 0.0))
    with pytest.raises(GeometryError, match=r"\|axis\| = 1"):
        TrapezoidGeometry(5, 1.0, 1, (1.0, 1.0))
    with pytest.raises(GeometryError, match="2gL"):
        TrapezoidGeometry(10, 0.1, 3, (1.0, 0.0))


def test_geometry_shape():
    geo = TrapezoidGeometry(10, 2.0, 2, (1.0, 0.0))
    seg = geo.segments()
    (a, b), (c, d) = seg["F"], seg["D"]
    assert math.dist(a, b) == pytest.approx(4 * 2.0 * 10)
    assert math.dist(c, d) == pytest.approx(2 * 2.0 * 10)
    assert geo.in_trapezoid([(0, 0)])[0] and not geo.in_trapezoid([(1, 0)])[0]
    assert geo.in_cone([(3, 6)])[0] and not geo.in_cone([(3, 7)])[0] and geo.in_cone([(0, 0)])[0]
    assert geo.in_ball([(1, 1)])[0] and not geo.in_ball([(2, 0)])[0]
    assert geo.confinement_margin() <= 0


@given(st.floats(0.2, 6.0), st.floats(-40, 0), st.floats(-1, 1), st.floats(0, 60), st.floats(-1, 1))
def test_cone_translates_stay_in_trapezoid_until_F(g, u0, vfrac, t, slope):
    geo = TrapezoidGeometry(40, g, 1, (1.0, 0.0))
    z = (u0, vfrac * g * (80 + u0))
    w = (t, slope * g * t)
    assert geo.in_trapezoid([z])[0] and geo.in_cone([w])[0]
    p = (z[0] + w[0], z[1] + w[1])
    if p[0] <= 0:
        assert geo.in_trapezoid([p])[0]


def test_choose_K_monotone_pilot():
    K = choose_K(DRIFT2, 4.0, trials=500, horizon=200, seed=1)
    assert 1 <= K <= 10


def test_trapezoid_without_particles():
    geo = geometry_for(DRIFT2, 20, K=2)
    res = trapezoid_stabilize(Bernoulli(0.0), 0.5, DRIFT2, geo, 1)
    assert res.as_tuple()[:3] == (0, 0, 0) and res.ghosts == 0
    # R~ walks start from every empty site, so they still run on an empty configuration
    again = trapezoid_stabilize(Bernoulli(0.0), 0.5, DRIFT2, geo, 1)
    assert again.R_tilde == res.R_tilde


def test_trapezoid_identity_and_confinement():
    geo = geometry_for(DRIFT2, 30, K=2)
    for s in range(10):
        res = trapezoid_stabilize(Poisson(0.6), 0.5, DRIFT2, geo, s)
        assert res.G == res.W - res.R
        assert res.confinement_violations == 0 and res.side_exits == 0
        assert res.unfinished == 0 and res.anomalies == 0
        assert res.moved <= res.particles


def test_ghosts_do_not_touch_configuration():
    geo = geometry_for(DRIFT2, 30, K=2)
    a = trapezoid_stabilize(Bernoulli(0.5), 0.5, DRIFT2, geo, 7, ghost_seed=1, keep_state=True)
    b = trapezoid_stabilize(Bernoulli(0.5), 0.5, DRIFT2, geo, 7, ghost_seed=2, keep_state=True)
    assert np.array_equal(a.final_state, b.final_state)
    assert a.G == b.G and a.ghosts == b.ghosts


def test_trapezoid_domain_errors():
    geo = geometry_for(DRIFT2, 20, K=2)
    with pytest.raises(GeometryError, match="axis parallel"):
        trapezoid_stabilize(Bernoulli(0.5), 0.5, nearest_neighbour_2d(0.1, 0.1, 0.7, 0.1), geo, 1)
    with pytest.raises(GeometryError):
        trapezoid_stabilize(Bernoulli(0.5), 0.5, TASEP, geo, 1)


# phase sweep --------------------------------------------------------------------

def test_decay_rule():
    assert decays(0.2, 0.05) and not decays(0.2, 0.15) and decays(0.0, 0.0)


def _table(values, Ls=(10, 20)):
    rows = [PhaseRow(mu, L, p, 0, 1, 0, 0, 1) for mu, ps in values.items() for L, p in zip(Ls, ps)]
    return PhaseTable(tuple(rows), tuple(values), tuple(Ls))


def test_detect_crossing():
    t = _table({0.3: (0.5, 0.5), 0.4: (0.3, 0.28), 0.5: (0.1, 0.02), 0.6: (0.0, 0.0)})
    cr = detect_crossing(t)
    assert cr["crossing"] == pytest.approx(0.45) and cr["mu_stable"] == 0.4 and cr["mu_decay"] == 0.5
    assert detect_crossing(_table({0.1: (0.5, 0.5), 0.2: (0.4, 0.4)}))["crossing"] is None


def test_sweep_below_bound_never_decays():
    q, lam = 0.5, 1.0
    B = bound(lam, q)
    mus = [0.25 * B, 0.5 * B]
    tab = phase_sweep(Bernoulli(0.0), lam, nearest_neighbour_1d(q), mus, [50, 100, 200], 100, 8)
    assert detect_crossing(tab)["decaying"] == []


def test_sweep_validation_and_reproducibility():
    with pytest.raises(ValueError):
        phase_sweep(Bernoulli(0.0), 1.0, TASEP, [], [10], 5, 0)
    a = phase_sweep(Bernoulli(0.0), 1.0, TASEP, [0.3, 0.6], [20, 40], 20, 9)
    b = phase_sweep(Bernoulli(0.0), 1.0, TASEP, [0.3, 0.6], [20, 40], 20, 9)
    assert a == b
