import numpy as np
import pytest
from hypothesis import given, strategies as st

from arwlab.contracts import random_instance
from arwlab.engine import (EMPTY, NEUTRAL, SELECT_ALL, SELECT_NONE, SLEEP, SLEEPING, Active, BudgetExceeded,
                           Configuration, ExplicitTapes, HashedSelection, IllegalOperation, IllegalTopple,
                           Move, Odometer, Policy, TapeStore, add_particle, box_region, enforce_activation,
                           legal_prefix, sleep_transform, stabilize, stabilize_until, topple)
from arwlab.jumps import nearest_neighbour_1d, nearest_neighbour_2d

P1 = nearest_neighbour_1d(0.5)


# site states -------------------------------------------------------------

def test_add_particle():
    assert add_particle(EMPTY) == Active(1)
    assert add_particle(SLEEPING) == Active(2)
    assert add_particle(Active(3)) == Active(4)


def test_sleep_transform():
    assert sleep_transform(Active(1)) == SLEEPING
    assert sleep_transform(Active(2)) == Active(2)
    assert sleep_transform(Active(5)) == Active(5)
    for s in (EMPTY, SLEEPING):
        with pytest.raises(IllegalOperation):
            sleep_transform(s)


def test_state_order_and_norm():
    chain = [EMPTY, SLEEPING, Active(1), Active(2), Active(7)]
    assert all(a < b for a, b in zip(chain, chain[1:]))
    assert [abs(s) for s in chain] == [0, 1, 1, 2, 7]
    with pytest.raises(ValueError):
        Active(0)


# toppling ------------------------------------------------------------------

def _one(x, state):
    c = Configuration(1, {})
    c[x] = state
    return c


def test_topple_sleep_alone():
    tapes = ExplicitTapes(P1, {(0,): [SLEEP]})
    cfg, odo = topple(_one(0, Active(1)), Odometer(), tapes, 0)
    assert cfg[0] == SLEEPING and odo[0] == 1


def test_topple_move():
    tapes = ExplicitTapes(P1, {(0,): [Move((1,))]})
    cfg, odo = topple(_one(0, Active(1)), Odometer(), tapes, 0)
    assert cfg[0] == EMPTY and cfg[1] == Active(1) and odo[0] == 1


def test_topple_sleep_shared_site_consumes_instruction():
    tapes = ExplicitTapes(P1, {(0,): [SLEEP]})
    cfg, odo = topple(_one(0, Active(2)), Odometer(), tapes, 0)
    assert cfg[0] == Active(2) and odo[0] == 1


def test_topple_neutral_and_wakeup():
    tapes = ExplicitTapes(P1, {(0,): [NEUTRAL, Move((1,))]})
    c = _one(0, Active(1))
    c[1] = SLEEPING
    c, o = topple(c, Odometer(), tapes, 0)
    assert c[0] == Active(1) and o[0] == 1
    c, o = topple(c, o, tapes, 0)
    assert c[1] == Active(2) and c[0] == EMPTY and o[0] == 2


def test_illegal_topple():
    tapes = ExplicitTapes(P1, {})
    for s in (EMPTY, SLEEPING):
        with pytest.raises(IllegalTopple):
            topple(_one(0, s), Odometer(), tapes, 0)


# tapes --------------------------------------------------------------------

def test_tape_is_pure_function_of_key():
    t = TapeStore(P1, 1.0, 17)
    assert [t.code((3,), j) for j in range(1, 50)] == [TapeStore(P1, 1.0, 17).code((3,), j) for j in range(1, 50)]
    assert [t.code((3,), j) for j in range(1, 50)] != [t.code((4,), j) for j in range(1, 50)]


def test_tape_sleep_frequency():
    lam = 0.7
    t = TapeStore(P1, lam, 3)
    n = 100_000
    s = lam / (1 + lam)
    hits = sum(t.code((0,), j) == -1 for j in range(1, n + 1))
    assert abs(hits / n - s) < 4 * np.sqrt(s * (1 - s) / n)


def test_tape_move_frequencies_follow_jumps():
    p = nearest_neighbour_2d(0.4, 0.1, 0.3, 0.2)
    t = TapeStore(p, 0.0, 5)
    codes = np.array([t.code((1, 2), j) for j in range(1, 40_001)])
    freq = np.bincount(codes, minlength=4) / len(codes)
    np.testing.assert_allclose(freq, p.probs, atol=4 * 0.5 / np.sqrt(len(codes)))


def test_lambda_zero_has_no_sleep():
    t = TapeStore(P1, 0.0, 1)
    assert all(t.code((0,), j) != -1 for j in range(1, 2000))


# stabilization --------------------------------------------------------------

def test_empty_configuration_is_stable():
    odo, cfg = stabilize(Configuration(1, {}), box_region([-3], [3]), TapeStore(P1, 1.0, 0))
    assert odo.total() == 0 and cfg.total() == 0


def test_single_particle_sleeps_at_origin():
    tapes = ExplicitTapes(P1, {(0,): [SLEEP]})
    odo, cfg = stabilize(_one(0, Active(1)), [(0,)], tapes)
    assert odo[0] == 1 and cfg[0] == SLEEPING


@pytest.mark.parametrize("policy", ["fifo", "lifo", "sweep", "random"])
def test_policies_and_backends_agree(policy):
    inst = random_instance(11, 2, 0.8, 0.1)
    ref = stabilize(inst.config, inst.region, inst.tapes, "fifo", backend="reference")
    got = stabilize(inst.config, inst.region, inst.tapes, Policy(policy, 4), backend="kernel")
    assert got == ref


def test_budget_exceeded_is_distinct():
    inst = random_instance(2, 1, 0.8, 0.1)
    with pytest.raises(BudgetExceeded) as err:
        stabilize(inst.config, inst.region, inst.tapes, budget=1)
    assert not isinstance(err.value, IllegalTopple)
    assert err.value.odometer.total() <= 1


def test_stabilize_until_caps_at_threshold():
    inst = random_instance(4, 1, 0.8, 0.1)
    odo, _ = stabilize(inst.config, inst.region, inst.tapes)
    m0 = odo[(0,)]
    for thr in (1, 2, 5):
        val, reached = stabilize_until(inst.config, inst.region, inst.tapes, (0,), thr)
        assert val == min(m0, thr)
        assert reached == (m0 >= thr)


def test_stabilized_region_has_no_active_site():
    inst = random_instance(8, 2, 0.8, 1.0)
    _, cfg = stabilize(inst.config, inst.region, inst.tapes)
    assert not cfg.unstable_sites(inst.region)
    assert cfg.total() == inst.config.total()


def test_enforce_activation_extremes():
    inst = random_instance(9, 1, 0.8, 1.0)
    none = enforce_activation(inst.tapes, SELECT_NONE)
    assert all(none.instruction((x,), j) == inst.tapes.instruction((x,), j) for x in range(-3, 3) for j in range(1, 9))
    full = enforce_activation(inst.tapes, SELECT_ALL)
    _, cfg = stabilize(inst.config, inst.region, full)
    assert not any(s.sleeping for s in cfg.sites.values())


def test_json_round_trip():
    inst = random_instance(3, 2, 0.8, 1.0)
    odo, cfg = stabilize(inst.config, inst.region, inst.tapes)
    assert Configuration.from_json(cfg.to_json()) == cfg
    assert Odometer.from_json(odo.to_json()) == odo


# contracts as properties --------------------------------------------------

instances = st.builds(random_instance, st.integers(0, 2**40), st.sampled_from([1, 2]),
                      st.sampled_from([0.3, 0.8]), st.sampled_from([0.1, 1.0]))


@given(instances, st.integers(0, 2**30), st.integers(0, 2**30))
def test_order_independence(inst, a, b):
    r1 = stabilize(inst.config, inst.region, inst.tapes, Policy("random", a))
    r2 = stabilize(inst.config, inst.region, inst.tapes, Policy("random", b), backend="reference")
    assert r1 == r2


@given(instances, st.integers(0, 400), st.sampled_from(["fifo", "lifo", "sweep", "random"]))
def test_least_action(inst, n, kind):
    full, _ = stabilize(inst.config, inst.region, inst.tapes)
    odo, cfg, finished = legal_prefix(inst.config, inst.region, inst.tapes, Policy(kind, n), n)
    assert odo <= full
    assert cfg.total() == inst.config.total()
    if finished:
        assert odo == full


@given(instances, st.integers(0, 2**30))
def test_monotone_in_region_and_configuration(inst, s):
    rng = np.random.default_rng(s)
    full, _ = stabilize(inst.config, inst.region, inst.tapes)
    sub = [x for x in inst.region if rng.random() < 0.6]
    smaller = Configuration(inst.dim, {x: v for x, v in inst.config.sites.items() if rng.random() < 0.6})
    odo, _ = stabilize(smaller, sub, inst.tapes)
    assert odo <= full
    bigger = inst.config.copy()
    for x in inst.region:
        if rng.random() < 0.2:
            bigger[x] = add_particle(bigger[x])
    big, _ = stabilize(bigger, inst.region, inst.tapes)
    assert full <= big


@given(instances, st.floats(0.05, 1.0), st.integers(0, 2**30))
def test_enforced_activation_never_lowers(inst, frac, s):
    full, _ = stabilize(inst.config, inst.region, inst.tapes)
    odo, _ = stabilize(inst.config, inst.region, enforce_activation(inst.tapes, HashedSelection(frac, s)))
    assert full <= odo


@given(instances)
def test_determinism(inst):
    assert stabilize(inst.config, inst.region, inst.tapes) == stabilize(inst.config, inst.region, inst.tapes)
