import pytest
from hypothesis import given, settings, strategies as st

from robust_rcpsp.instances import InstanceError, to_half
from robust_rcpsp.layered import baseline_for, q_gamma
from robust_rcpsp.oracle import (MAX_SUBSET_JOBS, adj_opt_bruteforce_serial, anchored_bruteforce,
                                 enumerate_deviations, linear_extensions, max_anchored_bruteforce,
                                 q_gamma_bruteforce, random_deviations, random_instance, random_serial_instance)
from robust_rcpsp.sgs import SequencingDecision, compute_priority, parallel_sgs


def test_deviation_enumeration(chain):
    _, ds = chain
    assert list(enumerate_deviations(ds)) == [(0, 0, 0, 0), (0, 2, 0, 0), (0, 0, 2, 0)]
    assert len(list(enumerate_deviations(ds.with_gamma(2)))) == 4


def test_q_gamma_bruteforce_examples(chain):
    inst, ds = chain
    sigma = SequencingDecision(inst.arcs)
    assert q_gamma_bruteforce(sigma, inst, ds) == to_half(6)
    assert q_gamma_bruteforce(sigma, inst, ds.with_gamma(0)) == to_half(5)
    assert q_gamma_bruteforce(sigma, inst, ds.with_gamma(2)) == to_half(7)


def test_anchored_bruteforce_examples(chain):
    inst, ds = chain
    sigma = SequencingDecision(inst.arcs)
    assert anchored_bruteforce((0, 0, 4, 10), sigma, (), inst, ds)
    q = q_gamma(sigma, inst, ds)
    assert anchored_bruteforce((0, 0, 4, q), sigma, {3}, inst, ds)
    assert not anchored_bruteforce((0, 0, 4, q - 1), sigma, {3}, inst, ds)


def test_max_anchored_examples(chain):
    inst, ds = chain
    sigma = SequencingDecision(inst.arcs)
    z, h = max_anchored_bruteforce(sigma, inst, ds, to_half(6))
    assert h == {1, 3}
    assert tuple(z) == (0, 0, 4, 12)
    _, h = max_anchored_bruteforce(sigma, inst, ds, to_half(7))
    assert h == {1, 2, 3}
    with pytest.raises(InstanceError):
        max_anchored_bruteforce(sigma, inst, ds, to_half(5))


def test_serial_optimum_examples(chain, par):
    inst, ds = par
    assert adj_opt_bruteforce_serial(inst, ds) == to_half(6)
    assert adj_opt_bruteforce_serial(inst, ds.with_gamma(0)) == to_half(5)
    assert adj_opt_bruteforce_serial(*chain) == to_half(6)
    assert sorted(linear_extensions(inst)) == [(1, 2), (2, 1)]


def test_serial_oracle_precondition():
    with pytest.raises(ValueError):
        adj_opt_bruteforce_serial(random_instance(1, 3, K=2), random_deviations(1, random_instance(1, 3, K=2), 1))


def test_enumeration_guard():
    inst = random_instance(0, MAX_SUBSET_JOBS + 1)
    ds = random_deviations(0, inst, 1)
    _, _, sigma = parallel_sgs(inst, compute_priority(inst, "ID"))
    with pytest.raises(ValueError, match="brute force refused"):
        max_anchored_bruteforce(sigma, inst, ds, 10 ** 6)


def test_random_instance_examples():
    assert random_instance(5, 6, K=2) == random_instance(5, 6, K=2)
    flat = random_instance(3, 4, density=0.0)
    assert set(flat.arcs) == {(0, j) for j in range(1, 5)} | {(j, 5) for j in range(1, 5)}
    assert random_instance(3, 0).arcs == ((0, 1),)
    durations = random_instance(9, 20).durations[1:-1]
    assert all(2 <= d <= 20 and d % 2 == 0 for d in durations)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(0, 7), gamma=st.integers(0, 3))
def test_t_always_anchorable_at_worst_case_makespan(seed, n, gamma):
    inst = random_instance(seed, n, K=2)
    ds = random_deviations(seed, inst, gamma)
    _, _, sigma = parallel_sgs(inst, compute_priority(inst, "MTS"))
    q = q_gamma(sigma, inst, ds)
    z, h = max_anchored_bruteforce(sigma, inst, ds, q)
    assert inst.sink in h
    assert z.makespan <= q
    assert z == baseline_for(sigma, h, inst, ds)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 6), gamma=st.integers(0, 3))
def test_serial_optimum_is_a_lower_bound(seed, n, gamma):
    inst = random_serial_instance(seed, n)
    ds = random_deviations(seed, inst, gamma)
    opt = adj_opt_bruteforce_serial(inst, ds)
    for rule in ("ID", "SPT", "MTS"):
        _, _, sigma = parallel_sgs(inst, compute_priority(inst, rule))
        assert opt <= q_gamma(sigma, inst, ds)
