import math

import numpy as np
import pytest

from ringtrap import FepConfig, FzrConfig, SwtConfig
from ringtrap.oracle import (CapExceeded, build_generator, enumerate_reachable,
                             evolve_distributions, exact_ssep_mixing,
                             exact_transient_prob, exact_tv_and_mixing,
                             excess_class, generator_power_sequence,
                             generator_power_value, semigroup_value)


def test_reachable_examples():
    space = enumerate_reachable(SwtConfig((1, -1)))
    assert space.states == [(0, 0), (1, -1)]
    frozen = enumerate_reachable(SwtConfig((0, -2, 0)))
    assert len(frozen) == 1
    # the pair on the 4-ring can only split into the two alternating
    # absorbing states: neither of its particles may jump towards the other
    fep = enumerate_reachable(FepConfig((1, 1, 0, 0)))
    assert sorted(fep.states) == [(0, 1, 0, 1), (1, 0, 1, 0), (1, 1, 0, 0)]
    fzr = enumerate_reachable(FzrConfig((2, 0)))
    assert set(fzr.states) == {(2, 0), (1, 1)}


def test_cap_exceeded():
    with pytest.raises(CapExceeded) as err:
        enumerate_reachable(SwtConfig((1, 1, 1, -1, -1, 0, 0)), cap=5)
    assert err.value.partial_count >= 5


def test_generator_row_structure():
    space = enumerate_reachable(SwtConfig((1, -1)))
    gen = build_generator(space)
    i = space.index[(1, -1)]
    # both edges of the 2-ring push the lone particle into the trap
    assert gen.rows[i] == [(space.index[(0, 0)], 2)]
    assert gen.exit_rates[i] == 2
    P = gen.uniformized
    rowsums = np.asarray(P.sum(axis=1)).ravel()
    assert np.allclose(rowsums, 1.0, atol=1e-12)


def test_exact_transient_prob_closed_form():
    for t in (0.1, 0.5, 1.0, 3.0):
        p, err = exact_transient_prob(SwtConfig((1, -1)), t)
        assert err < 1e-10
        assert abs(p - math.exp(-2 * t)) < 1e-10
    p, _ = exact_transient_prob(SwtConfig((1, 0)), 1.0)
    assert p == 0.0


def test_evolution_conserves_mass():
    space = enumerate_reachable(SwtConfig((1, 1, -1, 0, -1)))
    gen = build_generator(space)
    mu0 = np.zeros(len(space))
    mu0[space.index[(1, 1, -1, 0, -1)]] = 1.0
    (dist,), (err,) = evolve_distributions(gen, mu0, [2.0], tol=1e-12)
    assert abs(dist.sum() - 1.0) <= err + 1e-12
    assert (dist >= -1e-15).all()


def test_generator_power_zero_patterns():
    xi = SwtConfig((-3, 1, 1, 1, 0, -1, 0))
    f = lambda s: 1 if s[5] == 1 else 0
    g = lambda s: 1 if s[6] == 1 else 0
    h = lambda s: f(s) * g(s)
    fs = generator_power_sequence(xi, f, 5)
    gs = generator_power_sequence(xi, g, 6)
    hs = generator_power_sequence(xi, h, 10)
    assert fs[:5] == [0] * 5 and fs[5] > 0
    assert gs[:6] == [0] * 6 and gs[6] > 0
    assert hs[:10] == [0] * 10 and hs[10] > 0
    assert generator_power_value(xi, h, 10) == hs[10]
    assert all(isinstance(v, int) for v in hs)


def test_semigroup_at_zero_and_case1():
    xi = SwtConfig((1, 1, -1, 0, -1))
    f = lambda s: 1 if s[3] == 1 else 0
    val, err = semigroup_value(xi, f, 0.0)
    assert val == f(xi.sites) and err < 1e-12
    init = xi.sites
    filled = lambda s, k: 1 if s[k] > init[k] else 0
    joint = lambda s: filled(s, 3) * (1 if filled(s, 2) + filled(s, 4) >= 1 else 0)
    b = lambda s: filled(s, 3)
    c = lambda s: 1 if filled(s, 2) + filled(s, 4) >= 1 else 0
    pj, e1 = semigroup_value(xi, joint, 1.0)
    pb, e2 = semigroup_value(xi, b, 1.0)
    pc, e3 = semigroup_value(xi, c, 1.0)
    assert abs(pj - pb) < 1e-11          # the joint event equals its marginal
    assert pj > pb * pc + 1e-4           # strictly above the product
    assert max(e1, e2, e3) < 1e-12


def test_two_state_mixing_closed_form():
    res = exact_tv_and_mixing(2, 1, 0.25)
    assert abs(res.mixing_time - math.log(2) / 4) < 1e-6
    for t in (0.05, 0.2, 0.6):
        assert abs(res.d_tv(t) - 0.5 * math.exp(-4 * t)) < 1e-9
    assert abs(exact_ssep_mixing(2, 1, 0.25) - math.log(2) / 4) < 1e-6


def test_mixing_equals_theta_at_zero_excess():
    res = exact_tv_and_mixing(4, 0, 0.25)
    assert res.mixing_time == res.theta
    assert res.ssep_mixing_time == 0.0


def test_d_tv_non_increasing():
    res = exact_tv_and_mixing(4, 1, 0.25)
    ts = np.linspace(0.0, 8.0, 15)
    vals = [res.d_tv(t) for t in ts]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


def test_excess_class_counts():
    assert [len(excess_class(6, s)) for s in range(4)] == [462, 252, 126, 56]
    # the class is closed under the dynamics
    from ringtrap.dynamics import rules
    states = set(excess_class(4, 1))
    for st in states:
        for nxt in rules.transitions("swt", st):
            assert nxt in states


def test_oracle_vs_monte_carlo_small():
    from ringtrap.dynamics import sample_swt_exit_times
    from ringtrap.experiments import wilson_interval
    xi = SwtConfig((1, 1, -1, -1, 1, 0))
    t = 6.0
    exact, err = exact_transient_prob(xi, t)
    n = 40_000
    exits = sample_swt_exit_times(xi, n, 60, t)
    lo, hi = wilson_interval(int((exits > t).sum()), n)
    assert lo - err <= exact <= hi + err
