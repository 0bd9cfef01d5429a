import math

import numpy as np
import pytest
from scipy import stats

from ringtrap import (FepConfig, FzrConfig, Phase, SegmentSsepConfig,
                      SwtConfig, classify)
from ringtrap.dynamics import (ClockStream, Trajectory, make_labelled, replay,
                               sample_fep_exit_times, sample_fzr_exit_times,
                               sample_swt_exit_times, simulate, simulate_fep,
                               simulate_fzr, simulate_labelled_swt,
                               simulate_segment_ssep, simulate_swt,
                               transience_exit_time)
from ringtrap.dynamics.fast import sample_segment_absorption_times
from ringtrap.oracle import exact_transient_prob


def test_frozen_swt_has_no_events():
    traj = simulate_swt(SwtConfig((0, -2, 0)), ClockStream(3, 1), 25.0)
    assert traj.events == []
    assert traj.final == traj.initial
    assert traj.first_exit_time == 0.0


def test_single_particle_two_sites_exit_rate():
    # one particle facing a trap across both edges: exit ~ Exponential(2)
    exits = sample_swt_exit_times(SwtConfig((1, -1)), 100_000, 7, 50.0)
    assert np.isfinite(exits).all()
    assert abs(exits.mean() - 0.5) < 0.01


def test_critical_absorbs_to_empty_and_conserves():
    xi = SwtConfig((1, 1, -1, 0, -1))
    for i in range(50):
        traj = simulate_swt(xi, ClockStream(5, 3, (i,)), 100.0)
        replay(traj)  # conservation + legality of every event
        assert traj.exited
        assert traj.final.sites == (0, 0, 0, 0, 0)
        assert traj.final.excess == xi.excess == 0


def test_fep_frozen_and_ergodic_starts():
    frozen = simulate_fep(FepConfig((1, 0, 1, 0, 0)), ClockStream(5, 4), 20.0)
    assert frozen.events == [] and frozen.first_exit_time == 0.0
    ergodic = simulate_fep(FepConfig((1, 1, 1, 0)), ClockStream(4, 5), 5.0)
    assert ergodic.first_exit_time == 0.0
    assert len(ergodic.events) > 0  # ergodic keeps moving


def test_fep_pair_absorbs():
    eta = FepConfig((1, 1, 0, 0))
    exits = sample_fep_exit_times(eta, 10_000, 11, 5.0)
    p_hat = float((exits > 5.0).mean())
    assert p_hat < 0.01
    exact, err = exact_transient_prob(eta, 5.0)
    lo, hi = _wilson(int((exits > 5.0).sum()), 10_000)
    assert lo - err <= exact <= hi + err


def _wilson(successes, n):
    from ringtrap.experiments import wilson_interval
    return wilson_interval(successes, n)


def test_fzr_examples():
    quiet = simulate_fzr(FzrConfig((1, 1, 1)), ClockStream(6, 6), 20.0)
    assert quiet.events == []
    # (2,0): one active site emitting in either direction at rate 1 each
    exits = sample_fzr_exit_times(FzrConfig((2, 0)), 50_000, 8, 40.0)
    assert abs(exits.mean() - 0.5) < 0.02
    traj = simulate_fzr(FzrConfig((2, 0)), ClockStream(4, 9), 40.0)
    assert traj.final.sites == (1, 1)
    assert classify(traj.final) is Phase.FROZEN_AND_ERGODIC
    # once every site holds a particle, it stays that way
    traj = simulate_fzr(FzrConfig((3, 1, 1)), ClockStream(6, 10), 40.0)
    sites = list(traj.initial.sites)
    seen_ergodic = False
    from ringtrap.dynamics import rules
    for ev in traj.events:
        rules.fzr_clock_update(sites, ev.clock)
        if min(sites) >= 1:
            seen_ergodic = True
        if seen_ergodic:
            assert min(sites) >= 1
    assert seen_ergodic


def test_segment_examples():
    empty = simulate_segment_ssep(SegmentSsepConfig((0, 0, 0)),
                                  ClockStream(4, 12), 10.0)
    assert empty.events == []
    # single site flanked by two killing edges: absorption ~ Exponential(2)
    exits = sample_segment_absorption_times(SegmentSsepConfig((1,)), 100_000,
                                            13, 50.0)
    assert abs(exits.mean() - 0.5) < 0.01


def test_labelled_no_traps_walks_forever():
    state = make_labelled(SwtConfig((1, 0)))
    traj = simulate_labelled_swt(state, ClockStream(2, 14), 50.0)
    assert traj.label_state.alive == (1,)
    assert len(traj.events) > 50  # rate-2 walk produces ~100 moves


def test_labelled_first_into_trap_dies():
    for i in range(40):
        traj = simulate_labelled_swt(make_labelled(SwtConfig((1, 1, -1))),
                                     ClockStream(3, 15, (i,)), 60.0)
        final = traj.label_state
        dead = [j for j, a in enumerate(final.alive) if a == 0]
        assert len(dead) == 1
        assert final.positions[dead[0]] == 2
        # replay the log: the label recorded in the trap-fill event is the
        # first to reach site 2
        fill = next(e for e in traj.events if e.kind == "trap-fill")
        assert fill.labels == (dead[0],)


def test_labelled_marginal_equals_plain():
    rng = np.random.default_rng(21)
    for i in range(1000):
        K = int(rng.integers(2, 9))
        xi = SwtConfig(tuple(int(v) for v in rng.integers(-2, 2, K)))
        clocks = ClockStream(K, 22, (i,))
        plain = simulate_swt(xi, clocks, 8.0)
        labelled = simulate_labelled_swt(make_labelled(xi), clocks, 8.0)
        a = [(e.time, e.kind, e.src, e.dst) for e in plain.events]
        b = [(e.time, e.kind, e.src, e.dst) for e in labelled.events
             if e.kind != "swap"]
        assert a == b
        assert plain.final.sites == labelled.final.sites


def test_exit_time_op_matches_engine():
    rng = np.random.default_rng(23)
    for i in range(200):
        K = int(rng.integers(2, 8))
        xi = SwtConfig(tuple(int(v) for v in rng.integers(-2, 2, K)))
        traj = simulate_swt(xi, ClockStream(K, 24, (i,)), 15.0)
        assert transience_exit_time(traj) == traj.first_exit_time


def test_replay_validates_corpus():
    """Conservation and absorption monotonicity across all processes."""
    rng = np.random.default_rng(25)
    for i in range(200):
        K = int(rng.integers(2, 8))
        pick = i % 4
        if pick == 0:
            cfg = SwtConfig(tuple(int(v) for v in rng.integers(-2, 2, K)))
        elif pick == 1:
            cfg = FepConfig(tuple(int(v) for v in rng.integers(0, 2, K)))
        elif pick == 2:
            cfg = FzrConfig(tuple(int(v) for v in rng.integers(0, 3, K)))
        else:
            cfg = SegmentSsepConfig(tuple(int(v) for v in rng.integers(0, 2, K)))
        traj = simulate(cfg, ClockStream(_clocks_for(cfg), 26, (i,)), 10.0)
        replay(traj)


def _clocks_for(cfg):
    from ringtrap.configs import process_name
    from ringtrap.dynamics import rules
    return rules.clock_count(process_name(cfg), len(cfg.sites))


def test_engine_equivalence_two_sample():
    """Clock-stream and aggregate engines give the same exit-time law."""
    xi = SwtConfig((1, 1, -1, 1, -1, -1))
    n = 10_000
    clock_exits = np.array([
        simulate_swt(xi, ClockStream(6, 30, (i,)), 200.0,
                     stop_at_exit=True).first_exit_time
        for i in range(n)])
    fast_exits = sample_swt_exit_times(xi, n, 31, 200.0)
    assert np.isfinite(clock_exits).all() and np.isfinite(fast_exits).all()
    stat = stats.ks_2samp(clock_exits, fast_exits)
    assert stat.pvalue > 0.001


def test_noop_logging_flag():
    xi = SwtConfig((0, -2, 0))
    quiet = simulate_swt(xi, ClockStream(3, 32), 5.0)
    noisy = simulate_swt(xi, ClockStream(3, 32), 5.0, log_noop=True)
    assert quiet.events == []
    assert len(noisy.events) > 0
    assert all(e.kind == "no-op" for e in noisy.events)
    replay(noisy)


def test_ndjson_round_trip(tmp_path):
    traj = simulate_swt(SwtConfig((1, 1, -1, 0, -1)), ClockStream(5, 33), 50.0)
    path = tmp_path / "traj.ndjson"
    traj.to_ndjson(path)
    back = Trajectory.from_ndjson(path)
    assert back.initial == traj.initial
    assert back.final == traj.final
    assert back.first_exit_time == traj.first_exit_time
    assert [e.to_json() for e in back.events] == [e.to_json()
                                                  for e in traj.events]
    replay(back)


def test_clock_count_mismatch_rejected():
    with pytest.raises(ValueError):
        simulate_swt(SwtConfig((1, -1)), ClockStream(3, 1), 1.0)
    with pytest.raises(ValueError):
        simulate_fzr(FzrConfig((2, 0)), ClockStream(2, 1), 1.0)


def test_exit_quantiles_bracket_oracle_values():
    """Single-deep-trap start at K=8: the empirical exit-time distribution
    brackets the exact transience curve (quantile form of Wilson agreement)."""
    from ringtrap.experiments import single_deep_trap_critical, wilson_interval
    cfg = single_deep_trap_critical(8)
    n = 100_000
    horizon = 60.0
    exits = sample_swt_exit_times(cfg, n, 35, horizon)
    for t in (10.0, 20.0, 40.0):
        exact, err = exact_transient_prob(cfg, t)
        lo, hi = wilson_interval(int((exits > t).sum()), n)
        assert lo - err <= exact <= hi + err


def test_reservoir_count_decay_bound():
    """Mean segment occupancy halves geometrically on the 2 K^2 timescale."""
    from ringtrap.dynamics.fast import (sample_segment_counts,
                                        walk_zero_hit_late_fraction)
    K = 8
    p_late = walk_zero_hit_late_fraction(K, 2.0 * K * K, 20_000, 40)
    c = -math.log(max(p_late, 1e-6))
    sigma0 = SegmentSsepConfig((1,) * (K - 1))
    ms = [1, 2, 3]
    ts = [2.0 * m * K * K for m in ms]
    counts = sample_segment_counts(sigma0, ts, 20_000, 41)
    for j, m in enumerate(ms):
        mean = counts[:, j].mean()
        se = counts[:, j].std() / math.sqrt(len(counts))
        bound = math.exp(-c * m) * (K - 1)
        assert mean <= bound + 3 * se


def test_invalid_labelled_state_rejected():
    from ringtrap import ConfigError
    from ringtrap.dynamics import LabelledSwtState
    xi = SwtConfig((1, 1, -1))
    with pytest.raises(ConfigError):
        LabelledSwtState(xi, (0, 0), (1, 1))      # two live labels share a site
    with pytest.raises(ConfigError):
        LabelledSwtState(xi, (0, 2), (1, 1))      # live label on a trap site
    with pytest.raises(ConfigError):
        LabelledSwtState(xi, (0,), (1, 1))        # misaligned flags


def test_engine_state_distribution_matches_oracle():
    """Full final-state law of the clock engine against the exact chain
    (chi-square), which would catch any left/right edge-rule bias that
    exit times alone cannot see."""
    from collections import Counter
    from scipy.stats import chi2 as chi2_dist
    from ringtrap.configs import process_name
    from ringtrap.dynamics import rules
    from ringtrap.oracle import (_seed_row, build_generator,
                                 enumerate_reachable, evolve_distributions)

    cases = [(SwtConfig((1, 0, -1)), simulate_swt, 0.7),
             (SwtConfig((1, 1, -2, 0)), simulate_swt, 1.2),
             (FepConfig((1, 1, 0, 1, 0, 0)), simulate_fep, 1.0)]
    n = 20_000
    for cfg, sim, t in cases:
        space = enumerate_reachable(cfg)
        gen = build_generator(space)
        (dist,), _ = evolve_distributions(gen, _seed_row(space, cfg), [t],
                                          1e-12)
        nc = rules.clock_count(process_name(cfg), len(cfg.sites))
        counts = Counter()
        for i in range(n):
            counts[sim(cfg, ClockStream(nc, 4242, (i,)), t).final.sites] += 1
        chi2, dof = 0.0, 0
        for state, p in zip(space.states, dist):
            expected = p * n
            if expected < 5:
                continue
            chi2 += (counts.get(state, 0) - expected) ** 2 / expected
            dof += 1
        assert chi2_dist.sf(chi2, max(dof - 1, 1)) > 0.001
