"""Clock-stream simulation engines.

These engines consume a ClockStream event by event, so two processes driven by
the same stream see identical rings — the property every coupling and the
trajectory mapping build on. They favour transparency over raw speed; the
aggregate kernels in ``fast.py`` handle bulk estimation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..configs import (ConfigError, FepConfig, FzrConfig, SegmentSsepConfig,
                       SwtConfig)
from . import rules
from .trajectory import Event, Trajectory


def _finish(process, initial, events, sites, exit_time, horizon, cfg_type,
            label_state=None):
    return Trajectory(process, initial, events, cfg_type(tuple(sites)),
                      exit_time, horizon, label_state)


def simulate_swt(xi0: SwtConfig, clocks, horizon: float,
                 log_noop: bool = False, stop_at_exit: bool = False) -> Trajectory:
    """Trap-process trajectory on the ring driven by per-edge clocks.

    A ring of edge (k, k+1) moves a particle across it when the other end is
    empty or a trap; landing on a trap kills the particle and raises the trap
    value by one. The first entry into the frozen or ergodic class is recorded
    as the exit time (0 if the start is already non-transient, inf if the
    horizon is hit while still transient).
    """
    if clocks.n_clocks != len(xi0):
        raise ValueError("clock stream size must match the ring")
    sites = list(xi0.sites)
    particles = xi0.particle_count
    depth = xi0.trap_depth
    transient = particles > 0 and depth > 0
    exit_time = math.inf if transient else 0.0
    events: list[Event] = []
    for t, c in clocks.events(horizon):
        outcome = rules.swt_edge_update(sites, c)
        if outcome is None:
            if log_noop:
                events.append(Event(t, c, rules.NOOP))
            continue
        kind, src, dst = outcome
        events.append(Event(t, c, kind, src, dst))
        if kind == rules.TRAP_FILL:
            particles -= 1
            depth -= 1
            if transient and (particles == 0 or depth == 0):
                transient = False
                exit_time = t
                if stop_at_exit:
                    break
    return _finish("swt", xi0, events, sites, exit_time, horizon, SwtConfig)


def simulate_fep(eta0: FepConfig, clocks, horizon: float,
                 log_noop: bool = False, stop_at_exit: bool = False) -> Trajectory:
    """Facilitated exclusion trajectory: a particle crosses an edge only when
    its other neighbour is occupied and the target empty."""
    if clocks.n_clocks != len(eta0):
        raise ValueError("clock stream size must match the ring")
    sites = list(eta0.sites)
    n = len(sites)
    pair_pp = sum(sites[x] * sites[(x + 1) % n] for x in range(n))
    pair_ee = sum((1 - sites[x]) * (1 - sites[(x + 1) % n]) for x in range(n))
    transient = pair_pp > 0 and pair_ee > 0
    exit_time = math.inf if transient else 0.0
    events: list[Event] = []
    for t, c in clocks.events(horizon):
        outcome = rules.fep_edge_update(sites, c)
        if outcome is None:
            if log_noop:
                events.append(Event(t, c, rules.NOOP))
            continue
        kind, src, dst = outcome
        events.append(Event(t, c, kind, src, dst))
        pair_pp = sum(sites[x] * sites[(x + 1) % n] for x in range(n))
        pair_ee = sum((1 - sites[x]) * (1 - sites[(x + 1) % n]) for x in range(n))
        if transient and (pair_pp == 0 or pair_ee == 0):
            transient = False
            exit_time = t
            if stop_at_exit:
                break
    return _finish("fep", eta0, events, sites, exit_time, horizon, FepConfig)


def simulate_fzr(omega0: FzrConfig, clocks, horizon: float,
                 log_noop: bool = False, stop_at_exit: bool = False) -> Trajectory:
    """Zero-range trajectory: a site holding at least two particles emits one
    in the ringing direction (two directed unit-rate clocks per site)."""
    if clocks.n_clocks != 2 * len(omega0):
        raise ValueError("zero-range dynamics needs two clocks per site")
    sites = list(omega0.sites)
    active = sum(1 for v in sites if v >= 2)
    zeros = sum(1 for v in sites if v == 0)
    transient = active > 0 and zeros > 0
    exit_time = math.inf if transient else 0.0
    events: list[Event] = []
    for t, c in clocks.events(horizon):
        outcome = rules.fzr_clock_update(sites, c)
        if outcome is None:
            if log_noop:
                events.append(Event(t, c, rules.NOOP))
            continue
        kind, src, dst = outcome
        events.append(Event(t, c, kind, src, dst))
        active = sum(1 for v in sites if v >= 2)
        zeros = sum(1 for v in sites if v == 0)
        if transient and (active == 0 or zeros == 0):
            transient = False
            exit_time = t
            if stop_at_exit:
                break
    return _finish("fzr", omega0, events, sites, exit_time, horizon, FzrConfig)


def simulate_segment_ssep(sigma0: SegmentSsepConfig, clocks, horizon: float,
                          log_noop: bool = False,
                          stop_at_exit: bool = False) -> Trajectory:
    """Exclusion on the open segment with empty reservoirs: boundary clocks
    delete the adjacent particle, so the count is non-increasing. The exit
    time records absorption at the empty segment."""
    if clocks.n_clocks != len(sigma0) + 1:
        raise ValueError("segment needs one clock per edge, boundaries included")
    sites = list(sigma0.sites)
    count = sum(sites)
    exit_time = math.inf if count > 0 else 0.0
    events: list[Event] = []
    for t, c in clocks.events(horizon):
        outcome = rules.segment_edge_update(sites, c)
        if outcome is None:
            if log_noop:
                events.append(Event(t, c, rules.NOOP))
            continue
        kind, src, dst = outcome
        events.append(Event(t, c, kind, src, dst))
        if kind == rules.KILL:
            count -= 1
            if count == 0 and math.isinf(exit_time):
                exit_time = t
                if stop_at_exit:
                    break
    return _finish("segment", sigma0, events, sites, exit_time, horizon,
                   SegmentSsepConfig)


@dataclass(frozen=True)
class LabelledSwtState:
    """Trap-process state with labelled particles.

    ``positions[j]`` is the site of label j and ``alive[j]`` its flag; dead
    labels stay frozen at the trap that swallowed them. Alive labels occupy
    exactly the particle sites of ``xi``, one each.
    """

    xi: SwtConfig
    positions: tuple[int, ...]
    alive: tuple[int, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.alive):
            raise ConfigError("positions and alive flags must align")
        if any(a not in (0, 1) for a in self.alive):
            raise ConfigError("alive flags must be 0 or 1")
        k = len(self.xi)
        if any(not 0 <= p < k for p in self.positions):
            raise ConfigError("label position off the ring")
        alive_sites = [p for p, a in zip(self.positions, self.alive) if a]
        if len(set(alive_sites)) != len(alive_sites):
            raise ConfigError("two live labels share a site")
        if set(alive_sites) != {i for i, v in enumerate(self.xi.sites) if v == 1}:
            raise ConfigError("live labels must sit exactly on particle sites")

    @property
    def n_labels(self) -> int:
        return len(self.positions)


def make_labelled(xi: SwtConfig) -> LabelledSwtState:
    """Label the particles of a configuration left to right."""
    pos = tuple(i for i, v in enumerate(xi.sites) if v == 1)
    return LabelledSwtState(xi, pos, (1,) * len(pos))


class LabelledRing:
    """Mutable stepper for the labelled trap-process on the ring.

    Rules per ring of edge (k, k+1): two non-particle sites do nothing; a
    particle facing a trap moves onto it, keeps its label, and dies there; a
    particle facing an empty site moves; two particles exchange labels. The
    unlabelled projection of every step is exactly the plain dynamics.
    """

    def __init__(self, state: LabelledSwtState):
        self.K = len(state.xi)
        self.sites = list(state.xi.sites)
        self.pos = list(state.positions)
        self.alive = list(state.alive)
        self.site_label = [-1] * self.K
        for j, (p, a) in enumerate(zip(self.pos, self.alive)):
            if a:
                self.site_label[p] = j
        self.particles = state.xi.particle_count
        self.depth = state.xi.trap_depth

    @property
    def transient(self) -> bool:
        return self.particles > 0 and self.depth > 0

    def state(self) -> LabelledSwtState:
        return LabelledSwtState(SwtConfig(tuple(self.sites)),
                                tuple(self.pos), tuple(self.alive))

    def step(self, clock: int):
        """Apply one ring; returns (kind, src, dst, labels) or None."""
        k, j2 = clock, (clock + 1) % self.K
        a, b = self.sites[k], self.sites[j2]
        if a <= 0 and b <= 0:
            return None
        if a == 1 and b == 1:
            la, lb = self.site_label[k], self.site_label[j2]
            self.pos[la], self.pos[lb] = j2, k
            self.site_label[k], self.site_label[j2] = lb, la
            return (rules.SWAP, k, j2, (la, lb))
        src, dst = (k, j2) if a == 1 else (j2, k)
        lab = self.site_label[src]
        target = self.sites[dst]
        self.sites[src] = 0
        self.sites[dst] = target + 1
        self.site_label[src] = -1
        self.pos[lab] = dst
        if target < 0:
            self.alive[lab] = 0
            self.particles -= 1
            self.depth -= 1
            return (rules.TRAP_FILL, src, dst, (lab,))
        self.site_label[dst] = lab
        return (rules.JUMP, src, dst, (lab,))


def simulate_labelled_swt(state0: LabelledSwtState, clocks, horizon: float,
                          log_noop: bool = False) -> Trajectory:
    """Labelled trap-process: adjacent particles swap at rate 1 so each label
    walks like a rate-1 random walk until a trap kills it.

    Forgetting the labels reproduces simulate_swt event for event under the
    same clock stream (particle swaps are unlabelled no-ops).
    """
    xi0 = state0.xi
    if clocks.n_clocks != len(xi0):
        raise ValueError("clock stream size must match the ring")
    ring = LabelledRing(state0)
    events: list[Event] = []
    transient = ring.transient
    exit_time = math.inf if transient else 0.0
    for t, c in clocks.events(horizon):
        outcome = ring.step(c)
        if outcome is None:
            if log_noop:
                events.append(Event(t, c, rules.NOOP))
            continue
        kind, src, dst, labels = outcome
        events.append(Event(t, c, kind, src, dst, labels))
        if transient and not ring.transient:
            transient = False
            exit_time = t
    final = ring.state()
    return Trajectory("swt", xi0, events, final.xi, exit_time, horizon,
                      label_state=final)


SIMULATORS = {
    "swt": simulate_swt,
    "fep": simulate_fep,
    "fzr": simulate_fzr,
    "segment": simulate_segment_ssep,
}


def simulate(cfg, clocks, horizon: float, **kw) -> Trajectory:
    if isinstance(cfg, SwtConfig):
        return simulate_swt(cfg, clocks, horizon, **kw)
    if isinstance(cfg, FepConfig):
        return simulate_fep(cfg, clocks, horizon, **kw)
    if isinstance(cfg, FzrConfig):
        return simulate_fzr(cfg, clocks, horizon, **kw)
    if isinstance(cfg, SegmentSsepConfig):
        return simulate_segment_ssep(cfg, clocks, horizon, **kw)
    raise TypeError(f"no simulator for {type(cfg).__name__}")
