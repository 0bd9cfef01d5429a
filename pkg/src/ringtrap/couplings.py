"""Executable couplings with per-event assertion hooks.

Four joint constructions: the order-preserving basic coupling of two trap
processes on shared edge clocks; the labelled trap process against the
labelled exclusion process obtained by deleting its traps; the three unrolled
segment processes (central / right / left) read off the ring through shared
clocks modulo the ring size, with reservoir kills and the seam-suppression
rules; and the domination layer that couples the unrolled live-particle
pictures with genuine reservoir exclusions via clock switching.

Every advertised inequality is checked at event times, where the state is
piecewise constant, so "for all s <= t" statements are verified exactly along
the trajectory. Violations are collected in a report; in assert mode they
raise immediately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .configs import SwtConfig
from .dynamics import rules
from .dynamics.clocks import merge_streams
from .dynamics.engines import LabelledRing, LabelledSwtState, make_labelled
from .dynamics.trajectory import Event, Trajectory


class CouplingViolation(AssertionError):
    pass


@dataclass
class CouplingReport:
    checks: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, assert_mode: bool, name: str, t: float, detail: str = ""):
        msg = f"{name} violated at t={t:.6g}" + (f": {detail}" if detail else "")
        self.violations.append(msg)
        if assert_mode:
            raise CouplingViolation(msg)

    def passed(self, n: int = 1):
        self.checks += n


@dataclass
class BasicCouplingResult:
    low: Trajectory
    high: Trajectory
    report: CouplingReport


def run_basic_coupling(xi_low: SwtConfig, xi_high: SwtConfig, clocks,
                       horizon: float,
                       assert_mode: bool = False) -> BasicCouplingResult:
    """Both copies attempt every enabled jump at every shared ring; the
    componentwise order of the initial pair is asserted at each event."""
    if len(xi_low) != len(xi_high):
        raise ValueError("coupled configurations must share the ring size")
    if any(a > b for a, b in zip(xi_low.sites, xi_high.sites)):
        raise ValueError("initial pair must be ordered low <= high")
    if clocks.n_clocks != len(xi_low):
        raise ValueError("clock stream size must match the ring")
    report = CouplingReport()
    sides = []
    for cfg in (xi_low, xi_high):
        sides.append({
            "sites": list(cfg.sites),
            "particles": cfg.particle_count,
            "depth": cfg.trap_depth,
            "events": [],
            "exit": math.inf if (cfg.particle_count > 0 and cfg.trap_depth > 0)
                    else 0.0,
        })
    for t, c in clocks.events(horizon):
        changed = False
        for side in sides:
            outcome = rules.swt_edge_update(side["sites"], c)
            if outcome is None:
                continue
            changed = True
            kind, src, dst = outcome
            side["events"].append(Event(t, c, kind, src, dst))
            if kind == rules.TRAP_FILL:
                side["particles"] -= 1
                side["depth"] -= 1
                if math.isinf(side["exit"]) and (side["particles"] == 0
                                                 or side["depth"] == 0):
                    side["exit"] = t
        if changed:
            if any(a > b for a, b in zip(sides[0]["sites"], sides[1]["sites"])):
                report.record(assert_mode, "order-preservation", t,
                              f"{sides[0]['sites']} !<= {sides[1]['sites']}")
            else:
                report.passed()
    trajs = [Trajectory("swt", cfg, side["events"],
                        SwtConfig(tuple(side["sites"])), side["exit"], horizon)
             for cfg, side in zip((xi_low, xi_high), sides)]
    return BasicCouplingResult(trajs[0], trajs[1], report)


@dataclass
class FzrCouplingResult:
    low: Trajectory
    high: Trajectory
    report: CouplingReport


def run_basic_coupling_fzr(omega_low, omega_high, clocks, horizon: float,
                           assert_mode: bool = False) -> FzrCouplingResult:
    """Basic coupling of two zero-range states through shared directed clocks;
    the non-decreasing rate function makes the componentwise order invariant.
    """
    from .configs import FzrConfig
    from .dynamics.trajectory import is_transient

    if len(omega_low) != len(omega_high):
        raise ValueError("coupled configurations must share the ring size")
    if any(a > b for a, b in zip(omega_low.sites, omega_high.sites)):
        raise ValueError("initial pair must be ordered low <= high")
    if clocks.n_clocks != 2 * len(omega_low):
        raise ValueError("zero-range dynamics needs two clocks per site")
    report = CouplingReport()
    sides = []
    for cfg in (omega_low, omega_high):
        sides.append({"sites": list(cfg.sites), "events": [],
                      "exit": math.inf if is_transient("fzr", list(cfg.sites))
                              else 0.0})
    for t, c in clocks.events(horizon):
        changed = False
        for side in sides:
            outcome = rules.fzr_clock_update(side["sites"], c)
            if outcome is None:
                continue
            changed = True
            kind, src, dst = outcome
            side["events"].append(Event(t, c, kind, src, dst))
            if math.isinf(side["exit"]) and not is_transient("fzr",
                                                             side["sites"]):
                side["exit"] = t
        if changed:
            if any(a > b for a, b in zip(sides[0]["sites"], sides[1]["sites"])):
                report.record(assert_mode, "fzr-order-preservation", t)
            else:
                report.passed()
    trajs = [Trajectory("fzr", cfg, side["events"],
                        FzrConfig(tuple(side["sites"])), side["exit"], horizon)
             for cfg, side in zip((omega_low, omega_high), sides)]
    return FzrCouplingResult(trajs[0], trajs[1], report)


@dataclass
class LabelledVsSsepResult:
    swt_final: LabelledSwtState
    ssep_positions: tuple[int, ...]
    death_positions: dict[int, int]
    explored: list[set[int]]
    report: CouplingReport
    swt_exit_time: float


def run_labelled_vs_ssep(xi0: SwtConfig, clocks, horizon: float,
                         assert_mode: bool = False) -> LabelledVsSsepResult:
    """Couple the labelled trap process with the labelled exclusion process
    started from the same particles but no traps, on the same clocks.

    Checked at every event: each label's trapped position equals its
    exclusion position stopped at its death time; while the trap process is
    transient some label has not explored the whole ring, and no live label
    has ever visited a currently negative site.
    """
    if xi0.particle_count == 0:
        raise ValueError("need at least one particle")
    if clocks.n_clocks != len(xi0):
        raise ValueError("clock stream size must match the ring")
    K = len(xi0)
    state0 = make_labelled(xi0)
    ring = LabelledRing(state0)
    sigma_state = make_labelled(SwtConfig(tuple(max(v, 0) for v in xi0.sites)))
    ssep = LabelledRing(sigma_state)
    n = state0.n_labels
    explored = [{p} for p in state0.positions]
    death_pos: dict[int, int] = {}
    report = CouplingReport()
    full = set(range(K))
    exit_time = math.inf if ring.transient else 0.0
    for t, c in clocks.events(horizon):
        out_swt = ring.step(c)
        out_ssep = ssep.step(c)
        if out_swt is None and out_ssep is None:
            continue
        if out_ssep is not None:
            for lab in out_ssep[3]:
                explored[lab].add(ssep.pos[lab])
        if out_swt is not None and out_swt[0] == rules.TRAP_FILL:
            lab = out_swt[3][0]
            death_pos[lab] = ssep.pos[lab]
        if math.isinf(exit_time) and not ring.transient:
            exit_time = t
        # identity: trapped position = exclusion position stopped at death
        for j in range(n):
            want = ssep.pos[j] if ring.alive[j] else death_pos[j]
            if ring.pos[j] != want:
                report.record(assert_mode, "stopped-position-identity", t,
                              f"label {j}: {ring.pos[j]} != {want}")
                break
        else:
            report.passed()
        if ring.transient:
            if all(explored[j] == full for j in range(n)):
                report.record(assert_mode, "unexplored-site-exists", t)
            else:
                report.passed()
            traps_now = {k for k, v in enumerate(ring.sites) if v < 0}
            bad = [j for j in range(n)
                   if ring.alive[j] and explored[j] & traps_now]
            if bad:
                report.record(assert_mode, "live-label-avoids-traps", t,
                              f"labels {bad}")
            else:
                report.passed()
    return LabelledVsSsepResult(ring.state(), tuple(ssep.pos), death_pos,
                                explored, report, exit_time)


class _UnrolledProcess:
    """One of the three segment pictures read off the labelled ring.

    Tracks per-label positions in [0, K+a) and alive flags for its member
    labels; the occupancy array holds the live label at a site (-1 if none).
    """

    def __init__(self, variant: str, K: int, a: int, members, init_pos):
        self.variant = variant
        self.K = K
        self.a = a
        self.length = K + a
        self.members = set(members)
        self.pos: dict[int, int] = dict(init_pos)
        self.alive = {p: 1 for p in self.members}
        self.occ = [-1] * self.length
        for p in self.members:
            self.occ[self.pos[p]] = p

    def live_count(self) -> int:
        return sum(self.alive.values())

    def occupancy(self) -> list[int]:
        return [1 if lab >= 0 and self.alive[lab] else 0 for lab in self.occ]

    def edge_sum(self, u: int) -> int:
        total = 0
        if 0 <= u < self.length and self.occ[u] >= 0:
            total += 1
        if 0 <= u + 1 < self.length and self.occ[u + 1] >= 0:
            total += 1
        return total

    def _kill(self, lab: int):
        self.alive[lab] = 0
        self.occ[self.pos[lab]] = -1

    def apply_edge(self, u: int):
        """Rules for one segment edge: reservoir kill at the boundary edges,
        move or label swap inside."""
        if u == -1:
            if self.occ[0] >= 0:
                self._kill(self.occ[0])
            return
        if u == self.length - 1:
            if self.occ[u] >= 0:
                self._kill(self.occ[u])
            return
        la, lb = self.occ[u], self.occ[u + 1]
        if la >= 0 and lb >= 0:
            self.pos[la], self.pos[lb] = u + 1, u
            self.occ[u], self.occ[u + 1] = lb, la
        elif la >= 0:
            self.pos[la] = u + 1
            self.occ[u], self.occ[u + 1] = -1, la
        elif lb >= 0:
            self.pos[lb] = u
            self.occ[u], self.occ[u + 1] = lb, -1

    def kill_ring_death(self, lab: int):
        if lab in self.members and self.alive[lab]:
            self._kill(lab)

    def suppress(self):
        """Seam suppression: kill the left member of any live pair at distance
        K-1 for the right picture, the right member for the left picture."""
        if self.variant == "central":
            return
        victims = []
        for p in self.members:
            if not self.alive[p]:
                continue
            x = self.pos[p]
            if self.variant == "right":
                q_at = x + self.K - 1
                if q_at < self.length and self.occ[q_at] >= 0:
                    victims.append(p)
            else:
                q_at = x - (self.K - 1)
                if q_at >= 0 and self.occ[q_at] >= 0:
                    victims.append(p)
        for p in victims:
            self._kill(p)


def _unrolled_edges(c: int, K: int, a: int) -> list[int]:
    """Segment edges driven by ring clock c: edge indices u in [-1, K+a-1]
    with u = c (mod K); u = -1 is the left reservoir edge."""
    edges = []
    if c == K - 1:
        edges.append(-1)
    edges.append(c)
    if c <= a - 1:
        edges.append(c + K)
    return edges


@dataclass
class UnrolledResult:
    final_state: LabelledSwtState
    report: CouplingReport
    window_trap_end: float
    live_history: list[tuple[float, int, int, int, int]]


class UnrolledCoupling:
    """Joint evolution of the labelled ring and its three unrolled pictures.

    The segment covers sites [0, K+a) with the watched window A = [0, a);
    ring clock c drives segment edges congruent to c mod K. The central
    picture starts from the labels outside A at their ring sites, the right
    one from the labels inside A at the same sites, the left one from those
    labels shifted by K. On the event that A still holds a trap, the survival
    and distance checks are evaluated after every ring.
    """

    def __init__(self, state0: LabelledSwtState, a: int,
                 assert_mode: bool = False):
        K = len(state0.xi)
        if not 1 <= a < K:
            raise ValueError("window length must satisfy 1 <= a < K")
        self.K, self.a = K, a
        self.assert_mode = assert_mode
        self.ring = LabelledRing(state0)
        self.init_pos = list(state0.positions)
        inside = [p for p in range(state0.n_labels)
                  if state0.alive[p] and state0.positions[p] < a]
        outside = [p for p in range(state0.n_labels)
                   if state0.alive[p] and state0.positions[p] >= a]
        self.central = _UnrolledProcess(
            "central", K, a, outside, {p: state0.positions[p] for p in outside})
        self.right = _UnrolledProcess(
            "right", K, a, inside, {p: state0.positions[p] for p in inside})
        self.left = _UnrolledProcess(
            "left", K, a, inside, {p: state0.positions[p] + K for p in inside})
        self.processes = (self.central, self.right, self.left)
        self.report = CouplingReport()
        # first time the window loses its last trap; the watched event
        # "a trap remains in A at time t" is exactly {t < window_trap_end}
        self.window_trap_end = 0.0 if not self.window_has_trap() else math.inf

    def window_has_trap(self) -> bool:
        return any(self.ring.sites[k] < 0 for k in range(self.a))

    def window_traps(self) -> list[int]:
        return [k for k in range(self.a) if self.ring.sites[k] < 0]

    def ring_step(self, t: float, c: int):
        """One shared ring: update the ring and all coupled pictures, then run
        the assertion block if the window still holds a trap."""
        outcome = self.ring.step(c)
        death = None
        if outcome is not None and outcome[0] == rules.TRAP_FILL:
            death = outcome[3][0]
        for proc in self.processes:
            for u in _unrolled_edges(c, self.K, self.a):
                proc.apply_edge(u)
            if death is not None:
                proc.kill_ring_death(death)
            proc.suppress()
        if self.window_has_trap():
            self._assert_block(t)
        elif math.isinf(self.window_trap_end):
            self.window_trap_end = t
        return outcome

    def _assert_block(self, t: float):
        rep, mode = self.report, self.assert_mode
        ring = self.ring
        # dominated flags, unconditionally
        for proc in self.processes:
            bad = [p for p in proc.members
                   if proc.alive[p] > ring.alive[p]]
            if bad:
                rep.record(mode, f"{proc.variant}-flag-domination", t,
                           f"labels {bad}")
            else:
                rep.passed()
        # central survival equivalence
        bad = [p for p in self.central.members
               if ring.alive[p] != self.central.alive[p]]
        if bad:
            rep.record(mode, "central-survival-equivalence", t, f"labels {bad}")
        else:
            rep.passed()
        # live-pair distance bound in the central picture
        live = [self.central.pos[p] for p in self.central.members
                if self.central.alive[p]]
        if live and max(live) - min(live) >= self.K - 1:
            rep.record(mode, "central-distance-bound", t,
                       f"spread {max(live) - min(live)}")
        else:
            rep.passed()
        traps = self.window_traps()
        k_minus, k_plus = traps[0], traps[-1]
        # right picture keeps labels that started right of the leftmost trap
        bad = [p for p in self.right.members
               if k_minus < self.init_pos[p] and ring.alive[p]
               and not self.right.alive[p]]
        if bad:
            rep.record(mode, "right-survival", t, f"labels {bad}")
        else:
            rep.passed()
        # left picture keeps labels that started left of the rightmost trap
        bad = [p for p in self.left.members
               if self.init_pos[p] < k_plus and ring.alive[p]
               and not self.left.alive[p]]
        if bad:
            rep.record(mode, "left-survival", t, f"labels {bad}")
        else:
            rep.passed()
        # three-way survival inequality
        bad = []
        for p in range(len(ring.alive)):
            cover = (self.central.alive.get(p, 0) + self.right.alive.get(p, 0)
                     + self.left.alive.get(p, 0))
            if ring.alive[p] > cover:
                bad.append(p)
        if bad:
            rep.record(mode, "survival-cover", t, f"labels {bad}")
        else:
            rep.passed()


def run_unrolled(state0: LabelledSwtState | SwtConfig, a: int, clocks,
                 horizon: float, assert_mode: bool = False) -> UnrolledResult:
    if isinstance(state0, SwtConfig):
        state0 = make_labelled(state0)
    coupling = UnrolledCoupling(state0, a, assert_mode)
    if clocks.n_clocks != coupling.K:
        raise ValueError("clock stream size must match the ring")
    history = []
    for t, c in clocks.events(horizon):
        coupling.ring_step(t, c)
        history.append((t, coupling.ring.particles,
                        coupling.central.live_count(),
                        coupling.right.live_count(),
                        coupling.left.live_count()))
    return UnrolledResult(coupling.ring.state(), coupling.report,
                          coupling.window_trap_end, history)


@dataclass
class DominationResult:
    report: CouplingReport
    window_trap_end: float
    final_tilde_counts: tuple[int, int, int]


def run_reservoir_domination(state0: LabelledSwtState | SwtConfig, a: int,
                             clocks_ring, clocks_aux, horizon: float,
                             assert_mode: bool = False) -> DominationResult:
    """Couple the unrolled live-particle pictures with three true reservoir
    exclusions via clock switching.

    A segment edge of a tilde copy follows the shared ring clock exactly when
    the window still holds a trap and the corresponding unrolled picture has a
    live particle at that edge (evaluated on the pre-ring state), and follows
    the auxiliary clock otherwise. While the window holds a trap each tilde
    copy dominates its unrolled picture sitewise.
    """
    if isinstance(state0, SwtConfig):
        state0 = make_labelled(state0)
    coupling = UnrolledCoupling(state0, a, assert_mode)
    K, a_ = coupling.K, coupling.a
    if clocks_ring.n_clocks != K:
        raise ValueError("ring stream must have one clock per ring edge")
    if clocks_aux.n_clocks != K + a_ + 1:
        raise ValueError("auxiliary stream needs one clock per segment edge")
    length = K + a_
    tilde = [list(proc.occupancy()) for proc in coupling.processes]

    def tilde_edge(sigma: list[int], u: int):
        if u == -1:
            sigma[0] = 0
        elif u == length - 1:
            sigma[length - 1] = 0
        elif sigma[u] != sigma[u + 1]:
            sigma[u], sigma[u + 1] = sigma[u + 1], sigma[u]

    report = coupling.report
    for t, which, c in merge_streams([clocks_ring, clocks_aux], horizon):
        if which == 0:
            window_pre = coupling.window_has_trap()
            fire = []
            for pi, proc in enumerate(coupling.processes):
                for u in _unrolled_edges(c, K, a_):
                    if window_pre and proc.edge_sum(u) >= 1:
                        fire.append((pi, u))
            coupling.ring_step(t, c)
            for pi, u in fire:
                tilde_edge(tilde[pi], u)
        else:
            u = c - 1
            window_pre = coupling.window_has_trap()
            for pi, proc in enumerate(coupling.processes):
                if not (window_pre and proc.edge_sum(u) >= 1):
                    tilde_edge(tilde[pi], u)
        if coupling.window_has_trap():
            for pi, proc in enumerate(coupling.processes):
                occ = proc.occupancy()
                if any(o > s for o, s in zip(occ, tilde[pi])):
                    report.record(assert_mode,
                                  f"{proc.variant}-reservoir-domination", t)
                else:
                    report.passed()
    return DominationResult(report, coupling.window_trap_end,
                            tuple(sum(sig) for sig in tilde))
