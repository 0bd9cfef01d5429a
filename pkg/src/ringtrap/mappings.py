"""Bijections between the facilitated exclusion process and its two partner
processes.

With the K particles of an exclusion state enumerated rightward from a tagged
one, the k-th gap statistic 2 + X_k - X_{k+1} is a valid trap-process entry
(at most 1), and the map is one-to-one given the tag. Particle clusters of
size n+1 become runs of n particles; a run of n empty sites after the k-th
particle becomes a trap of depth n-1 at site k. The analogous empty-site gap
count X_{y+1} - X_y - 1 is the zero-range occupation.

The dynamic map consumes an exclusion event log: ordered particles cannot
cross, so the k-th trajectory is well defined and every exclusion jump is
emitted as exactly one trap-process event with the same timestamp.
"""
from __future__ import annotations

from dataclasses import dataclass

from .configs import ConfigError, FepConfig, FzrConfig, SwtConfig
from .dynamics import rules
from .dynamics.trajectory import Event, Trajectory, is_transient


class MappingError(ConfigError):
    pass


@dataclass(frozen=True)
class TaggedFep:
    """Exclusion state with a tagged particle and the rightward enumeration
    X_1 < X_2 < ... of absolute particle positions starting from it."""

    eta: FepConfig
    x1: int
    positions: tuple[int, ...]

    @property
    def n_particles(self) -> int:
        return len(self.positions)


def tag_fep(eta: FepConfig, x1: int | None = None) -> TaggedFep:
    """Tag a particle (default: the first one at or to the right of site 0)."""
    n = len(eta)
    if eta.particle_count == 0:
        raise MappingError("cannot tag a particle in an empty configuration")
    if x1 is None:
        x1 = next(x for x in range(n) if eta.sites[x] == 1)
    elif not (0 <= x1 < n and eta.sites[x1] == 1):
        raise MappingError(f"tag site {x1} does not hold a particle")
    positions = [x1 + off for off in range(n) if eta.sites[(x1 + off) % n] == 1]
    return TaggedFep(eta, x1, tuple(positions))


def fep_to_swt_static(tagged: TaggedFep | FepConfig,
                      x1: int | None = None) -> tuple[SwtConfig, int]:
    """Map an exclusion state with K >= 1 particles to a trap-process state on
    K sites; returns the state together with the tag needed to invert."""
    if isinstance(tagged, FepConfig):
        tagged = tag_fep(tagged, x1)
    xs = tagged.positions
    K = len(xs)
    n = len(tagged.eta)
    ext = xs + (xs[0] + n,)
    sites = tuple(2 + ext[k] - ext[k + 1] for k in range(K))
    return SwtConfig(sites), tagged.x1


def swt_to_fep_static(xi: SwtConfig, x1: int, n: int) -> FepConfig:
    """Inverse of the static map: consecutive gaps are 2 - xi_k."""
    K = len(xi)
    expected_n = sum(2 - v for v in xi.sites)
    if n != expected_n:
        raise MappingError(
            f"ring size {n} inconsistent with the gap sum {expected_n}")
    if not 0 <= x1 < n:
        raise MappingError(f"tag {x1} outside the ring of size {n}")
    sites = [0] * n
    x = x1
    for k in range(K):
        sites[x % n] = 1
        x += 2 - xi.sites[k]
    return FepConfig(tuple(sites))


def fep_to_fzr(eta: FepConfig, y1: int | None = None) -> tuple[FzrConfig, int]:
    """Map to the zero-range state of particle counts between consecutive
    empty sites, enumerated from a tagged empty site (default: the first empty
    at or to the right of site 0)."""
    n = len(eta)
    if eta.empty_count == 0:
        raise MappingError("zero-range map needs at least one empty site")
    if y1 is None:
        y1 = next(x for x in range(n) if eta.sites[x] == 0)
    elif not (0 <= y1 < n and eta.sites[y1] == 0):
        raise MappingError(f"tag site {y1} is not empty")
    empties = [y1 + off for off in range(n) if eta.sites[(y1 + off) % n] == 0]
    ext = empties + [empties[0] + n]
    counts = tuple(ext[y + 1] - ext[y] - 1 for y in range(len(empties)))
    return FzrConfig(counts), y1


def fzr_to_fep(omega: FzrConfig, y1: int) -> FepConfig:
    """Inverse zero-range map given the tagged empty site's ring position."""
    p = len(omega)
    n = p + omega.particle_count
    if not 0 <= y1 < n:
        raise MappingError(f"tag {y1} outside the ring of size {n}")
    sites = [1] * n
    pos = y1
    for y in range(p):
        sites[pos % n] = 0
        pos += omega.sites[y] + 1
    return FepConfig(tuple(sites))


@dataclass
class DynamicMapTelemetry:
    """Tag bookkeeping across the dynamic map: net displacement of the tagged
    particle and the ring rotation it induces on the static picture."""

    tag_start: int
    tag_end_absolute: int

    @property
    def displacement(self) -> int:
        return self.tag_end_absolute - self.tag_start

    def winding(self, ring_size: int) -> float:
        return self.displacement / ring_size


def fep_to_swt_dynamic(fep_traj: Trajectory, x1: int | None = None,
                       with_telemetry: bool = False):
    """Map an exclusion trajectory, event by event, to the trap-process
    trajectory of its ordered-particle gaps.

    Each exclusion jump of the p-th particle becomes one trap-process event at
    the same timestamp: a rightward jump moves the particle at site p-1 to
    site p (filling a trap if that site is negative), a leftward jump moves
    the particle at site p to p-1. The output replays as a valid trajectory
    started from the static image, and is transient exactly when the source
    is.
    """
    if fep_traj.process != "fep":
        raise MappingError("dynamic map expects an exclusion trajectory")
    eta0: FepConfig = fep_traj.initial
    tagged = tag_fep(eta0, x1)
    xi0, _ = fep_to_swt_static(tagged)
    K = tagged.n_particles
    n = len(eta0)
    xs = list(tagged.positions)
    site_to_particle = {x % n: p for p, x in enumerate(xs)}
    sites = list(xi0.sites)
    particles = xi0.particle_count
    depth = xi0.trap_depth
    transient = particles > 0 and depth > 0
    exit_time = float("inf") if transient else 0.0
    events: list[Event] = []
    for ev in fep_traj.events:
        if ev.kind == rules.NOOP:
            continue
        if ev.kind != rules.JUMP:
            raise MappingError(f"unexpected exclusion event kind {ev.kind!r}")
        p = site_to_particle.pop(ev.src)
        rightward = ev.dst == (ev.src + 1) % n
        xs[p] += 1 if rightward else -1
        site_to_particle[ev.dst] = p
        if rightward:
            src_swt, dst_swt = (p - 1) % K, p
        else:
            src_swt, dst_swt = p, (p - 1) % K
        target = sites[dst_swt]
        if sites[src_swt] != 1 or target > 0:
            raise MappingError("mapped event is not a legal trap-process move")
        sites[src_swt] = 0
        sites[dst_swt] = target + 1
        kind = rules.TRAP_FILL if target < 0 else rules.JUMP
        edge = src_swt if dst_swt == (src_swt + 1) % K else dst_swt
        events.append(Event(ev.time, edge, kind, src_swt, dst_swt))
        if kind == rules.TRAP_FILL:
            particles -= 1
            depth -= 1
            if transient and (particles == 0 or depth == 0):
                transient = False
                exit_time = ev.time
    traj = Trajectory("swt", xi0, events, SwtConfig(tuple(sites)), exit_time,
                      fep_traj.horizon)
    if with_telemetry:
        return traj, DynamicMapTelemetry(tagged.x1, xs[0])
    return traj


def phase_equivalent_along(fep_traj: Trajectory, swt_traj: Trajectory) -> bool:
    """Check transience agreement between source and image at every event
    time (the mapped log has one event per exclusion jump, same timestamps)."""
    eta = list(fep_traj.initial.sites)
    xi = list(swt_traj.initial.sites)
    fep_events = [e for e in fep_traj.events if e.kind != rules.NOOP]
    if len(fep_events) != len(swt_traj.events):
        return False
    if is_transient("fep", eta) != is_transient("swt", xi):
        return False
    for ef, es in zip(fep_events, swt_traj.events):
        if ef.time != es.time:
            return False
        eta[ef.src], eta[ef.dst] = 0, 1
        xi[es.src] = 0
        xi[es.dst] += 1
        if is_transient("fep", eta) != is_transient("swt", xi):
            return False
    return True
