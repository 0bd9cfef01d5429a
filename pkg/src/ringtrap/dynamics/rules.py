"""Single-transition rules shared by the simulators, the replay validator and
the exact oracle.

Each function applies the effect of one clock ring to a mutable site list and
reports what happened as ``(kind, src, dst)`` or ``None`` when the ring changes
nothing. Clock conventions:

- ring processes: clock c drives edge (c, c+1 mod K); a ring fires whichever
  single move that edge enables (at most one is ever enabled at a time);
- zero-range: clock 2y is a leftward departure from site y, clock 2y+1 a
  rightward one;
- segment with reservoirs: clock 0 is the left boundary edge (deletes a
  particle at site 0), clock K-1 the right boundary edge, clock i an interior
  exchange between sites i-1 and i.
"""
from __future__ import annotations

JUMP = "jump"
TRAP_FILL = "trap-fill"
SWAP = "swap"
KILL = "reservoir-kill"
NOOP = "no-op"

RESERVOIR = -1


def swt_edge_update(sites: list[int], clock: int):
    k = clock
    j = (clock + 1) % len(sites)
    a, b = sites[k], sites[j]
    if a == 1 and b <= 0:
        src, dst = k, j
    elif b == 1 and a <= 0:
        src, dst = j, k
    else:
        return None
    target = sites[dst]
    sites[src] = 0
    sites[dst] = target + 1
    return (TRAP_FILL if target < 0 else JUMP, src, dst)


def fep_edge_update(sites: list[int], clock: int):
    n = len(sites)
    x = clock
    xp = (x + 1) % n
    # rightward jump of the particle at x needs its left neighbour occupied
    if sites[(x - 1) % n] == 1 and sites[x] == 1 and sites[xp] == 0:
        src, dst = x, xp
    # leftward jump of the particle at x+1 needs its right neighbour occupied
    elif sites[(x + 2) % n] == 1 and sites[xp] == 1 and sites[x] == 0:
        src, dst = xp, x
    else:
        return None
    sites[src], sites[dst] = 0, 1
    return (JUMP, src, dst)


def fzr_clock_update(sites: list[int], clock: int):
    y, direction = divmod(clock, 2)
    if sites[y] < 2:
        return None
    dst = (y + (1 if direction else -1)) % len(sites)
    sites[y] -= 1
    sites[dst] += 1
    return (JUMP, y, dst)


def segment_edge_update(sites: list[int], clock: int):
    n = len(sites)
    if clock == 0:
        if sites[0] == 1:
            sites[0] = 0
            return (KILL, 0, RESERVOIR)
        return None
    if clock == n:
        if sites[n - 1] == 1:
            sites[n - 1] = 0
            return (KILL, n - 1, RESERVOIR)
        return None
    a, b = clock - 1, clock
    if sites[a] != sites[b]:
        sites[a], sites[b] = sites[b], sites[a]
        src, dst = (a, b) if sites[b] == 1 else (b, a)
        return (JUMP, src, dst)
    return None


EDGE_UPDATES = {
    "swt": swt_edge_update,
    "fep": fep_edge_update,
    "fzr": fzr_clock_update,
    "segment": segment_edge_update,
}


def clock_count(process: str, n_sites: int) -> int:
    if process in ("swt", "fep"):
        return n_sites
    if process == "fzr":
        return 2 * n_sites
    if process == "segment":
        return n_sites + 1
    raise ValueError(f"unknown process {process!r}")


def transitions(process: str, state: tuple[int, ...]):
    """All unit-rate transitions out of a state, one entry per enabled clock.

    The same successor may appear more than once (distinct clocks), which is
    exactly the multiplicity the generator matrix needs.
    """
    update = EDGE_UPDATES[process]
    out = []
    for c in range(clock_count(process, len(state))):
        scratch = list(state)
        if update(scratch, c) is not None:
            out.append(tuple(scratch))
    return out
