"""Event logs, replay validation and trajectory export."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from ..configs import (Config, FepConfig, FzrConfig, SegmentSsepConfig,
                       SwtConfig, classify, config_from_json, parse_config,
                       serialize_config)
from . import rules


class ReplayError(AssertionError):
    """An event log disagrees with the dynamics it claims to describe."""


@dataclass(frozen=True)
class Event:
    time: float
    clock: int
    kind: str
    src: int = -1
    dst: int = -1
    labels: tuple[int, ...] = ()

    def to_json(self) -> str:
        payload = {"time": self.time, "clock": self.clock, "kind": self.kind,
                   "src": self.src, "dst": self.dst}
        if self.labels:
            payload["labels"] = list(self.labels)
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Event":
        d = json.loads(text)
        return cls(d["time"], d["clock"], d["kind"], d.get("src", -1),
                   d.get("dst", -1), tuple(d.get("labels", ())))


@dataclass
class Trajectory:
    process: str
    initial: Config
    events: list[Event]
    final: Config
    first_exit_time: float
    horizon: float
    label_state: "object | None" = field(default=None, repr=False)

    @property
    def exited(self) -> bool:
        return math.isfinite(self.first_exit_time)

    def to_ndjson(self, path) -> None:
        """Newline-delimited JSON: a header line, one line per event, a footer."""
        with open(path, "w") as fh:
            header = {"process": self.process,
                      "initial": serialize_config(self.initial),
                      "horizon": self.horizon}
            fh.write(json.dumps(header) + "\n")
            for ev in self.events:
                fh.write(ev.to_json() + "\n")
            footer = {"final": serialize_config(self.final),
                      "first_exit_time":
                          None if math.isinf(self.first_exit_time)
                          else self.first_exit_time}
            fh.write(json.dumps(footer) + "\n")

    @classmethod
    def from_ndjson(cls, path) -> "Trajectory":
        with open(path) as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
        if len(lines) < 2:
            raise ReplayError("trajectory file too short")
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
        events = [Event.from_json(line) for line in lines[1:-1]]
        exit_time = footer["first_exit_time"]
        return cls(header["process"], parse_config(header["initial"]), events,
                   parse_config(footer["final"]),
                   math.inf if exit_time is None else exit_time,
                   header["horizon"])


def is_transient(process: str, sites: list[int]) -> bool:
    if process == "swt":
        return any(v == 1 for v in sites) and any(v < 0 for v in sites)
    if process == "fep":
        n = len(sites)
        frozen = all(sites[x] * sites[(x + 1) % n] == 0 for x in range(n))
        ergodic = all((1 - sites[x]) * (1 - sites[(x + 1) % n]) == 0
                      for x in range(n))
        return not frozen and not ergodic
    if process == "fzr":
        return any(v >= 2 for v in sites) and any(v == 0 for v in sites)
    if process == "segment":
        # absorption target is the empty segment
        return any(v == 1 for v in sites)
    raise ValueError(f"unknown process {process!r}")


def _conserved(process: str, sites: list[int]):
    if process == "swt":
        return sum(sites)
    if process in ("fep", "fzr"):
        return sum(sites)
    return None


def replay(traj: Trajectory, check_exit: bool = True) -> Config:
    """Re-run the event log against the generator rules.

    Raises ReplayError if any event is not the move its clock enables, if a
    conserved quantity drifts, if an absorbing class is exited, or if the
    logged final state or exit time disagree with the replayed ones.
    """
    process = traj.process
    update = rules.EDGE_UPDATES[process]
    sites = list(traj.initial.sites)
    invariant = _conserved(process, sites)
    was_absorbed = not is_transient(process, sites)
    exit_time = 0.0 if was_absorbed else math.inf
    last_t = 0.0
    for i, ev in enumerate(traj.events):
        if ev.time < last_t:
            raise ReplayError(f"event {i} out of time order")
        last_t = ev.time
        outcome = update(sites, ev.clock)
        if ev.kind == rules.NOOP or ev.kind == rules.SWAP:
            # the unlabelled marginal must not change on these rings
            if outcome is not None:
                raise ReplayError(
                    f"event {i} logged as {ev.kind} but clock {ev.clock} "
                    f"moves {outcome}")
        else:
            if outcome is None:
                raise ReplayError(
                    f"event {i} claims {ev.kind} but clock {ev.clock} is idle")
            kind, src, dst = outcome
            if (kind, src, dst) != (ev.kind, ev.src, ev.dst):
                raise ReplayError(
                    f"event {i} logged {(ev.kind, ev.src, ev.dst)} "
                    f"but rules give {(kind, src, dst)}")
        if _conserved(process, sites) != invariant:
            raise ReplayError(f"conserved quantity drifted at event {i}")
        transient = is_transient(process, sites)
        if was_absorbed and transient:
            raise ReplayError(f"absorbing class exited at event {i}")
        if not transient and not was_absorbed:
            was_absorbed = True
            exit_time = ev.time
    if tuple(sites) != traj.final.sites:
        raise ReplayError("replayed final state differs from logged final")
    if check_exit:
        logged = traj.first_exit_time
        if math.isinf(exit_time) != math.isinf(logged) or (
                math.isfinite(logged) and abs(exit_time - logged) > 1e-12):
            raise ReplayError(
                f"replayed exit time {exit_time} != logged {logged}")
    return type(traj.initial)(tuple(sites))


def transience_exit_time(traj: Trajectory) -> float:
    """First event time after which the state is no longer transient.

    0 for a non-transient start, math.inf when the log ends still transient.
    Computed from the log alone, independently of the engine's bookkeeping.
    """
    sites = list(traj.initial.sites)
    if not is_transient(traj.process, sites):
        return 0.0
    update = rules.EDGE_UPDATES[traj.process]
    for ev in traj.events:
        update(sites, ev.clock)
        if not is_transient(traj.process, sites):
            return ev.time
    return math.inf


def classify_final(traj: Trajectory):
    return classify(traj.final)
