"""Configuration types, phase classification, conserved quantities and codecs.

Three ring processes share this module: the exclusion process with traps
(sites hold 1 = particle, 0 = empty, -d = trap of depth d), the facilitated
exclusion process (bits), and the facilitated zero-range process (counts).
A fourth type describes the open segment used by the reservoir dynamics.

Sites are stored 0-based in order around the ring; serialized forms are plain
ordered lists, so no index convention leaks out.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum


class ConfigError(ValueError):
    """Malformed or out-of-range configuration input."""


class Phase(Enum):
    FROZEN = "frozen"
    ERGODIC = "ergodic"
    FROZEN_AND_ERGODIC = "frozen-and-ergodic"
    TRANSIENT_SUB = "transient-subcritical"
    TRANSIENT_SUPER = "transient-supercritical"
    TRANSIENT_CRITICAL = "transient-critical"

    @property
    def transient(self) -> bool:
        return self in (Phase.TRANSIENT_SUB, Phase.TRANSIENT_SUPER,
                        Phase.TRANSIENT_CRITICAL)


@dataclass(frozen=True)
class SwtConfig:
    """Exclusion-with-traps state on a ring: entries <= 1, negatives are traps."""

    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(v) for v in self.sites)
        if not sites:
            raise ConfigError("empty configuration")
        if any(v > 1 for v in sites):
            raise ConfigError(f"trap-process entries must be <= 1, got {max(sites)}")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def particle_count(self) -> int:
        return sum(1 for v in self.sites if v == 1)

    @property
    def trap_depth(self) -> int:
        return -sum(min(v, 0) for v in self.sites)

    @property
    def excess(self) -> int:
        """Particles minus total trap depth; conserved by the dynamics."""
        return sum(self.sites)


@dataclass(frozen=True)
class FepConfig:
    """Facilitated exclusion state: a bit per ring site."""

    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(v) for v in self.sites)
        if not sites:
            raise ConfigError("empty configuration")
        if any(v not in (0, 1) for v in sites):
            raise ConfigError("facilitated-exclusion entries must be 0 or 1")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def particle_count(self) -> int:
        return sum(self.sites)

    @property
    def empty_count(self) -> int:
        return len(self.sites) - sum(self.sites)


@dataclass(frozen=True)
class FzrConfig:
    """Facilitated zero-range state: a nonnegative count per ring site."""

    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(v) for v in self.sites)
        if not sites:
            raise ConfigError("empty configuration")
        if any(v < 0 for v in sites):
            raise ConfigError("zero-range entries must be >= 0")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def particle_count(self) -> int:
        return sum(self.sites)


@dataclass(frozen=True)
class SegmentSsepConfig:
    """Exclusion state on the open segment of K-1 sites flanked by empty reservoirs.

    The segment scale K counts the edges: K-2 interior ones plus the two
    boundary edges that delete adjacent particles at rate 1.
    """

    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(v) for v in self.sites)
        if not sites:
            raise ConfigError("empty configuration")
        if any(v not in (0, 1) for v in sites):
            raise ConfigError("segment entries must be 0 or 1")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def segment_scale(self) -> int:
        return len(self.sites) + 1

    @property
    def particle_count(self) -> int:
        return sum(self.sites)


Config = SwtConfig | FepConfig | FzrConfig | SegmentSsepConfig


def classify_swt(xi: SwtConfig) -> Phase:
    """Phase of a trap-process state.

    Frozen when no live particle remains, ergodic when no positive-depth trap
    remains, both only for the all-zero state, transient otherwise with the
    sub/super/critical split given by the sign of the excess.
    """
    has_particle = xi.particle_count > 0
    has_trap = xi.trap_depth > 0
    if has_particle and has_trap:
        s = xi.excess
        if s > 0:
            return Phase.TRANSIENT_SUPER
        if s < 0:
            return Phase.TRANSIENT_SUB
        return Phase.TRANSIENT_CRITICAL
    if not has_particle and not has_trap:
        return Phase.FROZEN_AND_ERGODIC
    if not has_particle:
        return Phase.FROZEN
    return Phase.ERGODIC


def classify_fep(eta: FepConfig) -> Phase:
    """Phase of a facilitated-exclusion state.

    Frozen when no two neighbouring particles exist, ergodic when no two
    neighbouring empty sites exist (both checks cyclic). Alternating states on
    even rings are both at once. Critical means exactly half the sites filled.
    """
    s = eta.sites
    n = len(s)
    frozen = all(s[x] * s[(x + 1) % n] == 0 for x in range(n))
    ergodic = all((1 - s[x]) * (1 - s[(x + 1) % n]) == 0 for x in range(n))
    if frozen and ergodic:
        return Phase.FROZEN_AND_ERGODIC
    if frozen:
        return Phase.FROZEN
    if ergodic:
        return Phase.ERGODIC
    k2 = 2 * eta.particle_count
    if k2 > n:
        return Phase.TRANSIENT_SUPER
    if k2 < n:
        return Phase.TRANSIENT_SUB
    return Phase.TRANSIENT_CRITICAL


def classify_fzr(omega: FzrConfig) -> Phase:
    """Phase of a zero-range state: frozen iff all counts <= 1, ergodic iff all >= 1."""
    s = omega.sites
    frozen = all(v <= 1 for v in s)
    ergodic = all(v >= 1 for v in s)
    if frozen and ergodic:
        return Phase.FROZEN_AND_ERGODIC
    if frozen:
        return Phase.FROZEN
    if ergodic:
        return Phase.ERGODIC
    total, p = sum(s), len(s)
    if total > p:
        return Phase.TRANSIENT_SUPER
    if total < p:
        return Phase.TRANSIENT_SUB
    return Phase.TRANSIENT_CRITICAL


def classify(cfg: Config) -> Phase:
    if isinstance(cfg, SwtConfig):
        return classify_swt(cfg)
    if isinstance(cfg, FepConfig):
        return classify_fep(cfg)
    if isinstance(cfg, FzrConfig):
        return classify_fzr(cfg)
    raise TypeError(f"no phase classification for {type(cfg).__name__}")


@dataclass(frozen=True)
class ConservedQuantities:
    particles: int
    trap_depth: int | None = None
    excess: int | None = None


def conserved_quantities(cfg: Config) -> ConservedQuantities:
    """The statistics the dynamics preserves: (particles, depth, excess) for the
    trap process, the particle count for the other two."""
    if isinstance(cfg, SwtConfig):
        return ConservedQuantities(cfg.particle_count, cfg.trap_depth, cfg.excess)
    if isinstance(cfg, (FepConfig, FzrConfig)):
        return ConservedQuantities(cfg.particle_count)
    if isinstance(cfg, SegmentSsepConfig):
        # not conserved: the reservoirs only delete, so this is an upper bound
        return ConservedQuantities(cfg.particle_count)
    raise TypeError(f"unsupported configuration type {type(cfg).__name__}")


# Text codec: "<tag>:<comma separated ints>".  Tags pick the process.
_TAGS = {"S": SwtConfig, "F": FepConfig, "Z": FzrConfig, "B": SegmentSsepConfig}
_TAG_OF = {v: k for k, v in _TAGS.items()}
_PROCESS_NAMES = {SwtConfig: "swt", FepConfig: "fep", FzrConfig: "fzr",
                  SegmentSsepConfig: "segment"}
_NAME_TO_TYPE = {v: k for k, v in _PROCESS_NAMES.items()}


def parse_config(text: str) -> Config:
    """Parse "S:1,1,-1,0,-1" style text into the tagged configuration type."""
    head, sep, body = text.strip().partition(":")
    if not sep or head not in _TAGS:
        raise ConfigError(f"expected a tag prefix among {sorted(_TAGS)}, got {text!r}")
    parts = [p.strip() for p in body.split(",")]
    if parts == [""]:
        raise ConfigError("empty site list")
    try:
        sites = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"malformed integer in {text!r}") from exc
    return _TAGS[head](sites)


def serialize_config(cfg: Config) -> str:
    return _TAG_OF[type(cfg)] + ":" + ",".join(str(v) for v in cfg.sites)


def config_to_json(cfg: Config) -> str:
    return json.dumps({"process": _PROCESS_NAMES[type(cfg)], "sites": list(cfg.sites)})


def config_from_json(text: str) -> Config:
    try:
        payload = json.loads(text)
        name = payload["process"]
        sites = payload["sites"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed configuration JSON: {exc}") from exc
    if name not in _NAME_TO_TYPE:
        raise ConfigError(f"unknown process {name!r}")
    return _NAME_TO_TYPE[name](tuple(sites))


def process_name(cfg: Config) -> str:
    return _PROCESS_NAMES[type(cfg)]
