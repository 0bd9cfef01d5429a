import itertools

import numpy as np
import pytest

from ringtrap import (ConfigError, FepConfig, FzrConfig, Phase,
                      SegmentSsepConfig, SwtConfig, classify_fep, classify_fzr,
                      classify_swt, conserved_quantities, parse_config,
                      serialize_config)
from ringtrap.configs import config_from_json, config_to_json


def test_classify_swt_examples():
    assert classify_swt(SwtConfig((1, 1, -1, 0, -1))) is Phase.TRANSIENT_CRITICAL
    assert classify_swt(SwtConfig((0, 0, 0))) is Phase.FROZEN_AND_ERGODIC
    assert classify_swt(SwtConfig((-3, 1, 1, 1, 0, -1, 0))) is Phase.TRANSIENT_SUB
    assert classify_swt(SwtConfig((0, -2, 0))) is Phase.FROZEN
    assert classify_swt(SwtConfig((1, 0, 1))) is Phase.ERGODIC
    # a single particle on the one-site ring is ergodic
    assert classify_swt(SwtConfig((1,))) is Phase.ERGODIC
    assert classify_swt(SwtConfig((-1,))) is Phase.FROZEN


def test_classify_fep_examples():
    assert classify_fep(FepConfig((1, 0, 1, 0))) is Phase.FROZEN_AND_ERGODIC
    assert classify_fep(FepConfig((1, 1, 1, 0))) is Phase.ERGODIC
    assert classify_fep(FepConfig((1, 1, 0, 0, 1, 0))) is Phase.TRANSIENT_CRITICAL
    assert classify_fep(FepConfig((1, 0, 1, 0, 0))) is Phase.FROZEN
    assert classify_fep(FepConfig((1, 1, 0, 0))) is Phase.TRANSIENT_CRITICAL
    assert classify_fep(FepConfig((1, 1, 1, 0, 0))) is Phase.TRANSIENT_SUPER


def test_classify_fzr_examples():
    assert classify_fzr(FzrConfig((1, 1, 1))) is Phase.FROZEN_AND_ERGODIC
    assert classify_fzr(FzrConfig((2, 0))) is Phase.TRANSIENT_CRITICAL
    assert classify_fzr(FzrConfig((3, 1, 1))) is Phase.ERGODIC
    assert classify_fzr(FzrConfig((1, 0, 1))) is Phase.FROZEN


def test_transient_iff_particle_and_trap():
    rng = np.random.default_rng(0)
    for _ in range(500):
        K = int(rng.integers(1, 9))
        xi = SwtConfig(tuple(int(v) for v in rng.integers(-3, 2, K)))
        transient = xi.particle_count > 0 and xi.trap_depth > 0
        assert classify_swt(xi).transient == transient


def test_fep_frozen_and_ergodic_only_alternating():
    """Exhaustive check on rings up to 12 sites: both classes meet only at the
    alternating configurations (even N) and the trivial edge sizes."""
    for n in range(1, 13):
        for bits in itertools.product((0, 1), repeat=n):
            eta = FepConfig(bits)
            if classify_fep(eta) is Phase.FROZEN_AND_ERGODIC:
                if n == 1:
                    continue  # single-site edge case
                assert n % 2 == 0
                assert all(bits[i] != bits[(i + 1) % n] for i in range(n))


def test_excess_identity():
    rng = np.random.default_rng(1)
    for _ in range(300):
        K = int(rng.integers(1, 10))
        xi = SwtConfig(tuple(int(v) for v in rng.integers(-4, 2, K)))
        assert xi.excess == xi.particle_count - xi.trap_depth
        cq = conserved_quantities(xi)
        assert (cq.particles, cq.trap_depth, cq.excess) == (
            xi.particle_count, xi.trap_depth, xi.excess)


def test_conserved_quantities_examples():
    cq = conserved_quantities(SwtConfig((1, 1, -1, 0, -1)))
    assert (cq.particles, cq.trap_depth, cq.excess) == (2, 2, 0)
    assert conserved_quantities(FepConfig((1, 1, 0, 0, 1, 0))).particles == 3
    assert conserved_quantities(FzrConfig((2, 0, 1))).particles == 3


def test_codec_examples():
    assert parse_config("S:1,1,-1,0,-1") == SwtConfig((1, 1, -1, 0, -1))
    assert parse_config("F:1,0,1") == FepConfig((1, 0, 1))
    assert parse_config("Z:2,0,1") == FzrConfig((2, 0, 1))
    assert parse_config("B:1,0") == SegmentSsepConfig((1, 0))
    with pytest.raises(ConfigError):
        parse_config("S:1,2,0")
    with pytest.raises(ConfigError):
        parse_config("F:1,-1")
    with pytest.raises(ConfigError):
        parse_config("S:")
    with pytest.raises(ConfigError):
        parse_config("S:1,a,0")
    with pytest.raises(ConfigError):
        parse_config("Q:1,0")


def _random_config(rng):
    K = int(rng.integers(1, 12))
    kind = rng.integers(0, 4)
    if kind == 0:
        return SwtConfig(tuple(int(v) for v in rng.integers(-5, 2, K)))
    if kind == 1:
        return FepConfig(tuple(int(v) for v in rng.integers(0, 2, K)))
    if kind == 2:
        return FzrConfig(tuple(int(v) for v in rng.integers(0, 6, K)))
    return SegmentSsepConfig(tuple(int(v) for v in rng.integers(0, 2, K)))


def test_codec_round_trip_bulk():
    rng = np.random.default_rng(42)
    for _ in range(10_000):
        cfg = _random_config(rng)
        assert parse_config(serialize_config(cfg)) == cfg


def test_json_round_trip():
    rng = np.random.default_rng(43)
    for _ in range(300):
        cfg = _random_config(rng)
        assert config_from_json(config_to_json(cfg)) == cfg
    with pytest.raises(ConfigError):
        config_from_json("{not json")


def test_invalid_configs_rejected():
    with pytest.raises(ConfigError):
        SwtConfig((2, 0))
    with pytest.raises(ConfigError):
        FepConfig((0, 2))
    with pytest.raises(ConfigError):
        FzrConfig((-1,))
    with pytest.raises(ConfigError):
        SwtConfig(())
