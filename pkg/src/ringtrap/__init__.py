"""ringtrap: simulation and exact analysis of ring lattice gases with traps.

Three interlocking processes live here: the exclusion process with traps, the
facilitated exclusion process, and the facilitated zero-range process, plus
the open-segment exclusion with empty reservoirs they are compared against.
The package provides clock-stream and aggregate simulation engines, the
trajectory mappings between the processes, executable couplings with per-event
inequality checks, closed-form spectral quantities, an exact finite-state
oracle, and Monte Carlo experiment drivers behind a single CLI.
"""
from .configs import (Config, ConfigError, ConservedQuantities, FepConfig,
                      FzrConfig, Phase, SegmentSsepConfig, SwtConfig, classify,
                      classify_fep, classify_fzr, classify_swt,
                      conserved_quantities, parse_config, serialize_config)

__version__ = "0.1.0"
