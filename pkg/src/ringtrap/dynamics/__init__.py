"""Continuous-time engines: shared clock streams, event logs, and samplers."""
from .clocks import ClockStream, ScriptedClockStream, merge_streams
from .engines import (LabelledSwtState, make_labelled, simulate, simulate_fep,
                      simulate_fzr, simulate_labelled_swt,
                      simulate_segment_ssep, simulate_swt)
from .fast import (sample_exit_times, sample_fep_exit_times,
                   sample_fzr_exit_times, sample_segment_absorption_times,
                   sample_segment_counts, sample_swt_exit_times,
                   sample_walk_exit_times, walk_zero_hit_late_fraction)
from .trajectory import (Event, ReplayError, Trajectory, replay,
                         transience_exit_time)

__all__ = [
    "ClockStream", "ScriptedClockStream", "merge_streams",
    "LabelledSwtState", "make_labelled", "simulate", "simulate_fep",
    "simulate_fzr", "simulate_labelled_swt", "simulate_segment_ssep",
    "simulate_swt", "sample_exit_times", "sample_fep_exit_times",
    "sample_fzr_exit_times", "sample_segment_absorption_times",
    "sample_segment_counts", "sample_swt_exit_times", "sample_walk_exit_times",
    "walk_zero_hit_late_fraction", "Event", "ReplayError", "Trajectory",
    "replay", "transience_exit_time",
]
