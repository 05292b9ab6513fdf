"""Composite pulse phases and Maxwell-Bloch propagation in optically thick media."""

from ._core import (
    SU2,
    ConfigError,
    IoError,
    NumericalError,
    __version__,
    area_theorem,
    composed_a,
    contours,
    entry_phases,
    expand_anagram,
    perr_map,
    propagate,
    region_area,
    resonant_propagator,
    rosen_zener_propagator,
    sinh_spaced_deltas,
    solve,
    square_pulse_propagator,
    table_entries,
    verify_table,
    width_at_depth,
)

__all__ = [
    "SU2",
    "ConfigError",
    "IoError",
    "NumericalError",
    "__version__",
    "area_theorem",
    "composed_a",
    "contours",
    "entry_phases",
    "expand_anagram",
    "perr_map",
    "propagate",
    "region_area",
    "resonant_propagator",
    "rosen_zener_propagator",
    "sinh_spaced_deltas",
    "solve",
    "square_pulse_propagator",
    "table_entries",
    "verify_table",
    "width_at_depth",
]
