"""Desk-scale LEO constellation emulation toolkit."""

from ._nsb import (  # noqa: F401
    CandidatePair,
    GroundNode,
    HandoverConfig,
    WalkerParams,
    __version__,
    elevation_angle_deg,
    filter_candidates,
    generate_scenario,
    generate_walker,
    grid_plus_isl_count,
    orbital_period_s,
    propagate,
    propagation_delay_ms,
    remaining_visibility_s,
    run_experiment,
    slant_range_at_elevation_km,
    slant_range_bitrate_mbps,
)

__all__ = [
    "CandidatePair",
    "GroundNode",
    "HandoverConfig",
    "WalkerParams",
    "__version__",
    "elevation_angle_deg",
    "filter_candidates",
    "generate_scenario",
    "generate_walker",
    "grid_plus_isl_count",
    "orbital_period_s",
    "propagate",
    "propagation_delay_ms",
    "remaining_visibility_s",
    "run_experiment",
    "slant_range_at_elevation_km",
    "slant_range_bitrate_mbps",
]
