"""Identified-set geometry and certified KL bounds for top-K censored logits."""

from ._censet import (
    Error,
    Observation,
    SetGeometry,
    BinaryReserve,
    ReferenceBound,
    NormalizedGeometry,
    SweepRow,
    make_observation,
    parse_observation,
    parse_observations,
    hidden_tail_mass,
    geometry,
    per_token_cap,
    brute_diameter_oracle,
    extremal_pair_tv,
    binary_reserve,
    balancing_oracle,
    g_envelope,
    g_max,
    symmetric_worst_case_risk,
    critical_verdict,
    reference_geometry,
    normalized_geometry,
    generate_teacher,
    censor,
    ksweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
