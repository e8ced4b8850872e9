"""Configurable parameter table for the toy ADS.

Real driving stacks carry hundreds of knobs per module; most are irrelevant
to any one scenario. The table below keeps that flavor at desk scale: every
module exposes ten parameters, a handful of which gate the decision logic
exercised by the seeded scenarios, while the rest are plumbing that the
mutation search has to see through.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

from ..scenario import CyberConfiguration, ParameterSpec, ScenarioError


def _real(module, name, lo, hi, default):
    return ParameterSpec(module=module, name=name, kind="real", lo=lo, hi=hi, default=default)


def _flag(module, name, default=False):
    return ParameterSpec(module=module, name=name, kind="boolean",
                         choices=(False, True), default=default)


_SPECS = (
    # perception
    _real("perception", "BRAKE_THRESHOLD", 0.0, 1.0, 0.10),
    _real("perception", "sensor_range", 20.0, 300.0, 200.0),
    _real("perception", "fov_deg", 90.0, 360.0, 180.0),
    _real("perception", "min_visible_fraction", 0.0, 0.9, 0.0),
    _real("perception", "range_margin_m", 0.0, 10.0, 0.0),
    _real("perception", "max_tracked_obstacles", 1.0, 32.0, 32.0),
    _real("perception", "speed_filter_alpha", 0.0, 1.0, 0.0),
    _real("perception", "min_obstacle_speed_report", 0.0, 1.0, 0.0),
    _real("perception", "brake_signal_floor", 0.0, 0.5, 0.02),
    _real("perception", "tracker_drop_frames", 0.0, 10.0, 0.0),
    # prediction
    _real("prediction", "still_obstacle_speed_threshold", 0.0, 5.0, 0.99),
    _real("prediction", "dist_threshold_static", 0.0, 10.0, 1.00),
    _real("prediction", "prediction_horizon_s", 1.0, 10.0, 5.0),
    _real("prediction", "min_prediction_speed", 0.0, 2.0, 0.0),
    _real("prediction", "speed_obs_window", 1.0, 10.0, 3.0),
    _real("prediction", "max_prediction_obstacles", 1.0, 32.0, 32.0),
    _real("prediction", "lane_association_range", 0.0, 20.0, 5.0),
    _real("prediction", "junction_lookahead", 0.0, 50.0, 20.0),
    _flag("prediction", "use_kinematic_fallback"),
    _real("prediction", "curvature_limit", 0.1, 2.0, 1.0),
    # planning
    _real("planning", "yield_distance", 0.0, 20.0, 5.0),
    _real("planning", "kADCSafetyLBuffer", 0.0, 3.0, 0.1),
    _real("planning", "obstacle_lat_buffer", 0.0, 1.5, 0.6),
    _real("planning", "kMinOvertakeDistance", 0.0, 100.0, 10.0),
    _real("planning", "kOvertakeTimeBuffer", 0.0, 10.0, 3.0),
    _real("planning", "dist_threshold_moving", 0.0, 10.0, 2.50),
    _real("planning", "cruise_speed_mps", 0.0, 30.0, 8.0),
    _real("planning", "planning_decel_limit", 1.0, 8.0, 4.0),
    _real("planning", "path_resolution_m", 0.1, 2.0, 0.5),
    _real("planning", "speed_smoothing", 0.0, 1.0, 0.0),
    # control
    _real("control", "MAX_SPEED", 5.0, 100.0, 35.0),  # km/h
    _real("control", "brake_cap", 0.3, 1.0, 0.6),
    _real("control", "steer_limit", 0.2, 1.0, 1.0),
    _real("control", "throttle_limit", 0.2, 1.0, 1.0),
    _real("control", "stop_speed_epsilon", 0.0, 0.5, 0.05),
    _real("control", "speed_deadband", 0.0, 1.0, 0.05),
    _flag("control", "reverse_enabled"),
    _real("control", "steer_rate_limit", 0.5, 10.0, 10.0),
    _real("control", "low_speed_boost", 0.0, 1.0, 0.0),
    _real("control", "brake_bias", 0.0, 0.3, 0.0),
)


def build_parameter_specs() -> tuple[ParameterSpec, ...]:
    return _SPECS


def specs_for_module(module: str) -> tuple[ParameterSpec, ...]:
    return tuple(s for s in _SPECS if s.module == module)


def default_configuration(overrides: Optional[Mapping[str, Any]] = None) -> CyberConfiguration:
    """Configuration with every spec at its default, plus optional overrides.

    Override keys are "module.name"; unknown keys or out-of-range values are
    rejected.
    """
    values = {s.key: s.default for s in _SPECS}
    if overrides:
        by_key = {s.key: s for s in _SPECS}
        for key, value in overrides.items():
            spec = by_key.get(key)
            if spec is None:
                raise ScenarioError(f"unknown parameter {key!r} in overrides")
            if spec.kind == "real":
                value = float(value)
            if not spec.admits(value):
                raise ScenarioError(f"override {key}={value!r} outside range")
            values[key] = value
    return CyberConfiguration(specs=_SPECS, values=values)
