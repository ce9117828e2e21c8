from .mission import IllegalTransition, MissionContext, MissionState, Phase, mission_update
from .scenario import (ConfigError, Limits, MissionConfig, ObstacleSpec, Scenario, Sensing,
                       default_scenario, load_scenario, scenario_from_dict)
from .tracker import TrackerState, init_track, tracker_step
from .world import LatencyBuffer, World, measure, step_world

__all__ = [
    "ConfigError", "IllegalTransition", "LatencyBuffer", "Limits", "MissionConfig",
    "MissionContext", "MissionState", "ObstacleSpec", "Phase", "Scenario", "Sensing",
    "TrackerState", "World", "default_scenario", "init_track", "load_scenario", "measure",
    "mission_update", "scenario_from_dict", "step_world", "tracker_step",
]
