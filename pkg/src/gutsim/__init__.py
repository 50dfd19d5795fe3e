"""Decentralized multi-agent active-search simulation library."""

__version__ = "0.1.0"

from .agents import AgentState, TeamConfig, agent_decide, agent_observe, recovered_cells
from .comms import CommsConfig, Message, MessageBus, apply_failures
from .grid import (
    GridError,
    GroundTruth,
    Path,
    Pose,
    SearchRegion,
    build_region,
    place_oois,
    shortest_paths,
    traversal_path,
)
from .planner import (
    Candidate,
    RewardConfig,
    enumerate_candidates,
    expected_next_estimate,
    guts_indicator,
    guts_reward,
    nats_reward,
    select_action,
)
from .posterior import (
    BetaSample,
    Posterior,
    SblHyper,
    SufficientStats,
    e_step,
    ingest,
    m_step,
    run_em,
    sample_beta,
)
from .scenario import Scenario, ScenarioError, demo_scenario, load_scenario, validate_scenario
from .sensing import (
    NoiseConfig,
    Observation,
    SensingAction,
    negative_noise_variance,
    positive_noise_variance,
    synthesize_observation,
    uav_fov,
    ugv_fov,
)
from .episode import EpisodeLog, run_episode, run_many
from .metrics import MetricsReport, compute_metrics, metrics_from_csv

__all__ = [
    "AgentState",
    "BetaSample",
    "Candidate",
    "CommsConfig",
    "EpisodeLog",
    "GridError",
    "GroundTruth",
    "Message",
    "MessageBus",
    "MetricsReport",
    "NoiseConfig",
    "Observation",
    "Path",
    "Pose",
    "Posterior",
    "RewardConfig",
    "SblHyper",
    "Scenario",
    "ScenarioError",
    "SearchRegion",
    "SensingAction",
    "SufficientStats",
    "TeamConfig",
    "agent_decide",
    "agent_observe",
    "apply_failures",
    "build_region",
    "compute_metrics",
    "demo_scenario",
    "e_step",
    "enumerate_candidates",
    "expected_next_estimate",
    "guts_indicator",
    "guts_reward",
    "ingest",
    "load_scenario",
    "m_step",
    "metrics_from_csv",
    "nats_reward",
    "negative_noise_variance",
    "place_oois",
    "positive_noise_variance",
    "recovered_cells",
    "run_em",
    "run_episode",
    "run_many",
    "sample_beta",
    "select_action",
    "shortest_paths",
    "synthesize_observation",
    "traversal_path",
    "uav_fov",
    "ugv_fov",
    "validate_scenario",
]
