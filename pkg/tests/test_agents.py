import json

import numpy as np
import pytest

from gutsim.agents import (
    AgentState,
    TeamConfig,
    agent_decide,
    agent_observe,
    deliver_message,
    recovered_cells,
)
from gutsim.comms import LOCATION, OBSERVATION, Message
from gutsim.grid import GroundTruth, Pose, build_region
from gutsim.planner import Candidate, RewardConfig
from gutsim.posterior import SblHyper, SufficientStats, ingest, run_em
from gutsim.sensing import NoiseConfig, Observation, ugv_fov


def team_cfg(**kw):
    return TeamConfig(
        noise=kw.pop("noise", NoiseConfig()),
        reward=kw.pop("reward", RewardConfig()),
        hyper=kw.pop("hyper", SblHyper()),
        **kw,
    )


def make_truth(region, ooi_cells=()):
    beta = np.zeros(region.n_cells)
    beta[list(ooi_cells)] = 1.0
    return GroundTruth(beta=beta, ooi_cells=frozenset(int(c) for c in ooi_cells))


def fresh_agent(region, policy="GUTS", cell=0, heading="E", kind="UGV", seed=0, agent_id=0):
    return AgentState.create(
        agent_id=agent_id,
        kind=kind,
        policy=policy,
        pose=Pose(cell, heading),
        n_cells=region.n_cells,
        rng=np.random.default_rng(seed),
    )


class TestDecide:
    def test_first_decision_reproducible(self, square10):
        cfg = team_cfg()
        picks = set()
        for _ in range(3):
            agent = fresh_agent(square10, seed=42)
            d = agent_decide(agent, square10, cfg)
            picks.add((d.candidate.action.target_cell, d.candidate.action.heading))
        assert len(picks) == 1

    def test_coverage_prefers_nearest_unvisited(self, square10):
        cfg = team_cfg()
        agent = fresh_agent(square10, policy="COVERAGE", cell=square10.flatten(5, 5))
        d = agent_decide(agent, square10, cfg)
        assert not d.wrap_around
        # nearest unvisited by cost with index tie-break: cell (4,5), one step north
        assert d.candidate.action.target_cell == square10.flatten(4, 5)

    def test_coverage_wraps_when_everything_visited(self):
        region = build_region([(0, 0), (60, 0), (60, 60), (0, 60)], 30.0)
        cfg = team_cfg()
        agent = fresh_agent(region, policy="COVERAGE", cell=0)
        agent.visited[:] = True
        d = agent_decide(agent, region, cfg)
        assert d.wrap_around
        assert d.candidate.action.target_cell != agent.pose.cell

    def test_strong_suspect_draw_drives_decision_to_it(self, square10):
        cfg = team_cfg()
        agent = fresh_agent(square10, seed=5)
        target = square10.flatten(7, 7)
        # everything except the suspect is pinned near zero with huge precision
        for cell in range(square10.n_cells):
            if cell != target:
                agent.stats = ingest(agent.stats, Observation((cell,), (0.0,), (1e-8,)))
        agent.stats = ingest(agent.stats, Observation((target,), (1.0,), (0.01,)))
        d = agent_decide(agent, square10, cfg)
        assert target in d.candidate.action.visible_cells

    def test_trapped_ground_agent_reports_itself(self):
        region = build_region([(31, 31), (59, 31), (59, 59), (31, 59)], 30.0)
        cfg = team_cfg()
        agent = fresh_agent(region, cell=0, policy="GUTS")
        # region has a single in-region cell; relocate the agent onto it
        only = int(region.in_region_cells[0])
        agent.pose = Pose(only, "N")
        d = agent_decide(agent, region, cfg)
        assert d.trapped

    def test_dead_agent_cannot_decide(self, square10):
        agent = fresh_agent(square10)
        agent.alive = False
        with pytest.raises(RuntimeError):
            agent_decide(agent, square10, team_cfg())


class TestObserve:
    def test_precision_grows_exactly_on_visible_cells(self, square10):
        cfg = team_cfg()
        truth = make_truth(square10)
        agent = fresh_agent(square10, cell=square10.flatten(5, 5))
        action = ugv_fov(square10, Pose(square10.flatten(5, 5), "E"), cfg.noise)
        from gutsim.agents import Decision

        decision = Decision(candidate=Candidate(action=action, travel_cost=0.0))
        before = agent.stats.precision_diag.copy()
        obs, msgs = agent_observe(agent, square10, truth, cfg, decision)
        after = agent.stats.precision_diag
        changed = set(np.flatnonzero(after != before))
        assert changed == set(action.visible_cells)

    def test_en_route_cells_are_logged_and_shared(self, square10):
        cfg = team_cfg()
        truth = make_truth(square10)
        agent = fresh_agent(square10, cell=square10.flatten(0, 0), policy="COVERAGE")
        # drive three cells east, then observe
        from gutsim.grid import traversal_path
        from gutsim.agents import Decision

        path = traversal_path(square10, square10.flatten(0, 0), square10.flatten(0, 3))
        action = ugv_fov(square10, Pose(square10.flatten(0, 3), "E"), cfg.noise)
        decision = Decision(candidate=Candidate(action=action, travel_cost=path.cost), path=path)
        obs, msgs = agent_observe(agent, square10, truth, cfg, decision)
        assert len(obs) > 1  # intermediate poses contributed
        kinds = [m.kind for m in msgs]
        assert kinds.count(LOCATION) == 1
        assert kinds.count(OBSERVATION) == len(obs)
        assert agent.pose.cell == square10.flatten(0, 3)

    def test_dead_agent_emits_nothing(self, square10):
        cfg = team_cfg()
        agent = fresh_agent(square10)
        agent.alive = False
        obs, msgs = agent_observe(agent, square10, make_truth(square10), cfg, None)
        assert obs == [] and msgs == []


class TestMessaging:
    def test_duplicate_observation_is_ignored(self, square10):
        agent = fresh_agent(square10, agent_id=1)
        obs = Observation((3, 4), (0.5, 0.25), (0.1, 0.2))
        msg = Message(origin=0, seq=7, kind=OBSERVATION, payload=obs.to_dict(), send_epoch=2)
        assert deliver_message(agent, msg, epoch=3)
        snapshot = agent.stats.precision_diag.copy()
        assert not deliver_message(agent, msg, epoch=4)
        assert np.array_equal(agent.stats.precision_diag, snapshot)

    def test_location_messages_track_latest(self, square10):
        agent = fresh_agent(square10)
        deliver_message(agent, Message(1, 0, LOCATION, {"cell": 5}, 0), epoch=1)
        deliver_message(agent, Message(1, 1, LOCATION, {"cell": 9}, 1), epoch=2)
        assert agent.peer_locations[1] == (9, 2)

    def test_payload_survives_json_round_trip(self, square10, rng):
        from gutsim.sensing import synthesize_observation

        truth = make_truth(square10, [56])
        action = ugv_fov(square10, Pose(square10.flatten(5, 5), "E"))
        obs = synthesize_observation(truth, action, NoiseConfig(), rng)
        wire = json.dumps(obs.to_dict())
        assert Observation.from_dict(json.loads(wire)) == obs


class TestRecovery:
    def test_uninformed_posterior_recovers_nothing(self, square10):
        truth = make_truth(square10, [4, 40])
        post = run_em(SufficientStats.empty(square10.n_cells), SblHyper())
        assert recovered_cells(post, truth, 0.85) == frozenset()

    def test_noiseless_scans_recover_all(self, square10):
        truth = make_truth(square10, [4, 40, 77])
        stats = SufficientStats.empty(square10.n_cells)
        full = tuple(range(square10.n_cells))
        for _ in range(20):
            stats = ingest(
                stats, Observation(full, tuple(float(b) for b in truth.beta), (1e-6,) * len(full))
            )
        post = run_em(stats, SblHyper())
        assert recovered_cells(post, truth, 0.85) == truth.ooi_cells

    def test_unreachable_threshold_recovers_nothing(self, square10):
        truth = make_truth(square10, [4])
        stats = ingest(
            SufficientStats.empty(square10.n_cells), Observation((4,), (1.0,), (1e-9,))
        )
        post = run_em(stats, SblHyper())
        assert recovered_cells(post, truth, 1.01) == frozenset()
        assert recovered_cells(post, truth, 0.85) == frozenset({4})

    def test_only_true_positives_count(self, square10):
        truth = make_truth(square10, [4])
        # a confident phantom at an empty cell must not appear
        stats = ingest(
            SufficientStats.empty(square10.n_cells), Observation((9,), (1.0,), (1e-9,))
        )
        post = run_em(stats, SblHyper())
        assert recovered_cells(post, truth, 0.85) == frozenset()


class TestPolicyIsolation:
    def test_coverage_never_fits_posterior_when_deciding(self, square10):
        cfg = team_cfg()
        truth = make_truth(square10, [55])
        agent = fresh_agent(square10, policy="COVERAGE", cell=0)
        for _ in range(5):
            d = agent_decide(agent, square10, cfg)
            agent_observe(agent, square10, truth, cfg, d)
        assert agent.em_calls_decide == 0

    def test_sampling_policies_fit_posterior_when_deciding(self, square10):
        cfg = team_cfg()
        truth = make_truth(square10, [55])
        agent = fresh_agent(square10, policy="GUTS", cell=0)
        for _ in range(3):
            d = agent_decide(agent, square10, cfg)
            agent_observe(agent, square10, truth, cfg, d)
        assert agent.em_calls_decide == 3
