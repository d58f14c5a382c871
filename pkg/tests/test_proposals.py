import numpy as np
import pytest

from asyncplan.planner import proposal_score, score_proposals, trajectory_variants
from asyncplan.scene import Trajectory, generate_scenario
from asyncplan.sim import IdmPlanner, Simulation


@pytest.fixture(scope="module")
def cruise_scene():
    sim = Simulation(generate_scenario("straight_with_lead", 4, duration=8.0), IdmPlanner())
    for _ in range(20):
        sim.step()
    return sim.build_scene()


def straight_candidate(speed, n=80):
    pts = np.zeros((n, 3))
    pts[:, 0] = np.arange(n) * 0.1 * speed
    return Trajectory(dt=0.1, points=pts)


def test_single_candidate_returned_unchanged(cruise_scene):
    c = straight_candidate(5.0)
    assert score_proposals([c], cruise_scene) is c


def test_empty_candidates_error(cruise_scene):
    with pytest.raises(ValueError):
        score_proposals([], cruise_scene)


def test_identical_candidates_tie_breaks_first(cruise_scene):
    a = straight_candidate(5.0)
    b = straight_candidate(5.0)
    assert score_proposals([a, b], cruise_scene) is a


def test_clear_candidate_beats_colliding_one(cruise_scene):
    # the lead vehicle sits ahead on the lane; ramming it scores worse
    lead = next(t for t in cruise_scene.agents if t.id == "lead")
    lead_x = float(lead.current[0])
    fast = straight_candidate(max(8.0, lead_x / 2.0))  # reaches the lead within 8 s
    stop = straight_candidate(0.0)
    colliding_score = proposal_score(fast, cruise_scene)
    clear_score = proposal_score(stop, cruise_scene)
    assert clear_score > colliding_score
    assert score_proposals([fast, stop], cruise_scene) is stop


def test_variants_include_base_and_fallbacks():
    base = straight_candidate(6.0)
    variants = trajectory_variants(base)
    assert variants[0] is base
    assert len(variants) == 8
    # the zero-speed variant stays at the start pose
    halted = variants[-1]
    assert np.allclose(halted.points[1:, :2], halted.points[1, :2])
