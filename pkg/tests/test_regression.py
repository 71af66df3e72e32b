"""Snapshots fixed by the first validated runs."""

import numpy as np

from swarmtopo.planner import plan_length_stats
from swarmtopo.spatial import RangeConfig, hold, potential, random_world

CONTROL_EPS = 1e-6


def test_plan_length_snapshot_n6():
    s = plan_length_stats(6, 1000, seed=0)
    assert (s.min, s.max, round(s.mean, 3)) == (1, 10, 4.717)
    assert plan_length_stats(6, 1000, seed=0) == s


def test_hold_settles_to_mission_spacing():
    cfg = RangeConfig()
    w = random_world(15, cfg, np.random.default_rng(0))
    e0 = potential(w, cfg)
    hold(w, cfg, 10_000)
    lengths = w.edge_lengths()
    assert np.all(np.abs(lengths - cfg.r_mission) <= CONTROL_EPS)
    assert potential(w, cfg) <= e0
    assert w.max_edge < cfg.r_range
