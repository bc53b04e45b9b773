"""Seeded synthetic benchmark scenarios with known cluster structure.

Seven two-cluster / one-cluster designs over a short panel, covering fixed
memberships, drifting cluster locations, random membership switching and a
cluster count that changes over time.
"""

from dataclasses import dataclass

import numpy as np

from .measures import Partition
from .mixture import Dataset

# (mean, sd) schedules per cluster for the location-drift designs.
_DRIFT_MEANS = [(-80.0, 80.0), (-60.0, 20.0), (-40.0, 40.0), (-20.0, 60.0)]

SCENARIO_DESCRIPTIONS = {
    1: "one standard-normal cluster at every time",
    2: "two fixed clusters, N(-80,1) and N(-40,4), constant over time",
    3: "two fixed-membership clusters with drifting locations",
    4: "drifting locations, memberships switch with probability 0.5",
    5: "drifting locations, memberships switch with probability 0.2",
    6: "one cluster at t=1 splitting into two at t=2",
    7: "two clusters at t=1 merging into one at t=2",
}


@dataclass
class ScenarioOutput:
    dataset: Dataset
    true_partitions: list
    scenario: int


def _switching_labels(n, T, switch_prob, rng):
    labels = np.zeros((T, n), dtype=np.int64)
    labels[0, n // 2:] = 1
    for t in range(1, T):
        flip = rng.random(n) < switch_prob
        labels[t] = np.where(flip, 1 - labels[t - 1], labels[t - 1])
    return labels


def generate_scenario(scenario, seed, n=100, T=None):
    """Generate one benchmark dataset with its ground-truth partitions.

    ``n`` and ``T`` may override the default panel size (n=100; T=4 for
    scenarios 1-5, T=2 for 6-7).  The same (scenario, seed) always yields
    bit-identical output.
    """
    if scenario not in SCENARIO_DESCRIPTIONS:
        raise ValueError(f"unknown scenario {scenario}; valid ids are 1-7")
    if scenario in (6, 7):
        if T is not None and T != 2:
            raise ValueError(f"scenario {scenario} is defined for exactly T=2 time points")
        T = 2
    elif T is None:
        T = 4
    if n < 2:
        raise ValueError("n must be >= 2")
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    half = n // 2
    two_block = np.concatenate([np.zeros(half, dtype=np.int64),
                                np.ones(n - half, dtype=np.int64)])

    if scenario == 1:
        y = rng.standard_normal((T, n))
        labels = np.zeros((T, n), dtype=np.int64)
    elif scenario == 2:
        labels = np.tile(two_block, (T, 1))
        means = np.where(labels == 0, -80.0, -40.0)
        sds = np.where(labels == 0, 1.0, 2.0)
        y = rng.normal(means, sds)
    elif scenario in (3, 4, 5):
        if T > len(_DRIFT_MEANS):
            raise ValueError(f"scenario {scenario} defines cluster locations for T<=4")
        if scenario == 3:
            labels = np.tile(two_block, (T, 1))
        else:
            switch = 0.5 if scenario == 4 else 0.2
            labels = _switching_labels(n, T, switch, rng)
        schedule = np.asarray(_DRIFT_MEANS[:T])
        means = schedule[np.arange(T)[:, None], labels]
        y = rng.normal(means, 1.0)
    elif scenario == 6:
        labels = np.vstack([np.zeros(n, dtype=np.int64), two_block])
        means = np.vstack([np.full(n, -80.0), np.where(two_block == 0, -40.0, 40.0)])
        y = rng.normal(means, 1.0)
    else:  # scenario 7
        labels = np.vstack([two_block, np.zeros(n, dtype=np.int64)])
        means = np.vstack([np.where(two_block == 0, -40.0, 40.0), np.full(n, -80.0)])
        y = rng.normal(means, 1.0)

    dataset = Dataset(y, time_labels=list(range(1, T + 1)), unit_labels=list(range(1, n + 1)))
    partitions = [Partition(labels[t]) for t in range(T)]
    return ScenarioOutput(dataset, partitions, scenario)
