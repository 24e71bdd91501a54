"""Shared builders for randomized environments.

Random environments are periodic tables: bounded odds ratios keep every
derived sequence finite, which makes them safe property-test fodder.
All draws go through an explicitly seeded Generator so failures replay.
"""

import numpy as np
import pytest

import stratawalk as sw


def random_mu(rng: np.random.Generator, d: int, symmetric: bool = False):
    """Random horizontal law on {-3..3}^d whose support spans Z^d.

    Always includes +-e_i so the second-moment matrix stays away from
    singular; masses are floored at ~5%.
    """
    eye = np.eye(d, dtype=int)
    pts = {tuple(v) for v in np.concatenate([eye, -eye])}
    for _ in range(int(rng.integers(0, 3))):
        cand = tuple(int(x) for x in rng.integers(-3, 4, size=d))
        if any(cand):
            pts.add(cand)
            if symmetric:
                pts.add(tuple(-x for x in cand))
    pts = sorted(pts)
    raw = rng.dirichlet(np.full(len(pts), 2.0))
    masses = (raw + 0.08) / (1.0 + 0.08 * len(pts))
    if symmetric:
        index = {pt: i for i, pt in enumerate(pts)}
        masses = np.array(
            [0.5 * (masses[i] + masses[index[tuple(-np.array(pt))]])
             for i, pt in enumerate(pts)]
        )
    return pts, masses


def random_row(rng: np.random.Generator, d: int, symmetric_mu: bool = False,
               p_equals_q: bool = False):
    p = float(rng.uniform(0.18, 0.38))
    q = p if p_equals_q else float(rng.uniform(0.18, 0.38))
    r = 1.0 - p - q
    pts, masses = random_mu(rng, d, symmetric=symmetric_mu)
    return (p, q, r) + tuple([list(pt), float(m)] for pt, m in zip(pts, masses))


def random_periodic_env(rng: np.random.Generator, d: int = 1,
                        period: int | None = None,
                        symmetric_mu: bool = False,
                        p_equals_q: bool = False) -> sw.StratifiedEnvironment:
    period = int(period if period is not None else rng.integers(3, 10))
    rows = tuple(
        random_row(rng, d, symmetric_mu=symmetric_mu, p_equals_q=p_equals_q)
        for _ in range(period)
    )
    spec = sw.Tabulated(window=(0, period - 1), rows=rows, extension="periodic")
    return sw.family(spec)


def flat_drift_env(drift_point=(1,), p: float = 1.0 / 3.0) -> sw.StratifiedEnvironment:
    """Homogeneous p = q with a point-mass horizontal law (nonzero drift)."""
    d = len(drift_point)
    mu = sw.HorizontalLaw([tuple(drift_point)], [1.0])
    fn = lambda n: sw.StratumLaw(p, p, 1.0 - 2.0 * p, mu)
    return sw.StratifiedEnvironment(
        d, fn, min(p, 1.0 / 3.0) * 0.9,
        family_info={"name": "FlatDrift", "p_equals_q": True, "rho_flat": True,
                     "vertical_tail": {"n0": 0, "a_plus": 1.0, "a_minus": 1.0}},
        label="FlatDrift",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
