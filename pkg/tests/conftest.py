import numpy as np

from ggflow import build_system


def random_detailed_balance_system(n, seed, scale=1.0):
    """Random connected system: symmetric theta first, rates kappa = theta/pi."""
    rng = np.random.default_rng(seed)
    pi = rng.uniform(0.5, 1.5, size=n)
    pi = pi / pi.sum()
    s = rng.uniform(0.2, 1.0, size=(n, n)) * scale
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 0.0)
    return build_system(pi, s / pi[:, None])


def two_state_system():
    return build_system([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]])


def three_state_system():
    # connected ring with unequal weights, pi = uniform
    pi = np.full(3, 1.0 / 3.0)
    theta = np.array(
        [
            [0.0, 0.20, 0.10],
            [0.20, 0.0, 0.15],
            [0.10, 0.15, 0.0],
        ]
    )
    return build_system(pi, theta / pi[:, None])


def random_positive_measures(system, seed, count, mass=1.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        r = rng.uniform(0.2, 1.0, size=system.n)
        out.append(r * mass / r.sum())
    return out
