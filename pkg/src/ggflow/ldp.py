"""Particle-level grounding: exact-event simulation of independent jump
processes, empirical measures and fluxes, and the sample-path rate
functional.

n independent walkers follow the jump kernel; the empirical measure is the
fraction of walkers per state and the empirical flux counts jumps per edge.
The rate functional integrates the relative-entropy perspective of the
observed flux against its instantaneous expectation rho_t(dx) kappa(x, dy);
it vanishes exactly on expectation-matching paths and measures the
exponential unlikeliness of everything else.  `net_flux_cost` performs the
per-edge reduction of that rate over one-way splits of a prescribed net
flux, whose closed form is built from the cosh dissipation pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .graph import Flux, Measure

__all__ = [
    "ParticleEnsemble",
    "empirical_path",
    "eta_perspective",
    "gillespie",
    "net_flux_cost",
    "path_rate",
]


@dataclass(frozen=True)
class ParticleEnsemble:
    """Event log of n independent walkers on [0, horizon]."""

    n: int
    horizon: float
    seed: int
    initial_states: np.ndarray
    event_times: np.ndarray
    event_particles: np.ndarray
    event_from: np.ndarray
    event_to: np.ndarray

    @property
    def n_events(self):
        return self.event_times.size

    def to_rows(self):
        return zip(self.event_times, self.event_particles, self.event_from,
                   self.event_to)


def gillespie(system, n, T, seed=0, rho0=None):
    """Exact-event simulation of n i.i.d. walkers with kernel kappa.

    Initial states are sampled from rho0 (default: pi, normalized).  Each
    particle owns a counter-based substream Philox(key=[seed, particle]),
    so the log is reproducible and independent of scheduling order.
    """
    if n < 1:
        raise ValueError("need at least one particle")
    kappa = system.kappa
    exit_rates = kappa.sum(axis=1)
    cum_rows = np.cumsum(kappa, axis=1)
    with np.errstate(invalid="ignore"):
        cum_rows = cum_rows / np.where(exit_rates > 0, exit_rates, 1.0)[:, None]
    p0 = system.pi / system.mass if rho0 is None else (
        np.asarray(rho0, dtype=float) / float(np.asarray(rho0, dtype=float).sum())
    )
    cum_p0 = np.cumsum(p0)

    init = np.empty(n, dtype=np.int64)
    times, parts, src, dst = [], [], [], []
    for i in range(n):
        rng = np.random.Generator(np.random.Philox(key=[seed, i]))
        state = int(np.searchsorted(cum_p0, rng.random()))
        init[i] = state
        t = 0.0
        while exit_rates[state] > 0.0:
            t += rng.exponential(1.0 / exit_rates[state])
            if t > T:
                break
            nxt = int(np.searchsorted(cum_rows[state], rng.random()))
            times.append(t)
            parts.append(i)
            src.append(state)
            dst.append(nxt)
            state = nxt

    order = np.argsort(np.asarray(times), kind="stable")
    return ParticleEnsemble(
        n=n,
        horizon=float(T),
        seed=int(seed),
        initial_states=init,
        event_times=np.asarray(times, dtype=float)[order],
        event_particles=np.asarray(parts, dtype=np.int64)[order],
        event_from=np.asarray(src, dtype=np.int64)[order],
        event_to=np.asarray(dst, dtype=np.int64)[order],
    )


def empirical_path(system, ensemble, bins=100):
    """Bin the event log: measures at bin edges, one flux matrix per bin.

    By construction the measure increment over each bin equals minus the
    divergence of the binned flux (a counting identity, exact).
    """
    n_states = system.n
    edges = np.linspace(0.0, ensemble.horizon, int(bins) + 1)
    counts = np.bincount(ensemble.initial_states, minlength=n_states).astype(float)
    measures = [Measure.from_rho(system, counts / ensemble.n)]
    fluxes = []
    ptr = 0
    ev_t = ensemble.event_times
    for b in range(int(bins)):
        jump_counts = np.zeros((n_states, n_states))
        while ptr < ev_t.size and ev_t[ptr] <= edges[b + 1]:
            i = ensemble.event_from[ptr]
            j = ensemble.event_to[ptr]
            jump_counts[i, j] += 1.0
            counts[i] -= 1.0
            counts[j] += 1.0
            ptr += 1
        fluxes.append(Flux.from_matrix(jump_counts / ensemble.n))
        measures.append(Measure.from_rho(system, counts / ensemble.n))
    return edges, measures, fluxes


def eta_perspective(a, b):
    """Perspective of eta(s) = s log s - s + 1:  a log(a/b) - a + b.

    Lower-semicontinuous extension: the value at a = 0 is b (a flux-free
    cell still pays its expected intensity, b * eta(0) = b), and a > 0 with
    b = 0 costs +inf.
    """
    if a < 0 or b < 0:
        raise ValueError("eta perspective needs nonnegative arguments")
    if a == 0.0:
        return float(b)
    if b == 0.0:
        return math.inf
    return float(a * math.log(a / b) - a + b)


def path_rate(system, times, measures, fluxes):
    """Sample-path rate: sum over bins and edges of the eta-perspective of
    the observed flux against its expected intensity rho_i kappa_ij dt.

    Zero exactly when every binned flux matches its expectation; grows with
    the squared relative fluctuation, so empirical paths of n walkers score
    O(#bins * #edges / n).
    """
    times = np.asarray(times, dtype=float)
    if len(measures) != times.size or len(fluxes) != times.size - 1:
        raise GridMismatch("need measures on bin edges and one flux per bin")
    total = 0.0
    for m in range(times.size - 1):
        dt = times[m + 1] - times[m]
        rho = measures[m].rho
        jmat = fluxes[m].j
        for i in range(system.n):
            for j in range(system.n):
                if i == j:
                    continue
                expected = rho[i] * system.kappa[i, j] * dt
                observed = jmat[i, j]
                if observed == 0.0 and expected == 0.0:
                    continue
                total += eta_perspective(observed, expected)
    return float(total)


def _golden_minimize(f, lo, hi, tol=1e-10):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return f(x)


def net_flux_cost(spec, s, c, d):
    """Minimal two-clock rate cost of a prescribed net flux s between rates
    c and d:  inf over a - b = 2s, a, b >= 0 of eta_persp(a, c) + eta_persp(b, d).

    Returns (closed_form, brute_force).  The closed form is expressed with
    the cosh dissipation pair (pass the cosh spec); the brute force is an
    independent golden-section minimization of the one-dimensional convex
    objective.
    """
    if c <= 0 or d <= 0:
        raise ValueError("rates c, d must be positive")
    s = float(s)
    root = math.sqrt(c * d)
    closed = 0.5 * root * (
        float(spec.psi(2.0 * s / root)) + float(spec.psi_star(-math.log(d / c)))
    ) + s * math.log(d / c)

    def objective(a):
        return eta_perspective(a, c) + eta_perspective(a - 2.0 * s, d)

    lo = max(0.0, 2.0 * s)
    span = max(1.0, 4.0 * abs(s), 4.0 * root, 4.0 * c, 4.0 * d)
    hi = lo + span
    for _ in range(200):
        if objective(hi) > objective(0.5 * (lo + hi)):
            break
        hi = lo + 2.0 * (hi - lo)
    brute = _golden_minimize(objective, lo, hi)
    return closed, brute
