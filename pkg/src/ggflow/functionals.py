"""Variational functionals: energy, dissipation rate, Fisher information,
chain-rule diagnostics, and the energy-dissipation certificate.

The convention lock used throughout: the energy is E(rho) = sum phi(u_i) pi_i
with no prefactor, while the dissipation rate and the Fisher information both
carry the 1/2 double-sum prefactor.  Under this normalization
-dE/dt = R + D holds exactly along solutions, which is what the deficit
report certifies (up to quadrature on a time grid).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContinuityEquationViolated, GridMismatch
from .graph import CurveWithFlux, Flux, Measure, ce_residual
from .potentials import edge_force, flux_cost, mul_zero_inf

__all__ = [
    "EDBReport",
    "action_rate",
    "chain_rule_residual",
    "edge_diagnostics_csv",
    "edge_force",
    "energy",
    "energy_dissipation_report",
    "fisher_information",
    "fisher_integrands",
]


def energy(entropy, system, measure):
    """Relative entropy of the measure against pi: sum_i phi(u_i) pi_i."""
    u = measure.u if isinstance(measure, Measure) else np.asarray(measure, float)
    return float(np.sum(entropy.phi(u) * system.pi))


def _psi_star_ext(spec, a):
    """Psi*(a) with Psi*(+-inf) = +inf (a may carry infinities)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.full(a.shape, np.inf)
    finite = np.isfinite(a)
    if np.any(finite):
        with np.errstate(over="ignore"):
            out[finite] = spec.psi_star(a[finite])
    return out


class FisherTriple(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray
    envelope: np.ndarray


def fisher_envelope_closed_form(spec, entropy):
    """Closed-form lower-semicontinuous Fisher integrand, where known.

    Shipped for cosh(q) x boltzmann(gamma) and quadratic x boltzmann; returns
    None otherwise, in which case callers fall back to the upper integrand
    (which may overestimate on the boundary of the quadrant).
    """
    if spec.name == "cosh" and entropy.name == "boltzmann":
        q = spec.params["q"]
        gam = entropy.params["scale"]
        a = 0.5 * q * (1.0 - gam)
        b = 0.5 * q * (1.0 + gam)

        def env(u, v, q=q, a=a, b=b):
            u = np.asarray(u, dtype=float)
            v = np.asarray(v, dtype=float)
            return (2.0 / q) * (
                u ** a * v ** b + u ** b * v ** a - 2.0 * (u * v) ** (0.5 * q)
            )

        return env

    if spec.name == "quadratic" and entropy.name == "boltzmann":
        gam = entropy.params["scale"]

        def env(u, v, gam=gam):
            u, v = np.broadcast_arrays(
                np.asarray(u, dtype=float), np.asarray(v, dtype=float)
            )
            out = np.full(u.shape, np.inf)
            both = (u > 0) & (v > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ell = np.log(np.maximum(u, 1e-300)) - np.log(np.maximum(v, 1e-300))
            out[both] = 0.5 * gam * gam * (u - v)[both] * ell[both]
            near = both & (np.abs(u - v) <= 1e-12 * (u + v))
            out[near] = 0.0
            out[(u == 0) & (v == 0)] = 0.0
            return out

        return env

    return None


def fisher_integrands(spec, entropy, u, v):
    """The three edgewise Fisher integrands (lower, upper, envelope).

    lower vanishes wherever alpha does; upper is +inf there unless u = v = 0;
    envelope is the lower-semicontinuous interpolation between them (closed
    form for the shipped structure/entropy pairs, upper otherwise).
    lower <= envelope <= upper pointwise.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    scalar = u.ndim == 0
    u, v = np.atleast_1d(u, v)
    al = np.atleast_1d(spec.alpha(u, v))
    body = _psi_star_ext(spec, edge_force(entropy, u, v))
    lower = mul_zero_inf(body, al)
    upper = np.where(al > 0.0, lower, np.where((u == 0) & (v == 0), 0.0, np.inf))
    env_fn = fisher_envelope_closed_form(spec, entropy)
    envelope = np.asarray(env_fn(u, v), dtype=float) if env_fn is not None else upper
    if scalar:
        return FisherTriple(float(lower[0]), float(upper[0]), float(envelope[0]))
    return FisherTriple(lower, upper, envelope)


def fisher_information(spec, entropy, system, measure):
    """Fisher information: (1/2) sum_ij envelope(u_i, u_j) theta_ij."""
    u = measure.u if isinstance(measure, Measure) else np.asarray(measure, float)
    mask = system.edge_mask
    ii, jj = np.nonzero(mask)
    env = fisher_integrands(spec, entropy, u[ii], u[jj]).envelope
    with np.errstate(invalid="ignore"):
        vals = env * system.theta[ii, jj]
    if np.any(np.isinf(env)):
        return float(np.inf)
    return float(0.5 * vals.sum())


def action_rate(spec, system, measure, flux):
    """Instantaneous dissipation R(rho, j) = (1/2) sum flux_cost * theta.

    +inf if any edge with theta = 0 carries flux, or if the perspective cost
    blows up (flux across a dead edge of the weight alpha).
    """
    u = measure.u if isinstance(measure, Measure) else np.asarray(measure, float)
    j = flux.j if isinstance(flux, Flux) else np.asarray(flux, dtype=float)
    mask = system.edge_mask
    off = ~mask
    np.fill_diagonal(off, False)
    if np.any(j[off] != 0.0):
        return float(np.inf)
    ii, jj = np.nonzero(mask)
    w = 2.0 * j[ii, jj] / system.theta[ii, jj]
    costs = np.atleast_1d(flux_cost(spec, u[ii], u[jj], w))
    if np.any(np.isinf(costs)):
        return float(np.inf)
    return float(0.5 * (costs * system.theta[ii, jj]).sum())


def _interval_average_states(curve):
    dens = curve.densities
    return 0.5 * (dens[:-1] + dens[1:])


def _interval_w_flat(system, curve):
    """Skew part of the scaled flux density per interval."""
    out = []
    th = system.theta
    mask = system.edge_mask
    for f in curve.fluxes:
        w = np.zeros_like(th)
        w[mask] = 2.0 * f.j[mask] / th[mask]
        out.append(0.5 * (w - w.T))
    return out


def chain_rule_residual(spec, entropy, system, times, states, fluxes):
    """Defect of the entropy chain rule along a time-gridded curve.

    Per interval: | Delta(sum phi(u) pi)  -  dt * (1/2) sum_ij
    edge_force(u_i, u_j) * w_flat_ij * theta_ij | evaluated at the interval
    average state; returns the max over intervals.
    """
    times = np.asarray(times, dtype=float)
    if len(states) != times.size or len(fluxes) != times.size - 1:
        raise GridMismatch("chain rule needs one flux per interval")
    curve = CurveWithFlux(times=times, states=tuple(states), fluxes=tuple(fluxes))
    ubar = _interval_average_states(curve)
    wflat = _interval_w_flat(system, curve)
    energies = np.array([energy(entropy, system, m) for m in states])
    dt = np.diff(times)
    worst = 0.0
    mask = system.edge_mask
    ii, jj = np.nonzero(mask)
    th = system.theta[ii, jj]
    for m in range(dt.size):
        force = np.atleast_1d(edge_force(entropy, ubar[m][ii], ubar[m][jj]))
        integrand = mul_zero_inf(force, np.abs(wflat[m][ii, jj]))
        integrand = np.where(
            wflat[m][ii, jj] >= 0, integrand, -integrand
        )  # force * w with 0*inf = 0
        rate = 0.5 * float((integrand * th).sum())
        worst = max(worst, abs(energies[m + 1] - energies[m] - dt[m] * rate))
    return worst


@dataclass(frozen=True)
class EDBReport:
    """Energy-dissipation balance certificate for a curve with fluxes.

    deficit = integral(R) + integral(D) + E(end) - E(start); nonnegative up
    to quadrature error, and ~0 exactly on solution curves.
    """

    energy_start: float
    energy_end: float
    action_integral: float
    fisher_integral: float
    deficit: float
    quadrature_order: int
    dt_max: float
    ce_residual_value: float

    def to_dict(self):
        return {
            "energy_start": self.energy_start,
            "energy_end": self.energy_end,
            "action_integral": self.action_integral,
            "fisher_integral": self.fisher_integral,
            "deficit": self.deficit,
            "quadrature_order": self.quadrature_order,
            "dt_max": self.dt_max,
            "ce_residual": self.ce_residual_value,
        }


def energy_dissipation_report(
    spec, entropy, system, times, states, fluxes, ce_tol=1e-6
):
    """Assemble the energy-dissipation certificate for a gridded curve.

    Raises ContinuityEquationViolated when the curve/flux pair fails the
    continuity-equation residual check at ce_tol (pass ce_tol=None to skip).
    The action integral uses the midpoint rule (interval-average state with
    the interval flux), the Fisher integral the trapezoid rule on the nodes;
    both are second order, so the deficit of a solution curve scales as
    O(dt^2).
    """
    times = np.asarray(times, dtype=float)
    rep = ce_residual(system, times, states, fluxes)
    if ce_tol is not None and rep.residual > ce_tol:
        raise ContinuityEquationViolated(
            f"continuity residual {rep.residual:.3g} exceeds {ce_tol:.3g}"
        )
    curve = CurveWithFlux(times=times, states=tuple(states), fluxes=tuple(fluxes))
    if len(fluxes) != times.size - 1:
        raise GridMismatch("deficit report needs one flux per interval")
    dt = np.diff(times)
    ubar = _interval_average_states(curve)
    action = 0.0
    for m in range(dt.size):
        mid = Measure.from_u(system, np.maximum(ubar[m], 0.0))
        action += dt[m] * action_rate(spec, system, mid, fluxes[m])
    fisher_nodes = np.array(
        [fisher_information(spec, entropy, system, s) for s in states]
    )
    fisher = float(np.sum(0.5 * dt * (fisher_nodes[:-1] + fisher_nodes[1:])))
    e0 = energy(entropy, system, states[0])
    eT = energy(entropy, system, states[-1])
    return EDBReport(
        energy_start=e0,
        energy_end=eT,
        action_integral=float(action),
        fisher_integral=fisher,
        deficit=float(action + fisher + eT - e0),
        quadrature_order=2,
        dt_max=float(dt.max()),
        ce_residual_value=rep.residual,
    )


def edge_diagnostics_csv(path, spec, entropy, system, times, states, fluxes):
    """Dump per-edge diagnostics: t, i, j, u_i, u_j, w, cost, fisher, chain."""
    times = np.asarray(times, dtype=float)
    curve = CurveWithFlux(times=times, states=tuple(states), fluxes=tuple(fluxes))
    ubar = _interval_average_states(curve)
    wflat = _interval_w_flat(system, curve)
    ii, jj = np.nonzero(system.edge_mask)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "i", "j", "u_i", "u_j", "w", "cost", "fisher", "chain"])
        for m in range(len(fluxes)):
            t = 0.5 * (times[m] + times[m + 1])
            ui, uj = ubar[m][ii], ubar[m][jj]
            w = wflat[m][ii, jj]
            cost = np.atleast_1d(flux_cost(spec, ui, uj, w))
            fish = fisher_integrands(spec, entropy, ui, uj).envelope
            force = np.atleast_1d(edge_force(entropy, ui, uj))
            chain = mul_zero_inf(force, np.abs(w)) * np.sign(w)
            for k in range(ii.size):
                writer.writerow(
                    [repr(t), ii[k], jj[k], repr(ui[k]), repr(uj[k]), repr(w[k]),
                     repr(float(cost[k])), repr(float(fish[k])), repr(float(chain[k]))]
                )
