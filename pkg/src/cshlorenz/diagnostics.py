"""Conserved and controlled quantities along trajectories: energy, charge,
the covariant-norm sum, and the a-priori bounds they satisfy.

Quadrature is the plain rectangle rule, which is exact for band-limited
integrands on the torus.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRange, NonFiniteField
from .state import covariant_derivative


def _quad(grid, vals):
    return float(grid.cell_area * np.sum(vals))


def energy_density(st, v):
    """Pointwise energy density sum_mu |D_mu phi|^2 + V(|phi|^2)."""
    dens = np.zeros((st.grid.n, st.grid.n))
    for mu in range(3):
        dens += np.abs(covariant_derivative(st, mu).physical()) ** 2
    dens += np.real(v.v(np.abs(st.phi.physical()) ** 2))
    return dens


def energy(st, v):
    """Conserved energy: torus integral of the energy density."""
    e = _quad(st.grid, energy_density(st, v))
    if not np.isfinite(e):
        raise NonFiniteField("energy is not finite")
    return e


def charge_l2(st):
    """||phi(t)||_{L^2}."""
    return st.phi.l2()


def kinetic_l2_sq(st):
    """sum_mu ||D_mu phi(t)||_{L^2}^2."""
    return sum(covariant_derivative(st, mu).l2() ** 2 for mu in range(3))


def i_of_t(st):
    """||phi||_{L^2} + sum_mu ||D_mu phi||_{L^2}, the a-priori controlled sum."""
    return charge_l2(st) + sum(covariant_derivative(st, mu).l2() for mu in range(3))


def d_dt_charge_sq(st):
    """integral of 2 Re(conj(phi) D_0 phi): the exact derivative of ||phi||^2."""
    vals = 2.0 * np.real(np.conj(st.phi.physical()) * covariant_derivative(st, 0).physical())
    return _quad(st.grid, vals)


@dataclass
class MonitorSeries:
    """Aligned time series of the evolution monitors.

    `kinetic_sq` carries sum_mu ||D_mu phi||^2 so the energy inequality can
    be checked from the series alone.
    """

    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    charge_l2: list = field(default_factory=list)
    i_t: list = field(default_factory=list)
    gauss: list = field(default_factory=list)
    lorenz: list = field(default_factory=list)
    v1: list = field(default_factory=list)
    v2: list = field(default_factory=list)
    w: list = field(default_factory=list)
    kinetic_sq: list = field(default_factory=list)

    def append(self, time, energy, charge_l2, i_t, gauss, lorenz, v1, v2, w,
               kinetic_sq=0.0):
        self.times.append(time)
        self.energy.append(energy)
        self.charge_l2.append(charge_l2)
        self.i_t.append(i_t)
        self.gauss.append(gauss)
        self.lorenz.append(lorenz)
        self.v1.append(v1)
        self.v2.append(v2)
        self.w.append(w)
        self.kinetic_sq.append(kinetic_sq)

    def __len__(self):
        return len(self.times)

    def max_constraint(self):
        return max(max(self.v1), max(self.v2), max(self.w), max(self.lorenz))

    def energy_drift(self):
        e0 = self.energy[0]
        return max(abs(e - e0) for e in self.energy) / max(1.0, abs(e0))


def energy_inequality_check(series, alpha, e0=None, slack=1e-8):
    """sum_mu ||D_mu phi(t)||^2 <= |E(0)| + alpha^2 ||phi(t)||^2 at all times."""
    if e0 is None:
        e0 = series.energy[0]
    tol = slack * max(1.0, abs(e0))
    for kin, q in zip(series.kinetic_sq, series.charge_l2):
        if kin > abs(e0) + alpha**2 * q**2 + tol:
            return False
    return True


def gronwall_bound_check(series, alpha, e0=None, rel_slack=1e-6):
    """A-priori growth bound on ||phi(t)||^2 from energy conservation.

    For alpha > 0: ||phi(t)||^2 <= e^{2 alpha |t|} (||phi(0)||^2 + |t| |E0|/alpha).
    For alpha = 0 the stated bound degenerates; integrating the same
    differential inequality d/dt ||phi|| <= |E0|^{1/2} gives the limit form
    ||phi(t)|| <= ||phi(0)|| + |t| |E0|^{1/2}.
    """
    if alpha < 0:
        raise InvalidRange("alpha must be nonnegative")
    if e0 is None:
        e0 = series.energy[0]
    q0 = series.charge_l2[0]
    t0 = series.times[0]
    for t, q in zip(series.times, series.charge_l2):
        tau = abs(t - t0)
        if alpha > 0:
            bound = np.exp(2.0 * alpha * tau) * (q0**2 + tau * abs(e0) / alpha)
        else:
            bound = (q0 + tau * np.sqrt(abs(e0))) ** 2
        if q**2 > bound * (1.0 + rel_slack) + rel_slack:
            return False
    return True


def write_monitors_csv(series, path):
    """monitors.csv with columns (t, E, charge, v1, v2, w, u, I_t)."""
    with open(path, "w") as fh:
        fh.write("t,E,charge,v1,v2,w,u,I_t\n")
        for i in range(len(series)):
            row = (series.times[i], series.energy[i], series.charge_l2[i],
                   series.v1[i], series.v2[i], series.w[i], series.lorenz[i],
                   series.i_t[i])
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
