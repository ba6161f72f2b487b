"""Residual gauge freedom within Lorenz gauge: free-wave gauge functions,
gauge transformations, and invariance reports.

A gauge function chi solves the free wave equation with Cauchy data
(f, g) at a reference time t0, where Delta f matches the divergence-type
data and g = -A_0(t0). Its zero mode is kept: it satisfies
d^2/dt^2 chibar = 0, so chibar(t) is affine in t with slope gbar, and only
rotates the global phase of phi.
"""

from dataclasses import dataclass

import numpy as np

from . import state as state_mod
from .spectral import (
    ScalarField, FracLapHom, field_from_physical, field_from_spectral,
    guard_zero_mode, partial_x,
)
from .state import GaugeState, Potential, current, curvature


@dataclass
class GaugeFunction:
    """Closed-form free-wave evaluator chi(t) built from data (f, g) at t0.

    chi(t) = cos((t-t0)|nabla|) f + sin((t-t0)|nabla|) |nabla|^{-1} g,
    evaluated spectrally; time derivatives and gradients come from the same
    closed form, and the second time derivative uses dtt chi = Delta chi.
    """

    f: ScalarField
    g: ScalarField
    t0: float = 0.0

    def __post_init__(self):
        self._fs = self.f.spectrum()
        self._gs = self.g.spectrum()
        self._grid = self.f.grid
        self._ka = self._grid.k_abs

    def _cs(self, t):
        tau = t - self.t0
        ka = self._ka
        c = np.cos(tau * ka)
        # sin(tau k)/k with the k -> 0 limit tau (keeps the affine zero mode)
        s = np.where(ka > 0, np.sin(tau * ka) / np.where(ka > 0, ka, 1.0), tau)
        return c, s

    def chi_spec(self, t):
        c, s = self._cs(t)
        return c * self._fs + s * self._gs

    def chi_t_spec(self, t):
        c, s = self._cs(t)
        return -self._ka**2 * s * self._fs + c * self._gs

    def chi(self, t):
        return field_from_spectral(self._grid, self.chi_spec(t), True).in_physical()

    def chi_t(self, t):
        return field_from_spectral(self._grid, self.chi_t_spec(t), True).in_physical()

    def chi_tt(self, t):
        # free wave: dtt chi = Delta chi (exact, no differencing)
        return field_from_spectral(self._grid, -self._ka**2 * self.chi_spec(t),
                                   True).in_physical()

    def grad_chi(self, t, j):
        k = self._grid.k[j - 1]
        return field_from_spectral(self._grid, 1j * k * self.chi_spec(t),
                                   True).in_physical()

    def grad_chi_t(self, t, j):
        k = self._grid.k[j - 1]
        return field_from_spectral(self._grid, 1j * k * self.chi_t_spec(t),
                                   True).in_physical()


def solve_gauge_function(st, strict=False):
    """Gauge function normalizing the Lorenz frame at the state's time.

    g = -A_0 and f solves Delta f = d^j A_j through the gradient
    construction d_k f = -R_k R^j A_j with the homogeneous Riesz transform;
    on the torus this is the single multiplier solve
    fhat = i (k . Ahat) / |k|^2 with zero mode 0.
    """
    grid = st.grid
    a1s = st.a[1].spectrum()
    a2s = st.a[2].spectrum()
    k1, k2 = grid.k
    div_spec = 1j * (k1 * a1s + k2 * a2s)
    guard_zero_mode(div_spec, strict)
    ka2 = grid.k_abs**2
    with np.errstate(divide="ignore", invalid="ignore"):
        fs = np.where(ka2 > 0, 1j * (k1 * a1s + k2 * a2s) / np.where(ka2 > 0, ka2, 1.0), 0.0)
    f = field_from_spectral(grid, fs, True).in_physical()
    g = (-1.0) * st.a[0]
    return GaugeFunction(f, g, t0=st.time)


def apply_gauge(st, chi):
    """A'_mu = A_mu + d_mu chi, phi' = e^{i chi} phi, evaluated at st.time."""
    t = st.time
    a0 = (st.a[0] + chi.chi_t(t)).real_part()
    a1 = (st.a[1] + chi.grad_chi(t, 1)).real_part()
    a2 = (st.a[2] + chi.grad_chi(t, 2)).real_part()
    at0 = (st.a_t[0] + chi.chi_tt(t)).real_part()
    at1 = (st.a_t[1] + chi.grad_chi_t(t, 1)).real_part()
    at2 = (st.a_t[2] + chi.grad_chi_t(t, 2)).real_part()
    phase = np.exp(1j * chi.chi(t).physical().real)
    phi = field_from_physical(st.grid, phase * st.phi.physical(), is_real=False)
    chit = chi.chi_t(t).physical().real
    phit_vals = phase * (st.phi_t.physical() + 1j * chit * st.phi.physical())
    phi_t = field_from_physical(st.grid, phit_vals, is_real=False)
    return GaugeState([a0, a1, a2], [at0, at1, at2], phi, phi_t, t)


def _rel_diff(x, y):
    nx = np.sqrt(np.sum(np.abs(x) ** 2))
    ny = np.sqrt(np.sum(np.abs(y) ** 2))
    scale = max(nx, ny)
    if scale == 0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(x - y) ** 2)) / scale)


def invariance_report(s1, s2, v=None):
    """Relative L^2 differences of the gauge-invariant observables.

    Returns dF (curvature), dJ (current), dE (energy density), dAbsPhi
    (|phi|) between two states on the same grid and time.
    """
    if s1.grid != s2.grid:
        raise ValueError("states live on different grids")
    if v is None:
        v = Potential.default_higgs()
    from .diagnostics import energy_density

    f1 = np.stack([f.physical().real for f in curvature(s1)])
    f2 = np.stack([f.physical().real for f in curvature(s2)])
    j1 = np.stack([f.physical().real for f in current(s1).j])
    j2 = np.stack([f.physical().real for f in current(s2).j])
    e1 = energy_density(s1, v)
    e2 = energy_density(s2, v)
    p1 = np.abs(s1.phi.physical())
    p2 = np.abs(s2.phi.physical())
    return {"dF": _rel_diff(f1, f2), "dJ": _rel_diff(j1, j2),
            "dE": _rel_diff(e1, e2), "dAbsPhi": _rel_diff(p1, p2)}
