"""Field-theoretic state: gauge potential, Higgs field, covariant calculus,
matter current, curvature, and compatible initial data.

Index conventions: the metric is diag(1,-1,-1), so X^0 = X_0 and X^j = -X_j
for spatial j; eps^{012} = eps_{012} = 1 and eps_{12} = 1. All vector
components are stored with lower indices.

Torus zero-mode convention: the total charge (mean of J_0) need not vanish,
but any curl has zero mean, so the curl constraint is imposed on (and its
residual reports) the mean-zero part of J_0 only. The charge itself is
tracked separately by the diagnostics.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from .errors import SingularZeroMode
from . import spectral
from .spectral import (
    Grid, ScalarField, FracLapHom, RieszHom, Partial,
    apply_multiplier, check_finite, field_from_physical, field_from_spectral,
    partial_x, zero_field, write_field, read_field,
)


@dataclass
class Potential:
    """Higgs potential V(r), r = |phi|^2, with lower-bound constant alpha.

    Polynomial potentials carry their coefficients (low to high degree) and
    differentiate exactly; a callable kind supplies (v, v_prime) directly.
    The constant alpha asserts V(r) >= -alpha^2 * r.
    """

    coeffs: tuple = None
    v_callable: object = None
    v_prime_callable: object = None
    alpha: float = 0.0

    @classmethod
    def default_higgs(cls):
        """V(r) = r(1-r)^2 = r - 2r^2 + r^3, nonnegative, so alpha = 0."""
        return cls(coeffs=(0.0, 1.0, -2.0, 1.0), alpha=0.0)

    @classmethod
    def zero(cls):
        return cls(coeffs=(0.0,), alpha=0.0)

    def __post_init__(self):
        if self.coeffs is None and self.v_callable is None:
            raise ValueError("potential needs coefficients or a callable")
        if self.coeffs is not None:
            self.coeffs = tuple(float(c) for c in self.coeffs)
            if self.v(0.0) != 0.0:
                raise ValueError("potential must satisfy V(0) = 0")

    def v(self, r):
        if self.coeffs is not None:
            return np.polynomial.polynomial.polyval(r, self.coeffs)
        return self.v_callable(r)

    def v_prime(self, r):
        if self.coeffs is not None:
            dc = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
            return np.polynomial.polynomial.polyval(r, dc)
        return self.v_prime_callable(r)

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs is not None else None


@dataclass
class GaugeState:
    """Second-order-form state (A_mu, dt A_mu, phi, dt phi) at one time.

    `a` and `a_t` are the three lower-index components (mu = 0, 1, 2) of the
    real gauge potential and its time derivative; phi and phi_t are complex.
    """

    a: list
    a_t: list
    phi: ScalarField
    phi_t: ScalarField
    time: float = 0.0

    def __post_init__(self):
        grids = {f.grid for f in (*self.a, *self.a_t, self.phi, self.phi_t)}
        if len(grids) != 1:
            raise ValueError("all component grids must be identical")

    @property
    def grid(self):
        return self.phi.grid


def raise_index(components):
    """Lower -> upper index with diag(1,-1,-1): X^0 = X_0, X^j = -X_j."""
    x0, x1, x2 = components
    return [x0, -1.0 * x1, -1.0 * x2]


lower_index = raise_index  # the metric map is an involution


def zero_state(grid, time=0.0):
    z = lambda: zero_field(grid, is_real=True)
    return GaugeState([z(), z(), z()], [z(), z(), z()],
                      zero_field(grid, is_real=False),
                      zero_field(grid, is_real=False), time)


def covariant_derivative(state, mu):
    """D_mu phi = (d_mu - i A_mu) phi, with d_0 phi taken from phi_t."""
    if mu == 0:
        dphi = state.phi_t.physical()
    else:
        dphi = partial_x(state.phi, mu).physical()
    vals = dphi - 1j * state.a[mu].physical() * state.phi.physical()
    out = field_from_physical(state.grid, vals, is_real=False)
    check_finite(out)
    return out


@dataclass
class CurrentVector:
    """Lower-index matter current J_mu = 2 Im(conj(phi) D_mu phi)."""
    j: list


def current(state):
    phib = np.conj(state.phi.physical())
    comps = []
    for mu in range(3):
        d = covariant_derivative(state, mu).physical()
        vals = 2.0 * np.imag(phib * d)
        comps.append(field_from_physical(state.grid, vals, is_real=True))
    return CurrentVector(comps)


def curvature(state):
    """(F_01, F_02, F_12) with F_0j = dt A_j - d_j A_0, F_12 = d1 A_2 - d2 A_1."""
    a0, a1, a2 = state.a
    f01 = state.a_t[1] - partial_x(a0, 1)
    f02 = state.a_t[2] - partial_x(a0, 2)
    f12 = partial_x(a2, 1) - partial_x(a1, 2)
    for f in (f01, f02, f12):
        check_finite(f)
    return [f01.real_part(), f02.real_part(), f12.real_part()]


def _mean_zero(f):
    spec = f.spectrum().copy()
    spec[0, 0] = 0.0
    g = field_from_spectral(f.grid, spec, f.is_real)
    return g.in_physical() if f.representation == spectral.PHYSICAL else g


def total_charge(state):
    """Torus integral of J_0 (need not vanish; logged separately)."""
    j0 = current(state).j[0]
    return float(np.real(j0.spectrum()[0, 0]) * state.grid.length**2)


def build_compatible_data(phi0, phi_t0, v=None, strict=False):
    """Initial data satisfying the curl constraint and the Lorenz gauge slice.

    Sets A_0(0) = 0 and builds the unique mean-zero, divergence-free A_j(0)
    whose curl matches the mean-zero part of J_0(0); the time derivatives
    of the potential follow from the constraints

        dt A_0(0) = d1 A_1(0) + d2 A_2(0),
        dt A_j(0) = d_j A_0(0) + eps_{jk} J^k(0).
    """
    if phi0.grid != phi_t0.grid:
        raise ValueError("phi0 and phi_t0 live on different grids")
    grid = phi0.grid
    del v  # the potential does not enter the data construction

    # J_0(0) with A_0(0) = 0: D_0 phi = phi_t
    j0_vals = 2.0 * np.imag(np.conj(phi0.physical()) * phi_t0.physical())
    j0 = field_from_physical(grid, j0_vals, is_real=True)
    j0_spec = j0.spectrum()
    if strict:
        total = np.sqrt(np.sum(np.abs(j0_spec) ** 2))
        if total > 0 and np.abs(j0_spec[0, 0]) > spectral.ZERO_MODE_TOL * total:
            raise SingularZeroMode("mean of J_0 exceeds strict tolerance")

    # A_j(0) = -(-Delta)^{-1/2} eps_{jk} R^k J_0 with homogeneous Riesz
    # R_k = (-Delta)^{-1/2} d_k; spelled out, A1 = (-Delta)^{-1} d2 J_0 and
    # A2 = -(-Delta)^{-1} d1 J_0 on the mean-zero part.
    inv_lap = FracLapHom(-2.0)
    a1 = apply_multiplier(partial_x(j0, 2), inv_lap).real_part()
    a2 = (-1.0) * apply_multiplier(partial_x(j0, 1), inv_lap).real_part()
    a0 = zero_field(grid, is_real=True)

    st = GaugeState([a0, a1, a2],
                    [zero_field(grid, True), zero_field(grid, True), zero_field(grid, True)],
                    phi0, phi_t0, 0.0)
    cur = current(st)
    jk_up = raise_index(cur.j)

    at0 = (partial_x(a1, 1) + partial_x(a2, 2)).real_part()
    # eps_{1k} J^k = J^2, eps_{2k} J^k = -J^1
    at1 = (partial_x(a0, 1) + jk_up[2]).real_part()
    at2 = (partial_x(a0, 2) - 1.0 * jk_up[1]).real_part()
    return GaugeState([a0, a1, a2], [at0, at1, at2], phi0, phi_t0, 0.0)


def _rel_l2(residual, scale):
    return residual.l2() / max(1.0, scale)


def constraint_residuals(state):
    """Normalized residuals of the curl constraint and the Lorenz condition.

    gauss compares d1 A_2 - d2 A_1 with the mean-zero part of J_0 (see the
    module note on the torus charge); lorenz is dt A_0 - d1 A_1 - d2 A_2.
    """
    cur = current(state)
    j0 = cur.j[0]
    curl = partial_x(state.a[2], 1) - partial_x(state.a[1], 2)
    gauss = _rel_l2(curl - _mean_zero(j0), j0.l2())
    div = partial_x(state.a[1], 1) + partial_x(state.a[2], 2)
    lorenz = _rel_l2(state.a_t[0] - div, div.l2())
    return {"gauss": gauss, "lorenz": lorenz}


# ---------------------------------------------------------------------------
# State snapshots: 8 CSHF field files plus a JSON sidecar
# ---------------------------------------------------------------------------

_COMPONENTS = ("a0", "a1", "a2", "at0", "at1", "at2", "phi", "phit")


def write_state(prefix, state, potential=None):
    fields = [*state.a, *state.a_t, state.phi, state.phi_t]
    for name, f in zip(_COMPONENTS, fields):
        write_field(f"{prefix}_{name}.cshf", f)
    meta = {"time": state.time,
            "grid": {"n": state.grid.n, "L": state.grid.length}}
    if potential is not None and potential.coeffs is not None:
        meta["potential"] = {"coeffs": list(potential.coeffs), "alpha": potential.alpha}
    with open(f"{prefix}_meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)


def read_state(prefix):
    fields = [read_field(f"{prefix}_{name}.cshf") for name in _COMPONENTS]
    with open(f"{prefix}_meta.json") as fh:
        meta = json.load(fh)
    st = GaugeState(fields[0:3], fields[3:6], fields[6], fields[7], meta["time"])
    pot = None
    if "potential" in meta:
        pot = Potential(coeffs=meta["potential"]["coeffs"],
                        alpha=meta["potential"].get("alpha", 0.0))
    return st, pot
