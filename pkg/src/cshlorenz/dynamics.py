"""Evolution engine: half-wave splitting, null-form decomposition of the
right-hand sides, exponential time integration, and constraint monitors.

The second-order system is evolved in first-order half-wave form. With
W = <nabla> for every component in the inhomogeneous formulation (and
W = |nabla| for the potential in the homogeneous-gauge variant),

    u_pm = (u -/+ i W^{-1} dt u) / 2,      u = u_+ + u_-,
    dt u = i W (u_+ - u_-),
    (i dt +/- W) u_pm = +/- (1/2) W^{-1} F,

so the free flow of the +/- component is the exact phase exp(+/- i W t).

The time stepper is a Lawson-type exponential integrator: the stiff linear
phase is applied exactly and classical RK4 acts on the rotated nonlinearity.

Homogeneous-gauge zero modes are legislated: |nabla|^{-1} maps the zero
mode to 0, the mean of A_mu rides on the + component and stays frozen.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import NonFiniteField, StepUnstable
from . import spectral
from .spectral import (
    ScalarField, field_from_physical, field_from_spectral, partial_x,
    guard_zero_mode, check_finite,
)
from .state import GaugeState, Potential, current, raise_index
from .diagnostics import MonitorSeries, energy, i_of_t, charge_l2, kinetic_l2_sq

INHOM = "inhom"
HOMGAUGE = "homgauge"


@dataclass
class SplitState:
    """First-order half-wave state (A_{mu,+/-}, phi_{+/-})."""

    a_plus: list
    a_minus: list
    phi_plus: ScalarField
    phi_minus: ScalarField
    mode: str = INHOM
    time: float = 0.0

    @property
    def grid(self):
        return self.phi_plus.grid


class _Workspace:
    """Grid- and mode-dependent spectral arrays shared by the RHS and stepper."""

    def __init__(self, grid, mode):
        if mode not in (INHOM, HOMGAUGE):
            raise ValueError(f"unknown mode {mode!r}")
        self.grid = grid
        self.mode = mode
        self.k1, self.k2 = grid.k
        self.kang = grid.k_ang
        self.mask = grid.dealias_mask
        if mode == INHOM:
            self.w_a = self.kang
            self.inv_w_a = 1.0 / self.kang
            denom = self.kang
        else:
            ka = grid.k_abs
            self.w_a = ka
            with np.errstate(divide="ignore"):
                self.inv_w_a = np.where(ka > 0, 1.0 / np.where(ka > 0, ka, 1.0), 0.0)
            denom = np.where(ka > 0, ka, np.inf)
        self.w_phi = self.kang
        self.inv_w_phi = 1.0 / self.kang
        # mode-appropriate Riesz symbols i k_j / W
        self.rz1 = 1j * self.k1 / denom
        self.rz2 = 1j * self.k2 / denom
        self.smooth = 1.0 / self.kang**2  # (1-Delta)^{-1}
        self._phase_cache = {}

    def omega(self):
        """Linear frequencies of the packed components [A+, A-, phi+, phi-]."""
        om = np.empty((8,) + self.w_a.shape)
        om[0:3] = self.w_a
        om[3:6] = -self.w_a
        om[6] = self.w_phi
        om[7] = -self.w_phi
        return om

    def phases(self, dt):
        key = float(dt)
        if key not in self._phase_cache:
            om = self.omega()
            self._phase_cache[key] = (np.exp(1j * om * dt), np.exp(1j * om * dt / 2))
        return self._phase_cache[key]


_WORKSPACES = {}


def _workspace(grid, mode):
    key = (grid.n, grid.length, mode)
    if key not in _WORKSPACES:
        _WORKSPACES[key] = _Workspace(grid, mode)
    return _WORKSPACES[key]


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split(st, mode=INHOM, strict=False):
    """Transform a second-order state into half-wave variables."""
    ws = _workspace(st.grid, mode)
    a_plus, a_minus = [], []
    for mu in range(3):
        a = st.a[mu].spectrum()
        at = st.a_t[mu].spectrum()
        if mode == HOMGAUGE:
            guard_zero_mode(at, strict)
        half = 0.5j * ws.inv_w_a * at
        ap = 0.5 * a - half
        am = 0.5 * a + half
        if mode == HOMGAUGE:
            ap[0, 0] = a[0, 0]  # mean of A_mu carried by the + component
            am[0, 0] = 0.0
        a_plus.append(field_from_spectral(st.grid, ap))
        a_minus.append(field_from_spectral(st.grid, am))
    ph = st.phi.spectrum()
    pht = st.phi_t.spectrum()
    half = 0.5j * pht / ws.kang
    php = field_from_spectral(st.grid, 0.5 * ph - half)
    phm = field_from_spectral(st.grid, 0.5 * ph + half)
    return SplitState(a_plus, a_minus, php, phm, mode, st.time)


def unsplit(s):
    """Reconstruct the second-order state; A components take their real part."""
    ws = _workspace(s.grid, s.mode)
    a, a_t = [], []
    for mu in range(3):
        ap = s.a_plus[mu].spectrum()
        am = s.a_minus[mu].spectrum()
        a_spec = ap + am
        at_spec = 1j * ws.w_a * (ap - am)
        a.append(field_from_spectral(s.grid, a_spec).real_part())
        a_t.append(field_from_spectral(s.grid, at_spec).real_part())
    php = s.phi_plus.spectrum()
    phm = s.phi_minus.spectrum()
    phi = field_from_spectral(s.grid, php + phm).in_physical()
    phi_t = field_from_spectral(s.grid, 1j * ws.kang * (php - phm)).in_physical()
    return GaugeState(a, a_t, phi, phi_t, s.time)


def reconstruction_reality_error(s):
    """Max relative imaginary contamination of the reconstructed A_mu, dt A_mu."""
    ws = _workspace(s.grid, s.mode)
    worst = 0.0
    for mu in range(3):
        ap = s.a_plus[mu].spectrum()
        am = s.a_minus[mu].spectrum()
        for spec in (ap + am, 1j * ws.w_a * (ap - am)):
            vals = np.fft.ifft2(spec) * s.grid.n**2
            scale = np.sqrt(np.sum(np.abs(vals) ** 2))
            if scale > 0:
                worst = max(worst, np.sqrt(np.sum(vals.imag**2)) / scale)
    return worst


# ---------------------------------------------------------------------------
# Null forms and decompositions
# ---------------------------------------------------------------------------

def null_form_q(u, v, alpha, beta, u_t=None, v_t=None, do_dealias=True):
    """Standard null form Q_ab(du, dv) = d_a u d_b v - d_b u d_a v.

    Index 0 uses the supplied time-derivative partners.
    """
    def deriv(f, f_t, idx):
        if idx == 0:
            if f_t is None:
                raise ValueError("index 0 requires the time-derivative partner")
            return f_t.physical()
        return partial_x(f, idx).physical()

    da_u = deriv(u, u_t, alpha)
    db_u = deriv(u, u_t, beta)
    da_v = deriv(v, v_t, alpha)
    db_v = deriv(v, v_t, beta)
    out = field_from_physical(u.grid, da_u * db_v - db_u * da_v, is_real=False)
    check_finite(out)
    if do_dealias:
        out = spectral.dealias(out)
    return out


def divcurl_decompose(a1, a2, mode=INHOM, strict=False):
    """Divergence-free / curl-free split of the spatial potential.

    Inhomogeneous: A = A_df + A_cf + (1-Delta)^{-1} A with the bounded
    Riesz transforms; homogeneous-gauge: A = A_df + A_cf with the
    homogeneous ones, acting on the mean-zero part (strict mode rejects
    nonzero means).
    """
    ws = _workspace(a1.grid, mode)
    s1, s2 = a1.spectrum(), a2.spectrum()
    if mode == HOMGAUGE:
        guard_zero_mode(s1, strict)
        guard_zero_mode(s2, strict)
    r1, r2 = ws.rz1, ws.rz2
    psi = r1 * s2 - r2 * s1
    df = (r2 * psi, -r1 * psi)
    trace = r1 * s1 + r2 * s2
    cf = (-r1 * trace, -r2 * trace)
    mk = lambda spec: field_from_spectral(a1.grid, spec, a1.is_real and a2.is_real).in_physical()
    out = {"df": (mk(df[0]), mk(df[1])), "cf": (mk(cf[0]), mk(cf[1]))}
    if mode == INHOM:
        out["smooth"] = (mk(ws.smooth * s1), mk(ws.smooth * s2))
    else:
        out["smooth"] = None
    return out


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def _pack(s):
    comps = [*s.a_plus, *s.a_minus, s.phi_plus, s.phi_minus]
    return np.stack([c.spectrum() for c in comps])


def _unpack(u, grid, mode, time):
    mk = lambda spec: field_from_spectral(grid, spec.copy())
    return SplitState([mk(u[0]), mk(u[1]), mk(u[2])],
                      [mk(u[3]), mk(u[4]), mk(u[5])],
                      mk(u[6]), mk(u[7]), mode, time)


def _rhs_core(u, ws, v):
    """Assemble the spectral nonlinearities (Mhat[3], Nhat) of the split system."""
    n2 = ws.grid.n**2
    ap, am = u[0:3], u[3:6]
    a_spec = ap + am
    at_spec = 1j * ws.w_a * (ap - am)
    ph_spec = u[6] + u[7]
    pht_spec = 1j * ws.kang * (u[6] - u[7])
    d_spec = u[0] - u[3]  # A_{0,+} - A_{0,-}
    psi = ws.rz1 * a_spec[2] - ws.rz2 * a_spec[1]

    batch = [a_spec[0], a_spec[1], a_spec[2], at_spec[1], at_spec[2],
             ph_spec, pht_spec, 1j * ws.k1 * ph_spec, 1j * ws.k2 * ph_spec,
             ws.rz1 * d_spec, ws.rz2 * d_spec, ws.rz2 * psi, ws.rz1 * psi]
    if ws.mode == INHOM:
        batch += [ws.smooth * a_spec[1], ws.smooth * a_spec[2]]
    phys = np.fft.ifft2(np.stack(batch)) * n2
    a0, a1, a2, at1, at2, ph, pht, d1ph, d2ph, r1d, r2d, p2a, p1a = phys[:13]
    a0, a1, a2, at1, at2 = a0.real, a1.real, a2.real, at1.real, at2.real

    absphi2 = ph.real**2 + ph.imag**2
    pf = 2.0 * (ph.real * pht.real + ph.imag * pht.imag)  # dt |phi|^2
    g0 = a0 * absphi2
    g1 = a1 * absphi2
    g2 = a2 * absphi2
    tdg1 = at1 * absphi2 + a1 * pf
    tdg2 = at2 * absphi2 + a2 * pf
    imq12 = 2.0 * np.imag(np.conj(d1ph) * d2ph)
    imq02 = 2.0 * np.imag(np.conj(pht) * d2ph)
    imq01 = 2.0 * np.imag(np.conj(pht) * d1ph)

    # B1 from the split components of A_0 (the four-sign null structure),
    # B2 from the divergence-free stream function, B3 the smooth remainder
    b1 = a0 * pht + 1j * (r1d * d1ph + r2d * d2ph)
    b2 = p2a * d1ph - p1a * d2ph
    if ws.mode == INHOM:
        sm1, sm2 = phys[13], phys[14]
        b3 = sm1 * d1ph + sm2 * d2ph
    else:
        b3 = 0.0
    amu2 = a0**2 - a1**2 - a2**2
    nphys = 2j * (b1 - b2 - b3) + amu2 * ph - ph * v.v_prime(absphi2)

    fwd = np.fft.fft2(np.stack([
        -2.0 * imq12,
        -2.0 * imq02 + 2.0 * tdg2,
        2.0 * imq01 - 2.0 * tdg1,
        g0, g1, g2, nphys])) / n2

    mhat = np.empty_like(a_spec)
    mhat[0] = fwd[0] + 2j * (ws.k1 * fwd[5] - ws.k2 * fwd[4])
    mhat[1] = fwd[1] - 2j * ws.k2 * fwd[3]
    mhat[2] = fwd[2] + 2j * ws.k1 * fwd[3]
    nhat = fwd[6] + ph_spec
    if ws.mode == INHOM:
        mhat += a_spec
    mhat *= ws.mask
    nhat = nhat * ws.mask
    return mhat, nhat


def _nonlinear(u, ws, v):
    """Packed nonlinearity N with (i dt -/+ W) u_pm = -/+ (1/2) W^{-1} (...)."""
    mhat, nhat = _rhs_core(u, ws, v)
    out = np.empty_like(u)
    scaled_m = 0.5j * ws.inv_w_a * mhat
    scaled_n = 0.5j * ws.inv_w_phi * nhat
    out[0:3] = -scaled_m
    out[3:6] = scaled_m
    out[6] = -scaled_n
    out[7] = scaled_n
    return out


def rhs(s, v):
    """The nonlinearities (M_mu, N) of the split system, dealiased."""
    ws = _workspace(s.grid, s.mode)
    u = _pack(s)
    if not np.all(np.isfinite(u)):
        raise NonFiniteField("split state contains non-finite coefficients")
    mhat, nhat = _rhs_core(u, ws, v)
    m = [field_from_spectral(s.grid, mhat[mu]).in_physical() for mu in range(3)]
    n = field_from_spectral(s.grid, nhat).in_physical()
    return {"m": m, "n": n}


def bilinear_terms(s, do_dealias=True):
    """The three pieces B1, B2, B3 of the decomposition of A_mu d^mu phi.

    B1 - B2 - B3 = A_mu d^mu phi whenever the state satisfies the Lorenz
    condition (B3 is absent in homogeneous-gauge mode).
    """
    ws = _workspace(s.grid, s.mode)
    u = _pack(s)
    n2 = s.grid.n**2
    a_spec = u[0:3] + u[3:6]
    ph_spec = u[6] + u[7]
    pht_spec = 1j * ws.kang * (u[6] - u[7])
    d_spec = u[0] - u[3]
    psi = ws.rz1 * a_spec[2] - ws.rz2 * a_spec[1]
    batch = [a_spec[0], ph_spec, pht_spec, 1j * ws.k1 * ph_spec, 1j * ws.k2 * ph_spec,
             ws.rz1 * d_spec, ws.rz2 * d_spec, ws.rz2 * psi, ws.rz1 * psi,
             ws.smooth * a_spec[1], ws.smooth * a_spec[2]]
    phys = np.fft.ifft2(np.stack(batch)) * n2
    a0, ph, pht, d1ph, d2ph, r1d, r2d, p2a, p1a, sm1, sm2 = phys
    b1 = a0.real * pht + 1j * (r1d * d1ph + r2d * d2ph)
    b2 = p2a * d1ph - p1a * d2ph
    if s.mode == INHOM:
        b3 = sm1 * d1ph + sm2 * d2ph
    else:
        b3 = np.zeros_like(b1)
    mk = lambda vals: field_from_physical(s.grid, vals, is_real=False)
    out = {"b1": mk(b1), "b2": mk(b2), "b3": mk(b3)}
    if do_dealias:
        out = {k: spectral.dealias(f) for k, f in out.items()}
    return out


# ---------------------------------------------------------------------------
# Time integration
# ---------------------------------------------------------------------------

def _lawson_step(u, dt, ws, v):
    """One step of exponential RK4 (exact linear phase, RK4 on the rest)."""
    e_full, e_half = ws.phases(dt)
    k1 = _nonlinear(u, ws, v)
    k2 = _nonlinear(e_half * (u + (0.5 * dt) * k1), ws, v)
    k3 = _nonlinear(e_half * u + (0.5 * dt) * k2, ws, v)
    k4 = _nonlinear(e_full * u + dt * (e_half * k3), ws, v)
    return e_full * u + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def step(s, dt, v):
    """Advance a split state by one time step."""
    ws = _workspace(s.grid, s.mode)
    u = _pack(s)
    before = _component_norms(u)
    out = _lawson_step(u, dt, ws, v)
    _check_stability(before, out, s.time + dt)
    return _unpack(out, s.grid, s.mode, s.time + dt)


def _component_norms(u):
    return np.sqrt(np.sum(np.abs(u) ** 2, axis=(1, 2)))


def _check_stability(before, u_after, time):
    after = _component_norms(u_after)
    if not np.all(np.isfinite(after)):
        raise StepUnstable(time, f"non-finite state at t={time:g}")
    scale = max(np.max(before), 1e-30)
    # a component counts as blowing up only once it is non-negligible
    # relative to the state (freshly excited components start from 0)
    grew = after > 10.0 * np.maximum(before, 1e-3 * scale)
    if np.any(grew) or np.sum(after) > 10.0 * np.sum(before) + 1e-30:
        raise StepUnstable(time)


def _dt_heuristic(state, dt):
    a_inf = max(np.max(np.abs(f.physical().real)) for f in state.a)
    p_inf = np.max(np.abs(state.phi.physical()))
    bound = 0.5 * min(1.0, 1.0 / max(a_inf, 1e-30), 1.0 / max(p_inf**2, 1e-30))
    if abs(dt) > bound:
        warnings.warn(f"dt={dt:g} exceeds the stability heuristic {bound:g}",
                      RuntimeWarning, stacklevel=3)


@dataclass
class Trajectory:
    """Uniformly sampled states plus monitor series from one evolution run."""

    times: list
    states: list
    series: MonitorSeries
    reality_errors: list
    mode: str
    dt: float
    record_every: int

    def phi_values(self):
        """Complex phi samples stacked as a (time, n, n) array."""
        return np.stack([st.phi.physical() for st in self.states])

    @property
    def sample_dt(self):
        return self.dt * self.record_every

    def final_state(self):
        return self.states[-1]


def constraint_monitors(st):
    """Normalized L^2 norms of the four constraint residual fields.

    v_j = dt A_j - d_j A_0 - eps_{jk} J^k, w = d1 A_2 - d2 A_1 - J_0
    (mean-zero part), u = dt A_0 - d1 A_1 - d2 A_2.
    """
    cur = current(st)
    jk_up = raise_index(cur.j)
    v1f = st.a_t[1] - partial_x(st.a[0], 1) - jk_up[2]
    v2f = st.a_t[2] - partial_x(st.a[0], 2) + 1.0 * jk_up[1]
    curl = partial_x(st.a[2], 1) - partial_x(st.a[1], 2)
    j0 = cur.j[0]
    j0_spec = j0.spectrum().copy()
    j0_spec[0, 0] = 0.0
    wf = curl - field_from_spectral(st.grid, j0_spec, True).in_physical()
    div = partial_x(st.a[1], 1) + partial_x(st.a[2], 2)
    uf = st.a_t[0] - div
    return {
        "v1": v1f.l2() / max(1.0, jk_up[2].l2()),
        "v2": v2f.l2() / max(1.0, jk_up[1].l2()),
        "w": wf.l2() / max(1.0, j0.l2()),
        "u": uf.l2() / max(1.0, div.l2()),
    }


def _record(series, st, v):
    mon = constraint_monitors(st)
    series.append(
        time=st.time,
        energy=energy(st, v),
        charge_l2=charge_l2(st),
        i_t=i_of_t(st),
        gauss=mon["w"],
        lorenz=mon["u"],
        v1=mon["v1"], v2=mon["v2"], w=mon["w"],
        kinetic_sq=kinetic_l2_sq(st),
    )
    return mon


def evolve(state0, T, dt, v, mode=INHOM, record_every=1, check_data=True):
    """Integrate the split system for a duration T with fixed step dt.

    Records the unsplit state and its monitors every `record_every` steps
    (including t=0 and the final time). Negative (T, dt) integrate backward.
    """
    if dt == 0 or T == 0:
        raise ValueError("T and dt must be nonzero")
    n_steps = int(round(T / dt))
    if n_steps <= 0 or abs(n_steps * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("T must be an integer multiple of dt")
    if check_data:
        from .state import constraint_residuals
        res = constraint_residuals(state0)
        if max(res.values()) > 1e-8:
            warnings.warn(f"initial constraint residuals {res} exceed 1e-8",
                          RuntimeWarning, stacklevel=2)
    _dt_heuristic(state0, dt)

    ws = _workspace(state0.grid, mode)
    s0 = split(state0, mode)
    u = _pack(s0)
    t0 = state0.time

    series = MonitorSeries()
    times, states, reality = [], [], []

    def record(u_now, t_now):
        s_now = _unpack(u_now, state0.grid, mode, t_now)
        st = unsplit(s_now)
        _record(series, st, v)
        times.append(t_now)
        states.append(st)
        reality.append(reconstruction_reality_error(s_now))

    record(u, t0)
    for i in range(1, n_steps + 1):
        before = _component_norms(u)
        u = _lawson_step(u, dt, ws, v)
        t = t0 + i * dt
        _check_stability(before, u, t)
        if i % record_every == 0 or i == n_steps:
            record(u, t)
    return Trajectory(times, states, series, reality, mode, dt, record_every)
