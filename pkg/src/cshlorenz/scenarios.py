"""Initial-data scenarios for the simulator.

All localized profiles are periodized by summing the nearest lattice images,
so the data are analytically periodic and effectively band-limited on the
grids used here.
"""

import numpy as np

from .errors import ConfigError
from .spectral import field_from_physical, read_field, zero_field
from .norms import sobolev_norm


def _periodized(grid, profile, images=1):
    """Sum profile(x1 - p L, x2 - q L) over image shifts p, q."""
    x1, x2 = grid.x
    L = grid.length
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for p in range(-images, images + 1):
        for q in range(-images, images + 1):
            out += profile(x1 - p * L, x2 - q * L)
    return out


def gaussian_data(grid, a=0.5, sigma=None, center=None, phase_modes=(1, 1),
                  h1_norm=None):
    """Gaussian bump with a linear phase; phi_t0 = i phi0.

    phi0 = a exp(-|x-x0|^2 / sigma^2) exp(i k.x) with k on the mode lattice.
    If h1_norm is given, the amplitude is rescaled so ||phi0||_{H^1} matches.
    """
    L = grid.length
    sigma = L / 8.0 if sigma is None else sigma
    cx, cy = (L / 2.0, L / 2.0) if center is None else center
    k = (2.0 * np.pi / L) * np.asarray(phase_modes, dtype=float)

    def profile(u1, u2):
        return np.exp(-((u1 - cx) ** 2 + (u2 - cy) ** 2) / sigma**2)

    bump = _periodized(grid, profile)
    x1, x2 = grid.x
    vals = a * bump * np.exp(1j * (k[0] * x1 + k[1] * x2))
    phi0 = field_from_physical(grid, vals, is_real=False)
    if h1_norm is not None:
        cur = sobolev_norm(phi0, 1.0)
        if cur > 0:
            phi0 = (h1_norm / cur) * phi0
    phi_t0 = 1j * phi0
    return phi0, phi_t0


def winding_data(grid, a=0.5, sigma=None, center=None, winding=1, h1_norm=None):
    """Smooth vortex-like bump: a ((x1-c1) + i(x2-c2))^w exp(-rho^2/sigma^2)/sigma^w."""
    L = grid.length
    sigma = L / 8.0 if sigma is None else sigma
    cx, cy = (L / 2.0, L / 2.0) if center is None else center
    w = int(winding)

    def profile(u1, u2):
        z = (u1 - cx) + 1j * (u2 - cy)
        return (z / sigma) ** w * np.exp(-np.abs(z) ** 2 / sigma**2)

    vals = a * _periodized(grid, profile)
    phi0 = field_from_physical(grid, vals, is_real=False)
    if h1_norm is not None:
        cur = sobolev_norm(phi0, 1.0)
        if cur > 0:
            phi0 = (h1_norm / cur) * phi0
    return phi0, 1j * phi0


def plane_wave_data(grid, a=0.1, modes=(1, 0)):
    """Single Fourier mode phi0 = a exp(i k.x), phi_t0 = i phi0."""
    k = (2.0 * np.pi / grid.length) * np.asarray(modes, dtype=float)
    x1, x2 = grid.x
    vals = a * np.exp(1j * (k[0] * x1 + k[1] * x2))
    phi0 = field_from_physical(grid, vals, is_real=False)
    return phi0, 1j * phi0


def build_scenario(grid, kind, params=None):
    """Dispatch on the scenario kind; returns (phi0, phi_t0)."""
    params = dict(params or {})
    if kind == "zero":
        return zero_field(grid, is_real=False), zero_field(grid, is_real=False)
    if kind == "gaussian":
        return gaussian_data(grid, **params)
    if kind == "winding":
        return winding_data(grid, **params)
    if kind == "plane_wave":
        return plane_wave_data(grid, **params)
    if kind == "file":
        try:
            phi0 = read_field(params["phi0"])
            phi_t0 = read_field(params["phi_t0"])
        except KeyError as exc:
            raise ConfigError("scenario", f"file scenario needs {exc} path")
        if phi0.grid != grid or phi_t0.grid != grid:
            raise ConfigError("scenario", "file fields do not match grid")
        return phi0, phi_t0
    raise ConfigError("scenario.kind", f"unknown scenario {kind!r}")
