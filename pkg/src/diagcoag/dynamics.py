"""Direct simulation of the time-dependent coagulation equation.

The diagonal kernel moves mass strictly upward in size (two xi-clusters
merge into one 2*xi-cluster), so on a geometric grid whose ratio is an exact
power of two the gain term at node k reads the state exactly m_d nodes back:

    df_k/dt = (1/4) xi_{k-m_d}**(1+gamma) f_{k-m_d}**2 - xi_k**(1+gamma) f_k**2,

with f = 0 below the grid (no influx from under the domain).  Explicit
4-stage Runge-Kutta advances the system; steps that would produce negative
densities are rejected and retried at half the step.  The escaped-mass
budget is accumulated with the same Runge-Kutta stages, which makes the
discrete mass balance exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, StepCollapseError, WindowError
from .params import KernelParams
from .profile import Profile

_LN2 = math.log(2.0)

DEFAULT_NODES_PER_OCTAVE = 16
DEFAULT_OCTAVES = 40
DEFAULT_ETA = 0.1


@dataclass(frozen=True)
class NumberDensityField:
    """Number density f(xi, t) on a geometric size grid.

    ``escaped_mass`` accumulates the mass flux that left through the
    truncated upper boundary since the field was created.
    """

    kernel: KernelParams
    xi_min: float
    nodes_per_octave: int
    f_values: np.ndarray
    t: float
    escaped_mass: float = 0.0

    @property
    def xi_grid(self) -> np.ndarray:
        k = np.arange(len(self.f_values))
        # exp2 keeps xi_{k-m_d} == xi_k / 2 exact in floating point
        return self.xi_min * np.exp2(k / self.nodes_per_octave)

    @property
    def dlog(self) -> float:
        return _LN2 / self.nodes_per_octave


def make_field(
    kernel: KernelParams,
    f_values: np.ndarray,
    xi_min: float = 2.0**-20,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    t: float = 1.0,
) -> NumberDensityField:
    f = np.asarray(f_values, dtype=float)
    if np.any(f < 0.0):
        raise DomainError("number density must be nonnegative")
    return NumberDensityField(
        kernel=kernel,
        xi_min=xi_min,
        nodes_per_octave=nodes_per_octave,
        f_values=f,
        t=t,
    )


def field_from_profile(
    profile: Profile,
    xi_min: float = 2.0**-20,
    octaves: int = DEFAULT_OCTAVES,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    t: float = 1.0,
) -> NumberDensityField:
    """Initial data f(xi, t) = g(xi) sampled from a profile."""
    field = make_field(
        profile.params.kernel,
        np.zeros(octaves * nodes_per_octave + 1),
        xi_min,
        nodes_per_octave,
        t,
    )
    xi = field.xi_grid
    if xi[0] < profile.x_min or xi[-1] > profile.x_max:
        raise DomainError("profile does not cover the requested size grid")
    return replace(field, f_values=np.asarray(profile.g_at(xi), dtype=float))


def power_law_field(
    kernel: KernelParams,
    amplitude: float,
    exponent: float,
    xi_min: float = 2.0**-20,
    octaves: int = DEFAULT_OCTAVES,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    t: float = 1.0,
) -> NumberDensityField:
    """f = amplitude * xi**(-exponent); exponent (3+gamma)/2 is stationary."""
    field = make_field(
        kernel, np.zeros(octaves * nodes_per_octave + 1), xi_min, nodes_per_octave, t
    )
    return replace(field, f_values=amplitude * field.xi_grid ** (-exponent))


def pulse_field(
    kernel: KernelParams,
    node: int,
    amplitude: float = 1.0,
    xi_min: float = 2.0**-20,
    octaves: int = DEFAULT_OCTAVES,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    t: float = 1.0,
) -> NumberDensityField:
    """Single occupied node (monomer-like pulse)."""
    f = np.zeros(octaves * nodes_per_octave + 1)
    f[node] = amplitude
    return make_field(kernel, f, xi_min, nodes_per_octave, t)


def coag_rhs(field: NumberDensityField) -> np.ndarray:
    """df/dt per node; indices below the grid contribute nothing."""
    m = field.nodes_per_octave
    xi = field.xi_grid
    f = field.f_values
    loss_density = xi ** (1.0 + field.kernel.gamma) * f * f
    rate = -loss_density.copy()
    # gain at node k: (1/4) (xi_k/2)**(1+gamma) f_{k-m}^2, and xi_k/2 == xi_{k-m}
    rate[m:] += 0.25 * loss_density[:-m]
    return rate


def _boundary_flux(field: NumberDensityField) -> float:
    """Mass per unit time leaving through the truncated upper boundary.

    Loss at the top m_d nodes has its gain above the grid; with uniform
    log weights this is the exact compensator of the discrete mass moment.
    """
    m = field.nodes_per_octave
    xi = field.xi_grid
    f = field.f_values
    w = xi * field.dlog
    return float(np.sum(w[-m:] * xi[-m:] ** (2.0 + field.kernel.gamma) * f[-m:] ** 2))


def moments(field: NumberDensityField) -> tuple[float, float, float]:
    """(number N, mass M, boundary loss flux); trapezoid in log xi."""
    xi = field.xi_grid
    f = field.f_values
    w = xi * field.dlog
    w_trap = w.copy()
    w_trap[0] *= 0.5
    w_trap[-1] *= 0.5
    n = float(np.sum(w_trap * f))
    mass = float(np.sum(w_trap * xi * f))
    return n, mass, _boundary_flux(field)


def step(field: NumberDensityField, dt: float, max_halvings: int = 20) -> NumberDensityField:
    """One Runge-Kutta step; halves dt on negativity, at most max_halvings.

    Advances by the accepted dt (possibly smaller than requested) and
    accumulates the escaped-mass budget from the same stages.
    """
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    f0 = field.f_values
    for _ in range(max_halvings + 1):
        k1 = coag_rhs(field)
        s1 = replace(field, f_values=f0 + 0.5 * dt * k1)
        k2 = coag_rhs(s1)
        s2 = replace(field, f_values=f0 + 0.5 * dt * k2)
        k3 = coag_rhs(s2)
        s3 = replace(field, f_values=f0 + dt * k3)
        k4 = coag_rhs(s3)
        f_new = f0 + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if np.all(f_new >= 0.0) and np.all(np.isfinite(f_new)):
            escaped = (dt / 6.0) * (
                _boundary_flux(field)
                + 2.0 * (_boundary_flux(s1) + _boundary_flux(s2))
                + _boundary_flux(s3)
            )
            return replace(
                field,
                f_values=f_new,
                t=field.t + dt,
                escaped_mass=field.escaped_mass + escaped,
            )
        dt *= 0.5
    raise StepCollapseError(
        f"time step collapsed after {max_halvings} halvings at t = {field.t:g}"
    )


def stable_dt(field: NumberDensityField, eta: float = DEFAULT_ETA) -> float:
    """dt <= eta / max(xi**(1+gamma) f): the loss term's stiffness scale."""
    xi = field.xi_grid
    scale = float(np.max(xi ** (1.0 + field.kernel.gamma) * field.f_values))
    if scale == 0.0:
        return math.inf
    return eta / scale


def advance_to(
    field: NumberDensityField, t_target: float, eta: float = DEFAULT_ETA
) -> NumberDensityField:
    """March the field to t_target with the adaptive step bound."""
    while field.t < t_target * (1.0 - 1e-15):
        dt = min(stable_dt(field, eta), t_target - field.t)
        field = step(field, dt)
    return field


def self_similar_distance(
    field: NumberDensityField,
    profile: Profile,
    beta: float,
    window: tuple[float, float],
    n_samples: int = 256,
) -> float:
    """Sup of |t**(1+(1+gamma)beta) f(t**beta x, t) - g(x)| / g(x) over the window.

    f is evaluated by log-linear interpolation on the size grid, g comes
    from the profile's dense evaluation.
    """
    if field.t < 1.0:
        raise DomainError("distance defined for t >= 1")
    x_lo, x_hi = window
    if not 0.0 < x_lo < x_hi:
        raise WindowError("window must satisfy 0 < x_lo < x_hi")
    gamma = field.kernel.gamma
    t = field.t
    scale = t**beta
    x = np.geomspace(x_lo, x_hi, n_samples)
    xi_eval = scale * x
    xi = field.xi_grid
    if xi_eval[0] < xi[0] or xi_eval[-1] > xi[-1]:
        raise WindowError(
            f"rescaled window [{xi_eval[0]:g}, {xi_eval[-1]:g}] leaves the size grid"
        )
    if x[0] < profile.x_min or x[-1] > profile.x_max:
        raise WindowError("window leaves the profile domain")
    f = field.f_values
    if np.any(f[(xi >= xi_eval[0] / 2) & (xi <= xi_eval[-1] * 2)] <= 0.0):
        raise DomainError("log-linear interpolation requires positive densities")
    log_f = np.interp(np.log(xi_eval), np.log(xi), np.log(f))
    rescaled = t ** (1.0 + (1.0 + gamma) * beta) * np.exp(log_f)
    g_ref = np.asarray(profile.g_at(x), dtype=float)
    return float(np.max(np.abs(rescaled - g_ref) / g_ref))


@dataclass(frozen=True)
class CollapseReport:
    """Collapse distances D(t) at a sequence of output times."""

    times: tuple
    distances: tuple
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "distances": list(self.distances),
            "window": list(self.window),
        }


def default_window(
    field: NumberDensityField, beta: float, t_end: float
) -> tuple[float, float]:
    """Middle two quartiles (in log) of the rescaled domains over [t, t_end].

    Intersecting the rescaled domains at the initial and final times excludes
    the boundary-contaminated nodes at both ends.
    """
    xi = field.xi_grid
    lo = math.log(xi[0] / field.t**beta)
    hi = math.log(xi[-1] / t_end**beta)
    if hi <= lo:
        raise WindowError("rescaled domains do not overlap; grid too short")
    span = hi - lo
    return math.exp(lo + 0.25 * span), math.exp(lo + 0.75 * span)


def simulate_collapse(
    field: NumberDensityField,
    profile: Profile,
    beta: float,
    t_end: float,
    n_outputs: int = 5,
    eta: float = DEFAULT_ETA,
    window: tuple[float, float] | None = None,
    collect_fields: bool = False,
):
    """Evolve the field to t_end, recording D(t) at geometric output times."""
    if window is None:
        window = default_window(field, beta, t_end)
    times = np.geomspace(field.t, t_end, n_outputs)
    dists = []
    snapshots = []
    for k, t_out in enumerate(times):
        if k > 0:
            field = advance_to(field, float(t_out), eta)
        dists.append(self_similar_distance(field, profile, beta, window))
        if collect_fields:
            snapshots.append(field)
    report = CollapseReport(
        times=tuple(float(t) for t in times),
        distances=tuple(dists),
        window=window,
    )
    return (report, snapshots) if collect_fields else (report, [field])
