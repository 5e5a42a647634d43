"""End-to-end profile construction: solve mu, fixed point, integrate, normalize.

Also hosts the sweep row used by the CLI: each row runs the full pipeline
for one (gamma, rho) pair and summarizes the tail report.
"""

from __future__ import annotations

import math

from .errors import ConvergenceError, MonotonicityError, PositivityError
from .expansion import contraction_margin, default_z, fixed_point, h_from_expansion
from .params import SimilarityParams, make_params, params_from_rho
from .profile import Profile, integrate, normalize
from . import tail

DEFAULT_M = 64
# Hard cap on the total integration span, as octaves above the hand-off point.
MAX_OCTAVES = 600


def _tail_x_target(beta: float, d_estimate: float) -> float:
    """x_max (normalized gauge) for a converged d and a clean slope window.

    Demands 2*x**(-1/beta) <= 0.1*d at x_max and <= 0.005*d at x_max/1e4
    (the slope window's lower edge), the second being the binding one.
    """
    d = max(d_estimate, 1e-3)
    return max((20.0 / d) ** beta, 1e4 * (400.0 / d) ** beta, 4.0)


def build_profile(
    params: SimilarityParams,
    c: float = 1.0,
    z: float | None = None,
    m: int = DEFAULT_M,
    x_max: float | None = None,
    epsilon: float | None = None,
    expansion_density: int | None = None,
    do_normalize: bool = True,
    tol: float = 1e-12,
    auto_extend: bool = True,
) -> Profile:
    """Construct a full profile for the given parameters.

    With c > 0 and auto_extend, the integration range is extended after
    normalization until the tail constant is converged and the slope-fit
    window is asymptotically clean.  c = 0 selects the constant branch and
    skips normalization (the constant never attains 1/2).
    """
    if z is None:
        z = default_z(params, c, epsilon)
    density = expansion_density or m
    if density % m != 0:
        raise ConvergenceError(
            f"expansion density {density} must be a multiple of m = {m}"
        )

    grid = None
    for _ in range(6):
        try:
            grid = fixed_point(params, c, z, epsilon, nodes_per_octave=density, tol=tol)
            seed = h_from_expansion(grid, params, m=m)
            break
        except (ConvergenceError, MonotonicityError):
            z *= 0.5  # hand-off point beyond the safe neighbourhood
            grid = None
    if grid is None:
        raise ConvergenceError(
            f"no converged expansion found down to z = {z:g} for "
            f"gamma={params.gamma}, beta={params.beta}"
        )

    target = x_max if x_max is not None else 2.0**40 * z
    m_eff = m
    profile = None
    for _ in range(3):
        try:
            profile = integrate(seed, params, target)
            break
        except (MonotonicityError, PositivityError):
            # numerical artifact: retry the whole march at doubled density
            m_eff *= 2
            dens = density * (m_eff // m) if density % m_eff else density
            grid2 = fixed_point(params, c, z, epsilon, nodes_per_octave=dens, tol=tol)
            seed = h_from_expansion(grid2, params, m=m_eff)
    if profile is None:
        raise ConvergenceError(
            f"integration kept violating invariants up to m = {m_eff}"
        )

    if not do_normalize or c == 0.0:
        return profile

    # The normalization target 1/2 must be attained inside the stored domain;
    # for slowly bifurcating cases (small mu) the crossing sits far above the
    # default span, so extend before rescaling.
    while profile.h_values[-1] >= 0.45:
        if math.log2(profile.x_max / profile.x_min) > MAX_OCTAVES:
            raise ConvergenceError(
                f"h has not reached 1/2 within {MAX_OCTAVES} octaves "
                f"(gamma={params.gamma}, beta={params.beta})"
            )
        profile = integrate(profile, params, profile.x_max * 2.0**20)

    profile = normalize(profile)

    if auto_extend and x_max is None and not params.degenerate:
        beta = params.beta
        for _ in range(5):
            d, err = tail.estimate_d(profile)
            need = _tail_x_target(beta, d)
            if profile.x_max >= need:
                break
            octaves_total = math.log2(need / profile.x_min)
            if octaves_total > MAX_OCTAVES:
                raise ConvergenceError(
                    f"tail extension would exceed {MAX_OCTAVES} octaves "
                    f"(beta={beta}, d~{d:g})"
                )
            profile = integrate(profile, params, need * 2.0)
    return profile


def profile_for(
    gamma: float,
    beta: float | None = None,
    rho: float | None = None,
    **kwargs,
) -> Profile:
    """Convenience wrapper taking either beta or rho."""
    if (beta is None) == (rho is None):
        raise ConvergenceError("exactly one of beta/rho must be given")
    params = make_params(gamma, beta) if beta is not None else params_from_rho(gamma, rho)
    return build_profile(params, **kwargs)


def sweep_row(gamma: float, rho: float, m: int = DEFAULT_M) -> dict:
    """One sweep entry: parameters, contraction margin and tail summary."""
    row: dict = {"gamma": gamma, "rho": rho}
    try:
        params = params_from_rho(gamma, rho)
    except Exception as exc:  # boundary rows are recorded, not fatal
        row["status"] = "invalid"
        row["error"] = str(exc)
        return row
    try:
        row["beta"] = params.beta
        row["mu"] = params.mu
        row["kappa"] = contraction_margin(params, 0.5 * params.mu)
        profile = build_profile(params, m=m)
        report, details = tail.build_tail_report(profile)
        row["d_estimate"] = report.d_estimate
        row["d_error_bound"] = report.d_error_bound
        row["c0"] = report.c0
        row["slope_fit"] = report.slope_fit
        row["slope_err_rel"] = abs(report.slope_fit + 1.0 / params.beta) * params.beta
        row["upper_margin"] = details["upper_margin"]
        row["lower_margin"] = details.get("lower_margin", float("nan"))
        row["lower_margin_chain"] = details.get("lower_margin_chain", float("nan"))
        row["hineq_margin"] = details.get("hineq_margin", float("nan"))
        row["cauchy_max_violation"] = report.cauchy_max_violation
        row["max_residual_sss4b"] = report.max_residual_sss4b
        ok = (
            report.upper_bound_ok
            and report.lower_bound_ok
            and details.get("hineq_ok", True)
            and report.cauchy_max_violation <= tail.BOUND_SLACK
            and row["slope_err_rel"] <= 0.01
            and report.max_residual_sss4b <= 1e-6
        )
        row["status"] = "ok" if ok else "bound_failure"
    except Exception as exc:
        row["status"] = "error"
        row["error"] = str(exc)
    return row
