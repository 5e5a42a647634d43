"""Local construction of the profile near x = 0 by fixed-point iteration.

Near the origin the profile bifurcates off the constant 1/(1-theta):

    h(x) = 1/(1-theta) + x**mu * (-c + j(x)),

where the correction j solves j = T[j] with

    T[j](x) = (1/beta) * x**(-(1-gamma+mu)) * (
        int_{x/2}^{x} s**(-gamma+mu) * 2/(1-theta) * j(s) ds
      + int_{x/2}^{x} s**(-gamma+2mu) * (-c + j(s))**2 ds
      + (1-gamma)*(beta-beta_star) * int_0^x s**(-gamma+mu) * j(s) ds ).

T contracts on a ball of the weighted space ||f|| = sup x**(-eps) |f(x)|
over [0, z] for eps in (0, mu) and z small; iteration from j = 0 converges
geometrically.  Integrals are evaluated on a geometric grid (uniform in
tau = log s) by the corrected trapezoid rule; the part of the cumulative
integral below the lowest node uses the extrapolation j(s) ~ j(x1)*(s/x1)**mu,
which is the exact leading behavior of the fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._quad import cumtrapz_corrected
from .errors import ConvergenceError, DomainError, QuadratureError
from .mu import F_of
from .params import SimilarityParams
from .profile import Profile, check_invariants as check_profile_invariants, rhs

_LN2 = math.log(2.0)

DEFAULT_NODES_PER_OCTAVE = 64
DEFAULT_OCTAVES = 20
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 2000


@dataclass(frozen=True)
class ExpansionGrid:
    """Correction j sampled on a geometric grid over (0, z].

    ``weighted_norm`` records max x**(-epsilon)*|j(x)| over the nodes.
    """

    z: float
    c: float
    epsilon: float
    nodes: np.ndarray
    j_values: np.ndarray
    weighted_norm: float
    nodes_per_octave: int

    @property
    def x_min(self) -> float:
        return float(self.nodes[0])


def _weighted_norm(nodes: np.ndarray, j: np.ndarray, epsilon: float) -> float:
    return float(np.max(np.abs(j) * nodes ** (-epsilon)))


def empty_grid(
    z: float,
    c: float,
    epsilon: float,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    octaves: int = DEFAULT_OCTAVES,
) -> ExpansionGrid:
    """Grid with j = 0 spanning [z*2**-octaves, z]."""
    if not z > 0.0:
        raise DomainError("z must be positive")
    if nodes_per_octave < 1 or octaves < 1:
        raise DomainError("grid must have at least one node per octave")
    n = nodes_per_octave * octaves + 1
    tau = math.log(z) + _LN2 * (np.arange(n) - (n - 1)) / nodes_per_octave
    nodes = np.exp(tau)
    nodes[-1] = z  # pin the right endpoint exactly
    return ExpansionGrid(
        z=float(z),
        c=float(c),
        epsilon=float(epsilon),
        nodes=nodes,
        j_values=np.zeros(n),
        weighted_norm=0.0,
        nodes_per_octave=nodes_per_octave,
    )


def contraction_margin(params: SimilarityParams, epsilon: float) -> float:
    """Linear-part contraction factor kappa(epsilon) < 1.

    kappa = (2 F(mu+eps) + (1-gamma)*beta - 1) / (beta * (1-gamma+mu+eps));
    the defining equation of mu makes kappa(0) = 1 exactly and kappa < 1 for
    every eps > 0.
    """
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    gamma, beta, mu = params.gamma, params.beta, params.mu
    num = 2.0 * F_of(params, mu + epsilon) + (1.0 - gamma) * beta - 1.0
    den = beta * (1.0 - gamma + mu + epsilon)
    return num / den


def _quadratic_coefficients(params: SimilarityParams, c: float, epsilon: float):
    """Coefficients of the z**mu terms in the self-map bound.

    With ||j|| <= R the nonlinear part of ||T[j]|| is bounded by
    B2 * z**(mu+eps) * R**2 + Bc * z**(mu-eps), from (a+b)^2 <= 2a^2 + 2b^2.
    """
    gamma, beta, mu = params.gamma, params.beta, params.mu
    a2 = 1.0 - gamma + 2.0 * mu + 2.0 * epsilon
    b2 = 2.0 * (1.0 - 2.0 ** (-a2)) / (beta * a2)
    ac = 1.0 - gamma + 2.0 * mu
    bc = 2.0 * c * c * (1.0 - 2.0 ** (-ac)) / (beta * ac)
    return b2, bc


def ball_radius(params: SimilarityParams, c: float, z: float, epsilon: float) -> float:
    """Radius R of the invariant ball for the self-map of T at this z.

    Smallest root of kappa*R + B2*z**(mu+eps)*R**2 + Bc*z**(mu-eps) = R when
    real; otherwise the vertex radius (beyond which the self-map bound can
    never close), so that runaway iterates are detected.
    """
    mu = params.mu
    kappa = contraction_margin(params, epsilon)
    b2, bc = _quadratic_coefficients(params, c, epsilon)
    if bc == 0.0:
        return math.inf
    gap = 1.0 - kappa
    quad = b2 * z ** (mu + epsilon)
    const = bc * z ** (mu - epsilon)
    disc = gap * gap - 4.0 * quad * const
    if disc >= 0.0:
        return (gap - math.sqrt(disc)) / (2.0 * quad)
    return gap / (2.0 * quad)


def default_z(params: SimilarityParams, c: float = 1.0, epsilon: float | None = None) -> float:
    """Largest z = 2**-k at which the contraction has a definite margin.

    Requires kappa + 2*sqrt(B2*Bc)*z**mu <= max(0.95, (1+kappa)/2) (the
    second branch keeps the rule solvable when kappa itself exceeds 0.95,
    which happens for beta >> beta_star where mu is small), plus the
    locality condition c*z**mu <= (1/4)/(1-theta) so the bifurcation term
    stays a perturbation of the constant at the hand-off point.
    """
    mu = params.mu
    if epsilon is None:
        epsilon = 0.5 * mu
    if c <= 0.0:
        return 0.25
    kappa = contraction_margin(params, epsilon)
    b2, bc = _quadratic_coefficients(params, c, epsilon)
    c_est = 2.0 * math.sqrt(b2 * bc)
    threshold = max(0.95, 0.5 * (1.0 + kappa))
    limit = 0.25 / ((1.0 - params.theta) * c)
    for k in range(2, 400):
        z = 2.0**-k
        if kappa + c_est * z**mu <= threshold and c * z**mu <= limit:
            return z
    raise ConvergenceError(
        f"no admissible hand-off point z found for gamma={params.gamma}, "
        f"beta={params.beta}"
    )


def apply_T(grid: ExpansionGrid, params: SimilarityParams) -> ExpansionGrid:
    """One application of the operator T; the input grid is not mutated."""
    x = grid.nodes
    j = grid.j_values
    c = grid.c
    n_oct = grid.nodes_per_octave
    if len(x) < 2 or np.any(np.diff(np.log(x)) <= 0):
        raise QuadratureError("degenerate expansion grid")
    dtau = _LN2 / n_oct

    gamma, beta, mu = params.gamma, params.beta, params.mu
    two_a = 2.0 / (1.0 - params.theta)
    lam = (1.0 - gamma) * (beta - params.beta_star)

    e1 = 1.0 - gamma + mu  # exponent of the linear integrands (with jacobian)
    e2 = 1.0 - gamma + 2.0 * mu
    x_e1 = x**e1
    x_e2 = x**e2

    djdtau = np.gradient(j, dtau, edge_order=2)
    # Anchor the bottom edge on the known leading behavior j ~ x**mu.
    djdtau[0] = mu * j[0]

    cmj = c - j  # (-c + j)**2 == (c - j)**2
    phi1 = x_e1 * two_a * j
    phi2 = x_e2 * cmj * cmj
    phi3 = x_e1 * j
    dphi1 = e1 * phi1 + x_e1 * two_a * djdtau
    dphi2 = e2 * phi2 - x_e2 * 2.0 * cmj * djdtau
    dphi3 = e1 * phi3 + x_e1 * djdtau

    x1 = x[0]
    j1 = j[0]

    # Analytic integrals over (0, y] for y <= x1 under j(s) = j1*(s/x1)**mu.
    def head_lin(y):
        return j1 * x1**-mu * y ** (e1 + mu) / (e1 + mu)

    def head_sq(y):
        return (
            c * c * y**e2 / e2
            - 2.0 * c * j1 * x1**-mu * y ** (e2 + mu) / (e2 + mu)
            + j1 * j1 * x1 ** (-2.0 * mu) * y ** (e2 + 2.0 * mu) / (e2 + 2.0 * mu)
        )

    i1 = two_a * head_lin(x1) + cumtrapz_corrected(phi1, dphi1, dtau)
    i2 = head_sq(x1) + cumtrapz_corrected(phi2, dphi2, dtau)
    i3 = head_lin(x1) + cumtrapz_corrected(phi3, dphi3, dtau)

    # Delay differences int_{x/2}^{x}: exactly n_oct nodes back on the grid,
    # analytic below the lowest node.
    half = x / 2.0
    d1 = np.empty_like(i1)
    d2 = np.empty_like(i2)
    d1[n_oct:] = i1[n_oct:] - i1[:-n_oct]
    d2[n_oct:] = i2[n_oct:] - i2[:-n_oct]
    d1[:n_oct] = i1[:n_oct] - two_a * head_lin(half[:n_oct])
    d2[:n_oct] = i2[:n_oct] - head_sq(half[:n_oct])

    new_j = (d1 + d2 + lam * i3) / (beta * x**e1)
    return replace(
        grid,
        j_values=new_j,
        weighted_norm=_weighted_norm(x, new_j, grid.epsilon),
    )


def fixed_point(
    params: SimilarityParams,
    c: float,
    z: float,
    epsilon: float | None = None,
    nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE,
    octaves: int = DEFAULT_OCTAVES,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ExpansionGrid:
    """Iterate T from j = 0 until the weighted norm of the change is <= tol.

    Raises ``ConvergenceError`` when max_iter is exhausted or an iterate
    leaves the invariant ball (both signal z too large for the parameters).
    """
    mu = params.mu
    if c < 0.0:
        raise DomainError("amplitude c must be nonnegative")
    if epsilon is None:
        epsilon = 0.5 * mu
    if not (0.0 < epsilon < mu):
        raise DomainError(f"epsilon must lie in (0, mu) = (0, {mu}); got {epsilon}")

    grid = empty_grid(z, c, epsilon, nodes_per_octave, octaves)
    if c == 0.0:
        return grid  # T[0] = 0 identically: the constant branch

    radius = ball_radius(params, c, z, epsilon)
    for _ in range(max_iter):
        new = apply_T(grid, params)
        if not np.all(np.isfinite(new.j_values)):
            raise ConvergenceError(
                f"fixed-point iteration diverged at z={z:g} (non-finite iterate)"
            )
        if new.weighted_norm > radius * (1.0 + 1e-9):
            raise ConvergenceError(
                f"iterate left the invariant ball (norm {new.weighted_norm:g} > "
                f"R = {radius:g}): z={z:g} too large"
            )
        change = _weighted_norm(grid.nodes, new.j_values - grid.j_values, epsilon)
        grid = new
        if change <= tol:
            return grid
    raise ConvergenceError(
        f"fixed point not reached in {max_iter} iterations at z={z:g}"
    )


def h_from_expansion(
    grid: ExpansionGrid, params: SimilarityParams, m: int | None = None
) -> Profile:
    """Assemble the profile segment h = 1/(1-theta) + x**mu (-c + j) on (0, z].

    ``m`` selects the octave density of the output (must divide the grid's
    density); derivative values come from the delay equation itself, with
    the j ~ x**mu model serving delayed arguments below the lowest node.
    Raises ``MonotonicityError`` when c > 0 and h fails to decrease, which
    signals z beyond the safe neighbourhood (shrink z and rebuild).
    """
    if m is None:
        m = grid.nodes_per_octave
    if grid.nodes_per_octave % m != 0:
        raise DomainError(
            f"output density m={m} must divide the expansion density "
            f"{grid.nodes_per_octave}"
        )
    stride = grid.nodes_per_octave // m
    # Keep the right endpoint: subsample counting back from the end.
    idx = np.arange(len(grid.nodes) - 1, -1, -stride)[::-1]
    x = grid.nodes[idx]
    j = grid.j_values[idx]

    mu = params.mu
    limit = 1.0 / (1.0 - params.theta)
    c = grid.c
    h = limit + x**mu * (j - c)

    # Delayed values for the derivative: exact nodes where available, the
    # x**mu extrapolation model below the grid.
    x1 = grid.nodes[0]
    j1 = grid.j_values[0]
    h_half = np.empty_like(h)
    h_half[m:] = h[:-m]
    low = x[:m] / 2.0
    h_half[:m] = limit + low**mu * (j1 * (low / x1) ** mu - c)
    dh = np.array(
        [rhs(xi, hi, hhi, params) for xi, hi, hhi in zip(x, h, h_half)]
    )

    seed = Profile(
        params=params,
        m=m,
        tau0=float(np.log(x[0])),
        h_values=h,
        dh_values=dh,
        c=float(c),
        z=grid.z,
        normalized=False,
    )
    check_profile_invariants(seed)  # monotonicity failure here means: shrink z
    return seed
