"""Profile continuation by integrating the rescaled delay equation.

The rescaled profile h(x) = x**(1+gamma) g(x) obeys the pantograph equation

    h'(x) = (h(x)**2 - theta*h(x/2)**2 - h(x)) / (beta*x).

In tau = log x the right-hand side loses its explicit x dependence and the
delayed argument x/2 becomes the constant shift log 2, so a uniform tau grid
with spacing log(2)/m makes the delay land exactly m nodes back (method of
steps with exact delay alignment).  Classical 4-stage Runge-Kutta marches in
tau; half-step delayed values are read from history by cubic Hermite
interpolation, which keeps the interpolation error below the truncation
error of the integrator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._quad import hermite_eval
from .errors import DomainError, MonotonicityError, PositivityError, RangeError
from .params import SimilarityParams, make_params

_LN2 = math.log(2.0)

# Below this value the amplitude c is treated as zero (constant branch):
# monotonicity is then not required and equality with 1/(1-theta) is allowed.
_C_ZERO = 1e-300

NORMALIZE_TOL = 1e-12


@dataclass(frozen=True)
class Profile:
    """Sampled profile h on a uniform grid in tau = log x.

    ``dh_values`` stores dh/dx.  ``c`` is the bifurcation amplitude in the
    current gauge (rescaling x -> a*x maps c -> c*a**mu); ``z`` is the
    hand-off point below which the values came from the local expansion.
    Instances are immutable; share freely.
    """

    params: SimilarityParams
    m: int
    tau0: float
    h_values: np.ndarray
    dh_values: np.ndarray
    c: float
    z: float
    normalized: bool = False

    @property
    def dtau(self) -> float:
        return _LN2 / self.m

    @property
    def tau_grid(self) -> np.ndarray:
        return self.tau0 + self.dtau * np.arange(len(self.h_values))

    @property
    def x_values(self) -> np.ndarray:
        return np.exp(self.tau_grid)

    @property
    def x_min(self) -> float:
        return math.exp(self.tau0)

    @property
    def x_max(self) -> float:
        return math.exp(self.tau0 + self.dtau * (len(self.h_values) - 1))

    @property
    def g_values(self) -> np.ndarray:
        x = self.x_values
        return x ** (-(1.0 + self.params.gamma)) * self.h_values

    def _dh_dtau(self) -> np.ndarray:
        return self.dh_values * self.x_values

    def h_at(self, x) -> np.ndarray | float:
        """Dense evaluation of h by cubic Hermite interpolation."""
        tau = np.log(np.asarray(x, dtype=float))
        return hermite_eval(tau, self.tau0, self.dtau, self.h_values, self._dh_dtau())

    def g_at(self, x) -> np.ndarray | float:
        x_arr = np.asarray(x, dtype=float)
        return x_arr ** (-(1.0 + self.params.gamma)) * self.h_at(x)


def rhs(x: float, h_at_x: float, h_at_half: float, params: SimilarityParams) -> float:
    """h'(x) of the delay equation given h(x) and h(x/2)."""
    theta = params.theta
    return (h_at_x * h_at_x - theta * h_at_half * h_at_half - h_at_x) / (params.beta * x)


def _resolvable_decrement(profile: Profile) -> np.ndarray:
    """Nodes where the true per-step decrement of h exceeds float resolution.

    Near the origin h approaches its limit like x**mu; once c*x**mu falls
    below the ulp of h the sampled values tie exactly and strictness cannot
    be observed in double precision.
    """
    h = profile.h_values
    dh_tau = profile._dh_dtau()
    return np.abs(dh_tau) * profile.dtau > 64.0 * np.finfo(float).eps * np.abs(h)


def check_invariants(profile: Profile) -> None:
    """Raise unless positivity and (for c > 0) monotone decrease hold.

    Monotonicity is strict wherever the decrement is resolvable in double
    precision; exact ties are tolerated where it is not (deep in the
    expansion region for large mu).
    """
    h = profile.h_values
    limit = 1.0 / (1.0 - profile.params.theta)
    x = profile.x_values
    bad = np.nonzero(~(h > 0.0))[0]
    if bad.size:
        raise PositivityError(f"h <= 0 at x = {x[bad[0]]:g}", x=float(x[bad[0]]))
    if profile.c > _C_ZERO:
        resolvable = _resolvable_decrement(profile)
        bad = np.nonzero((h > limit) | ((h == limit) & resolvable))[0]
        if bad.size:
            raise DomainError(f"h >= 1/(1-theta) at x = {x[bad[0]]:g}")
        diffs = np.diff(h)
        bad = np.nonzero((diffs > 0.0) | ((diffs == 0.0) & resolvable[:-1]))[0]
        if bad.size:
            raise MonotonicityError(
                f"h not strictly decreasing at x = {x[bad[0] + 1]:g}",
                x=float(x[bad[0] + 1]),
            )
    else:
        if np.max(np.abs(h - limit)) > 1e-9 * limit:
            raise DomainError("constant-branch profile drifted from 1/(1-theta)")


def integrate(seed: Profile, params: SimilarityParams, x_max: float) -> Profile:
    """Continue a profile out to x_max by the method of steps.

    The seed must carry at least one delay interval (m+1 nodes) of history.
    Monotonicity or positivity violations abort with the offending x; they
    signal a step too coarse for the parameters, retry with larger m.
    """
    m = seed.m
    if m < 32:
        raise DomainError(f"octave density m must be >= 32; got {m}")
    n_have = len(seed.h_values)
    if n_have < m + 1:
        raise DomainError("seed history shorter than one delay interval")
    if not x_max > seed.x_max:
        raise DomainError("x_max must exceed the seed's right endpoint")

    dtau = seed.dtau
    theta = params.theta
    beta = params.beta
    strict = seed.c > _C_ZERO

    tau_last = seed.tau0 + dtau * (n_have - 1)
    n_new = int(math.ceil((math.log(x_max) - tau_last) / dtau - 1e-12))
    n_total = n_have + n_new

    h = np.empty(n_total)
    hd = np.empty(n_total)  # dh/dtau
    h[:n_have] = seed.h_values
    hd[:n_have] = seed._dh_dtau()

    hl = h.tolist()
    hdl = hd.tolist()

    def f(hv: float, hh: float) -> float:
        return (hv * hv - theta * hh * hh - hv) / beta

    half = 0.5 * dtau
    eighth = dtau / 8.0
    for n in range(n_have - 1, n_total - 1):
        i = n - m
        h_b0 = hl[i]
        h_b1 = hl[i + 1]
        # Hermite midpoint of the delayed history interval.
        h_mid = 0.5 * (h_b0 + h_b1) + eighth * (hdl[i] - hdl[i + 1])
        hn = hl[n]
        k1 = f(hn, h_b0)
        k2 = f(hn + half * k1, h_mid)
        k3 = f(hn + half * k2, h_mid)
        k4 = f(hn + dtau * k3, h_b1)
        hnext = hn + (dtau / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not hnext > 0.0:
            if hn <= 1e-250:
                # double-precision floor: exponentially decaying branches
                # (beta == beta_star) underflow; truncate the march there
                n_total = n + 1
                h = h[:n_total]
                hd = hd[:n_total]
                hl = hl[:n_total]
                hdl = hdl[:n_total]
                break
            raise PositivityError(
                f"h lost positivity at x = {math.exp(seed.tau0 + dtau * (n + 1)):g}",
                x=math.exp(seed.tau0 + dtau * (n + 1)),
            )
        if strict and not hnext < hn:
            raise MonotonicityError(
                f"h failed to decrease at x = {math.exp(seed.tau0 + dtau * (n + 1)):g}",
                x=math.exp(seed.tau0 + dtau * (n + 1)),
            )
        hl[n + 1] = hnext
        hdl[n + 1] = f(hnext, h_b1)

    h = np.array(hl)
    hd = np.array(hdl)
    x = np.exp(seed.tau0 + dtau * np.arange(n_total))
    out = Profile(
        params=params,
        m=m,
        tau0=seed.tau0,
        h_values=h,
        dh_values=hd / x,
        c=seed.c,
        z=seed.z,
        normalized=seed.normalized,
    )
    check_invariants(out)
    return out


def rescale(profile: Profile, a: float) -> Profile:
    """Apply the scaling invariance h(x) -> h(a*x): a pure shift in tau.

    Node values are unchanged; the grid, derivative values, amplitude c and
    hand-off point z are re-expressed in the new gauge.
    """
    if not a > 0.0:
        raise DomainError("rescale factor a must be positive")
    if a == 1.0:
        return profile
    mu = profile.params.mu
    out = replace(
        profile,
        tau0=profile.tau0 - math.log(a),
        dh_values=profile.dh_values * a,
        c=profile.c * a**mu,
        z=profile.z / a,
        normalized=False,
    )
    return out


def normalize(profile: Profile) -> Profile:
    """Rescale so that h(1) = 1/2 (gauge fixing for the tail analysis).

    Uses monotone bisection on the dense evaluation; raises ``RangeError``
    when 1/2 is not attained inside the stored domain (extend x_max first).
    """
    h = profile.h_values
    if not (h[0] > 0.5 > h[-1]):
        raise RangeError(
            "h does not straddle 1/2 on the stored domain "
            f"[{profile.x_min:g}, {profile.x_max:g}]; range "
            f"({h[-1]:g}, {h[0]:g})"
        )
    idx = int(np.argmax(h < 0.5))
    dtau = profile.dtau
    lo = profile.tau0 + dtau * (idx - 1)
    hi = profile.tau0 + dtau * idx
    hd = profile._dh_dtau()

    def eval_h(tau: float) -> float:
        return float(hermite_eval(tau, profile.tau0, dtau, profile.h_values, hd))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = eval_h(mid)
        if abs(val - 0.5) <= NORMALIZE_TOL:
            lo = hi = mid
            break
        if val > 0.5:
            lo = mid
        else:
            hi = mid
    tau_star = 0.5 * (lo + hi)
    out = rescale(profile, math.exp(tau_star))
    return replace(out, normalized=True)


# ---------------------------------------------------------------------------
# Serialization: CSV table plus a JSON metadata sidecar.

_CSV_HEADER = "x,h,g,dhdx"


def sidecar_path(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def profile_metadata(profile: Profile) -> dict:
    return {
        "gamma": profile.params.gamma,
        "beta": profile.params.beta,
        "mu": profile.params.mu,
        "c": profile.c,
        "z": profile.z,
        "m": profile.m,
        "x_min": profile.x_min,
        "x_max": profile.x_max,
        "normalized": profile.normalized,
    }


def write_profile_csv(profile: Profile, path: str | Path) -> None:
    """Write the profile table (17 significant digits) and its sidecar."""
    x = profile.x_values
    g = profile.g_values
    lines = [_CSV_HEADER]
    for xi, hi, gi, di in zip(x, profile.h_values, g, profile.dh_values):
        lines.append(f"{xi:.17g},{hi:.17g},{gi:.17g},{di:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
    sidecar_path(path).write_text(json.dumps(profile_metadata(profile), indent=2) + "\n")


def read_profile_csv(path: str | Path, meta_path: str | Path | None = None) -> Profile:
    """Reconstruct a profile from its CSV table and metadata sidecar."""
    meta = json.loads(Path(meta_path or sidecar_path(path)).read_text())
    rows = Path(path).read_text().strip().splitlines()
    if rows[0] != _CSV_HEADER:
        raise DomainError(f"unexpected profile CSV header: {rows[0]!r}")
    data = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    params = make_params(meta["gamma"], meta["beta"])
    m = int(meta["m"])
    x = data[:, 0]
    tau = np.log(x)
    dtau = _LN2 / m
    if not np.allclose(np.diff(tau), dtau, rtol=0, atol=1e-9):
        raise DomainError("profile CSV grid is not uniform in log x at spacing ln2/m")
    return Profile(
        params=params,
        m=m,
        tau0=float(tau[0]),
        h_values=data[:, 1].copy(),
        dh_values=data[:, 3].copy(),
        c=float(meta["c"]),
        z=float(meta["z"]),
        normalized=bool(meta["normalized"]),
    )
