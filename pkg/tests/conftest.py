"""Shared fixtures: the canonical profile and the 15-point family sweep."""

import time

import pytest

from diagcoag import make_params
from diagcoag import pipeline, tail
from diagcoag.params import params_from_rho

SWEEP_GAMMAS = (-1.0, 0.0, 0.5)
SWEEP_FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9)


@pytest.fixture(scope="session")
def canonical_params():
    return make_params(0.0, 2.0)


@pytest.fixture(scope="session")
def canonical_profile(canonical_params):
    return pipeline.build_profile(canonical_params)


@pytest.fixture(scope="session")
def sweep_profiles():
    """Profiles plus tail reports for gamma x tail-fraction sweep (15 points)."""
    rows = []
    t0 = time.perf_counter()
    for gamma in SWEEP_GAMMAS:
        for frac in SWEEP_FRACTIONS:
            rho = gamma + frac * (1.0 - gamma)
            params = params_from_rho(gamma, rho)
            profile = pipeline.build_profile(params)
            report, details = tail.build_tail_report(profile)
            rows.append(
                {
                    "gamma": gamma,
                    "frac": frac,
                    "rho": rho,
                    "params": params,
                    "profile": profile,
                    "report": report,
                    "details": details,
                }
            )
    return {"rows": rows, "elapsed": time.perf_counter() - t0}
