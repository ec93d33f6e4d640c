import dataclasses

import pytest


@pytest.fixture
def counting():
    """Wrap a problem so drift/diffusion invocations are counted."""

    def wrap(problem):
        counts = {"drift": 0, "diffusion": 0}
        base_drift, base_diffusion = problem.drift, problem.diffusion

        def drift(t, x):
            counts["drift"] += 1
            return base_drift(t, x)

        def diffusion(t, x):
            counts["diffusion"] += 1
            return base_diffusion(t, x)

        wrapped = dataclasses.replace(
            problem, drift=drift, diffusion=diffusion
        )
        return wrapped, counts

    return wrap
