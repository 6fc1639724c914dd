import math

import numpy as np
import pytest

from qprotect.scheme import ControlParams, Ensemble


def random_ensemble(rng, s_plus=None, phi=None):
    return Ensemble(
        float(rng.uniform(0, math.pi)),
        float(rng.uniform(-math.pi, math.pi)) if phi is None else phi,
        float(rng.uniform(0, 1)) if s_plus is None else s_plus,
    )


def random_params(rng, definite=False):
    a, gp, gm = rng.uniform(-math.pi, math.pi, 3)
    p, p1, p2 = rng.uniform(0, 1, 3)
    if definite:
        p1 = p2 = 0.0
    return ControlParams(float(a), float(p), float(p1), float(p2), float(gp), float(gm))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
