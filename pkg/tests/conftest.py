import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("thorough", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Reference coefficient table for l=1e-3, T=8 (pre-safety).
LISTING1 = [
    (8.28721201814563, -23.595886519098837, 17.300387312530933),
    (4.107059111542203, -2.9478499167379106, 0.5448431082926601),
    (3.9486908534822946, -2.908902115962949, 0.5518191394370137),
    (3.3184196573706015, -2.488488024314874, 0.51004894012372),
    (2.300652019954817, -1.6689039845747493, 0.4188073119525673),
    (1.891301407787398, -1.2679958271945868, 0.37680408948524835),
    (1.8750014808534479, -1.2500016453999487, 0.3750001645474248),
    (1.875, -1.25, 0.375),
]
LISTING2 = [(a / 1.01, b / 1.01**3, c / 1.01**5) for (a, b, c) in LISTING1[:-1]] + [LISTING1[-1]]


def with_spectrum(rng, sigma, m=None):
    """Random-orthogonal U diag(sigma) V^T, exact spectrum up to rounding."""
    n = len(sigma)
    m = m or n
    U, _ = np.linalg.qr(rng.standard_normal((m, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (U * np.asarray(sigma)) @ V.T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
