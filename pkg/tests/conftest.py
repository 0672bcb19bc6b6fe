import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_texture(h, w, seed=0):
    """Deterministic photo-ish plane: smooth gradients plus band-limited noise,
    clipped to the 8-bit range so protocols behave like they would on images."""
    rng = np.random.default_rng(seed)
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    plane = (
        110.0
        + 60.0 * np.sin(2 * np.pi * r / 37.0)
        + 45.0 * np.cos(2 * np.pi * c / 23.0)
        + 25.0 * np.sin(2 * np.pi * (r + 2 * c) / 53.0)
    )
    noise = rng.standard_normal((h, w))
    # crude low-pass so the noise has spatial structure worth predicting
    noise = noise + np.roll(noise, 1, axis=0) + np.roll(noise, 1, axis=1)
    plane = plane + 4.0 * noise
    return np.clip(plane, 0.0, 255.0)


@pytest.fixture
def texture():
    return make_texture


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
