import pytest

from secest import SystemModel, make_random_stable_system


@pytest.fixture(scope="session")
def triple_sensor_scalar() -> SystemModel:
    """Scalar random-walk plant observed by three identical unit sensors."""
    return SystemModel(A=[[1.0]], C=[[1.0], [1.0], [1.0]], sigma_w2=1.0, sigma_v2=1.0)


@pytest.fixture(scope="session")
def desk_model() -> SystemModel:
    """n=20, p=5 random stable system at unit noise, fixed seed."""
    return make_random_stable_system(20, 5, 0.9, seed=100, sigma_w2=1.0, sigma_v2=1.0)


def random_small_model(seed: int, n=3, p=3, sigma_w2=0.5, sigma_v2=0.7) -> SystemModel:
    return make_random_stable_system(
        n, p, 0.85, seed=seed, sigma_w2=sigma_w2, sigma_v2=sigma_v2
    )
