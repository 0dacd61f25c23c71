import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def two_point():
    from stablecap import ReturnModel
    return ReturnModel.two_point((-0.5, 0.5), (0.5, 0.5))
