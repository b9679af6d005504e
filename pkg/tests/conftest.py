import warnings

import pytest

from leocluster import default_scenario


@pytest.fixture(scope="session")
def scenario():
    """Documented-defaults scenario (the out-of-regime contact-angle
    warning is part of the defaults and silenced here)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return default_scenario()


def make_scenario(**overrides):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return default_scenario(**overrides)
