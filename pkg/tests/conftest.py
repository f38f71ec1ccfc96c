import pytest

import helpers


@pytest.fixture(scope="session")
def fig_trace():
    return helpers.fig_trace()
