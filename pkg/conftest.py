import pytest
from hypothesis import settings

import app

settings.register_profile('toolkit', max_examples=40, deadline=None)
settings.load_profile('toolkit')


@pytest.fixture(scope='session', autouse=True)
def testing_configuration():
    app.initialize('development test')
    yield app.config
