import os

from flask import Config

import config as configurations

root_path = os.path.dirname(os.path.abspath(__file__))
config = Config(root_path)
config.from_object(configurations.DevelopmentConfig)


def initialize(env):
    """
        Loads the toolkit configuration from config.py (and config_local.py outside production).

        *Parameters:*
            - *env (string)*: The environment the toolkit runs in: 'production', 'production test',
              'development test' or anything else for development.

        *Returns:*
            - *True*: If the configuration was loaded.
            - *False*: Otherwise. The reason is also printed.
    """
    config.clear()
    try:
        if env == 'production':
            config.from_object(configurations.ProductionConfig)
        elif env == 'production test':
            config.from_object(configurations.ProductionTestingConfig)
        elif env == 'development test':
            config.from_object(configurations.TestingConfig)
            config.from_pyfile('config_local.py', silent=True)
        else:
            config.from_object(configurations.DevelopmentConfig)
            config.from_pyfile('config_local.py', silent=True)
    except (OSError, SyntaxError) as error:
        print('Could not load the configuration.')
        print(error)
        config.from_object(configurations.DevelopmentConfig)
        return False
    return True
