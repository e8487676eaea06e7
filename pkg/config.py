"""
Add your custom configurations to config_local.py
Configurations on config_local.py overwrite the configurations in this file.
"""


class BaseConfig:
    # Zero testing
    ZERO_TEST_POINTS = 64
    ZERO_TEST_ABS_TOL = 1e-9
    ZERO_TEST_SEED = 20190417
    STATE_BOX = (0.4, 2.0)
    WIENER_BOX = (-1.5, 1.5)
    TIME_BOX = (0.1, 2.0)
    PARAM_BOX = (0.5, 1.5)
    CONFORMAL_TOL = 1e-12
    LSTSQ_TOL = 1e-9

    # Monte Carlo
    MC_SEED = 1
    MC_DT = 1e-3
    MC_PATHS = 100000
    MC_HORIZON = 1.0
    MC_CHUNK_SIZE = 10000
    MC_MEAN_SE = 4.0
    MC_KS_LEVEL = 1e-3
    MC_MAX_EXCLUDED = 0.05

    MODELS_DIRECTORY = 'model_files'


class DevelopmentConfig(BaseConfig):
    ENV = 'development'
    DEBUG = True


class ProductionConfig(BaseConfig):
    ENV = 'production'
    DEBUG = False
    ZERO_TEST_POINTS = 128


class TestingConfig(BaseConfig):
    TESTING = True
    MC_PATHS = 20000


class ProductionTestingConfig(ProductionConfig):
    TESTING = True
    MC_PATHS = 20000
