import warnings

import numpy as np

import spde_hypotest

warnings.filterwarnings("ignore")
spde_hypotest.config.set_default_float(np.float64)
