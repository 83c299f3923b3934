import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from srdf_kit import CovarianceModel


def random_model(rng, m, jitter=0.5):
    """Random SPD covariance of size m."""
    a = rng.standard_normal((m, m))
    return CovarianceModel(a @ a.T + jitter * np.eye(m))
