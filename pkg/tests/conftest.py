import numpy as np
import pytest

from agewave import model, spectral, waves

# Independent high-precision values (mpmath, 30 digits) for the reference model.
SQRT_E = 1.6487212707001281468
KAPPA2_LAMBDA_STAR = 1.2155945303690764653
KAPPA2_C_STAR = 2.5448413589278588903
C2_LAMBDA1 = 0.59783187952917741928
C2_LAMBDA2 = 1.4674100872320421831
LAPLACE03_LAMBDA_STAR = 1.9245008972987525484
LAPLACE03_C_STAR = 0.77942286340599478209


def rank_one_rho(s, kappa=1.0):
    """ρ(L_s) for the reference model: L_s has rank one in the continuum."""
    if s == 0:
        return 1.0 + kappa / 2.0
    return (np.expm1(s) / s) * (1.0 + kappa / s) - kappa / s


@pytest.fixture(scope="session")
def r1():
    return model.reference_model()


@pytest.fixture(scope="session")
def r1_report(r1):
    return spectral.dispersion_report(r1)


@pytest.fixture(scope="session")
def wave_c2(r1, r1_report):
    pair = waves.grid_consistent_pair(r1, r1_report, 2.0, waves.DEFAULT_FRAME)
    profile = waves.monotone_iterate(r1, 2.0, pair, waves.DEFAULT_FRAME)
    return pair, profile
