import numpy as np
import pytest

from skewlab.config import RunConfig
from skewlab.core import FiberPolynomial, Polynomial1D, SkewProduct
from skewlab.family import GOLDEN


@pytest.fixture(scope="session", autouse=True)
def isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("SKEWLAB_CACHE", str(tmp_path_factory.mktemp("cache")))
    yield
    mp.undo()


@pytest.fixture(scope="session")
def ws(isolated_cache):
    from skewlab.pipeline import Workspace

    return Workspace(RunConfig())


@pytest.fixture(scope="session")
def cube_map():
    """f(z, w) = (lambda z + z^3, w^3): the decoupled control."""
    lam = np.exp(2j * np.pi * GOLDEN)
    p = Polynomial1D((0, lam, 0, 1))
    q = FiberPolynomial((Polynomial1D((0,)), Polynomial1D((0,)), Polynomial1D((0,)), Polynomial1D((1,))))
    return SkewProduct(p, q)
