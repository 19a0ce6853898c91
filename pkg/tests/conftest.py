import numpy as np
import pytest

from abscs import _fallback
from abscs.quantization import Codebook
from abscs.signal import gen_sensing_matrix, gen_sparse_signal, measure

try:
    from abscs import _kernels
except ImportError:
    _kernels = None

KERNEL_MODULES = [pytest.param(_fallback, id="python")]
if _kernels is not None:
    KERNEL_MODULES.append(pytest.param(_kernels, id="compiled"))


@pytest.fixture(params=KERNEL_MODULES)
def kernel(request):
    return request.param


def make_instance(seed, m, n, k):
    rng = np.random.default_rng(seed)
    x = gen_sparse_signal(rng, m, k)
    phi = gen_sensing_matrix(rng, n, m)
    return x, phi, measure(phi, x)


def gaussian_codebook(bits, seed=0, spread=1.0):
    """Quick deterministic codebook: evenly spaced Gaussian quantiles, scaled."""
    from scipy.stats import norm

    levels = 1 << bits
    if levels == 1:
        return Codebook(np.array([0.0]), 0)
    q = norm.ppf((2 * np.arange(levels) + 1) / (2 * levels)) * spread
    return Codebook(q, bits)
