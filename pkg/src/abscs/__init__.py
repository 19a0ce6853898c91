"""Analysis-by-synthesis quantization of compressed-sensing measurements."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .abs_quantizer import (
    AbsConfig,
    AbsState,
    abs_quantize,
    abs_sweep,
    encoding_objective,
    exhaustive_joint_encode,
    surrogate_objective,
)
from .baselines import SupportSetCode, support_set_decode, support_set_encode
from .quantization import (
    Codebook,
    QuantizedVector,
    RateAllocation,
    allocate_bits,
    decode,
    encode_nearest,
    lloyd_train,
    load_codebook,
    save_codebook,
)
from .reconstruction import omp_reconstruct, oracle_best_ksparse
from .signal import SensingMatrix, SparseSignal, gen_sensing_matrix, gen_sparse_signal, measure, nmse
