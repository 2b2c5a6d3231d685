"""Low-rank deconvolution.

Decomposes an N-order signal into a sum of small convolutional filters
applied to rank-R factored activation tensors, solved mode by mode in the
DFT domain, with an l1/ADMM path, an l2 closed-form path, and a masked
variant for tensor completion.
"""

from .convmodel import (Dictionary, SpectralOperator, circular_convolve,
                        forward_model)
from .io import (FormatError, generate_mask, read_dictionary, read_image,
                 read_mask, read_tensor, write_dictionary, write_image,
                 write_mask, write_tensor)
from .metrics import (CompressionStats, MetricReport, compression_ratio,
                      evaluate, mse, psnr)
from .solver import (AdmmState, SolveReport, SolverConfig, lrd_fit,
                     lrd_fit_masked, soft_threshold, solve_mode_admm,
                     solve_mode_l2, solve_mode_quadratic)
from .synth import make_activations, make_filters, make_problem, smooth_low_rank
from .tensor import (KruskalTensor, build_q, fold, khatri_rao, kronecker,
                     kruskal_reconstruct, unfold)
from .transform import (ImaginaryResidueError, dft_factor, dft_nd,
                        idft_factor, idft_nd)

__version__ = "0.1.0"

__all__ = [
    "AdmmState",
    "CompressionStats",
    "Dictionary",
    "FormatError",
    "ImaginaryResidueError",
    "KruskalTensor",
    "MetricReport",
    "SolveReport",
    "SolverConfig",
    "SpectralOperator",
    "build_q",
    "circular_convolve",
    "compression_ratio",
    "dft_factor",
    "dft_nd",
    "evaluate",
    "fold",
    "forward_model",
    "generate_mask",
    "idft_factor",
    "idft_nd",
    "khatri_rao",
    "kronecker",
    "kruskal_reconstruct",
    "lrd_fit",
    "lrd_fit_masked",
    "make_activations",
    "make_filters",
    "make_problem",
    "mse",
    "psnr",
    "read_dictionary",
    "read_image",
    "read_mask",
    "read_tensor",
    "smooth_low_rank",
    "soft_threshold",
    "solve_mode_admm",
    "solve_mode_l2",
    "solve_mode_quadratic",
    "unfold",
    "write_dictionary",
    "write_image",
    "write_mask",
    "write_tensor",
]
