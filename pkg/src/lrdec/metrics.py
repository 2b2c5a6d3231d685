"""Reconstruction quality and representation efficiency metrics."""

from dataclasses import dataclass

import numpy as np

from .tensor import KruskalTensor

__all__ = [
    "mse",
    "psnr",
    "CompressionStats",
    "compression_ratio",
    "MetricReport",
    "evaluate",
]


def mse(reference, estimate):
    """Mean squared elementwise error between two equal-shape tensors."""
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs "
                         f"{estimate.shape}")
    diff = reference - estimate
    return float(np.mean(diff * diff))


def psnr(reference, estimate, peak=1.0):
    """Peak signal-to-noise ratio ``10 log10(peak^2 / mse)`` in dB.

    Identical inputs return ``inf``.  `peak` defaults to 1 for data scaled
    into the unit interval; pass the true dynamic range otherwise.
    """
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = mse(reference, estimate)
    if err == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / err))


@dataclass
class CompressionStats:
    """Sparsity summary of a set of activations.

    ``nnz`` counts factor entries above ``eps_rel`` times the largest
    absolute entry; ``cr`` is signal elements per surviving entry.  The
    raw l1 mass of the factors is kept alongside for reference.
    """

    cr: float
    nnz: int
    l1_sum: float
    threshold_eps: float


def _factor_arrays(activations):
    out = []
    for a in activations:
        factors = a.factors if isinstance(a, KruskalTensor) else a
        out.extend(np.asarray(f, dtype=float) for f in factors)
    return out


def compression_ratio(activations, signal_shape, eps_rel=1e-6):
    """Compression ratio of a factored representation.

    Parameters
    ----------
    activations : sequence
        Per-filter activations (:class:`KruskalTensor` or factor lists).
    signal_shape : tuple of int
        Shape of the represented signal.
    eps_rel : float
        Relative magnitude threshold under which a stored coefficient
        counts as zero.

    Returns
    -------
    CompressionStats
        ``cr`` is ``inf`` when no coefficient survives the threshold.
    """
    if eps_rel < 0:
        raise ValueError(f"eps_rel must be >= 0, got {eps_rel}")
    factors = _factor_arrays(activations)
    total = int(np.prod(tuple(signal_shape)))
    peak = max((float(np.max(np.abs(f))) for f in factors), default=0.0)
    nnz = sum(int(np.sum(np.abs(f) > eps_rel * peak)) for f in factors) \
        if peak > 0 else 0
    l1 = sum(float(np.sum(np.abs(f))) for f in factors)
    cr = float("inf") if nnz == 0 else total / nnz
    return CompressionStats(cr=cr, nnz=nnz, l1_sum=l1, threshold_eps=eps_rel)


@dataclass
class MetricReport:
    """Combined quality/efficiency record for one reconstruction."""

    psnr_db: float
    mse: float
    cr: float | None = None
    nnz: int | None = None
    threshold_eps: float | None = None
    l1_sum: float | None = None


def evaluate(reference, estimate, activations=None, peak=1.0, eps_rel=1e-6):
    """Assemble a :class:`MetricReport` for an estimate of `reference`."""
    report = MetricReport(psnr_db=psnr(reference, estimate, peak=peak),
                          mse=mse(reference, estimate))
    if activations is not None:
        stats = compression_ratio(activations, np.asarray(reference).shape,
                                  eps_rel=eps_rel)
        report.cr = stats.cr
        report.nnz = stats.nnz
        report.threshold_eps = stats.threshold_eps
        report.l1_sum = stats.l1_sum
    return report
