"""Forward convolutional model and its per-mode frequency-domain operator.

The model synthesizes a signal as ``sum_m d_m (*) K_m`` with ``(*)`` the
N-dimensional circular convolution, ``d_m`` small-support filters and
``K_m`` rank-R factored activation tensors.  For a fixed mode ``n`` the map
from the stacked mode-n factors to the signal spectrum is linear; that map
is :class:`SpectralOperator`.  The operator never materializes its matrix:
the filter spectra act diagonally and the remaining factors act through a
Khatri-Rao matrix, which also decouples the normal equations into one small
Hermitian block per mode-n frequency.

Vector layouts
--------------
Factor-side vectors stack ``vec(Xhat_m)`` over filters ``m`` (column-major
vec: frequency index fastest, then rank), giving length ``M*R*I_n``.
Signal-side vectors stack, per channel, the column-major vec of the mode-n
unfolding, giving length ``C * I_n * Lambda``.
"""

import numpy as np

from .tensor import build_q, co_size, kruskal_reconstruct, unfold, KruskalTensor
from .transform import dft_factor, dft_nd, idft_nd

__all__ = [
    "Dictionary",
    "circular_convolve",
    "forward_model",
    "SpectralOperator",
    "factor_to_vec",
    "vec_to_factor",
    "signal_to_vec",
    "vec_to_signal",
]


class Dictionary:
    """A bank of M small-support filters, optionally per channel.

    Parameters
    ----------
    filters : ndarray
        ``(M, L_0, ..., L_{N-1})`` for single-channel filters, or
        ``(M, C, L_0, ..., L_{N-1})`` with ``channels=True``.
    channels : bool
        Interpret the second axis as a channel axis.
    """

    def __init__(self, filters, channels=False):
        arr = np.asarray(filters, dtype=float)
        min_ndim = 3 if channels else 2
        if arr.ndim < min_ndim:
            raise ValueError(f"filter array of ndim {arr.ndim} too flat for "
                             f"channels={channels}")
        if not channels:
            arr = arr[:, None]
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need at least one filter and one channel, got "
                             f"shape {arr.shape}")
        if any(s < 1 for s in arr.shape[2:]):
            raise ValueError(f"empty filter support {arr.shape[2:]}")
        self.filters = arr

    @property
    def num_filters(self):
        return self.filters.shape[0]

    @property
    def num_channels(self):
        return self.filters.shape[1]

    @property
    def support(self):
        return self.filters.shape[2:]

    @property
    def ndim(self):
        """Number of spatial modes the filters act on."""
        return len(self.support)

    def filter(self, m, c=0):
        return self.filters[m, c]

    def check_signal_shape(self, shape):
        """Validate the filter support against a signal shape.

        Support must not exceed the signal in any mode and must be strictly
        smaller in at least one.
        """
        shape = tuple(shape)
        if len(shape) != self.ndim:
            raise ValueError(f"signal order {len(shape)} != filter order "
                             f"{self.ndim}")
        if any(l > i for l, i in zip(self.support, shape)):
            raise ValueError(f"filter support {self.support} exceeds signal "
                             f"shape {shape}")
        if not any(l < i for l, i in zip(self.support, shape)):
            raise ValueError(f"filter support {self.support} must be strictly "
                             f"smaller than the signal {shape} in at least "
                             f"one mode")

    def __repr__(self):
        return (f"Dictionary(M={self.num_filters}, C={self.num_channels}, "
                f"support={self.support})")


def pad_to_shape(filt, shape):
    """Zero-pad a filter to `shape`, anchored at the origin corner."""
    filt = np.asarray(filt)
    shape = tuple(shape)
    if filt.ndim != len(shape):
        raise ValueError(f"filter order {filt.ndim} != target order {len(shape)}")
    if any(l > i for l, i in zip(filt.shape, shape)):
        raise ValueError(f"filter support {filt.shape} exceeds shape {shape}")
    out = np.zeros(shape, dtype=filt.dtype)
    out[tuple(slice(0, l) for l in filt.shape)] = filt
    return out


def circular_convolve(filt, activation):
    """N-dimensional circular convolution of a small filter with a signal.

    Matches the direct definition
    ``out[t] = sum_tau filt[tau] * activation[(t - tau) mod I]``
    computed through the DFT; the filter is zero-padded to the activation
    shape at the origin corner.
    """
    activation = np.asarray(activation, dtype=float)
    padded = pad_to_shape(np.asarray(filt, dtype=float), activation.shape)
    spec = dft_nd(padded) * dft_nd(activation) * np.sqrt(activation.size)
    return idft_nd(spec)


def _activation_factors(activations):
    """Normalize a list of activations to per-filter factor lists."""
    out = []
    for a in activations:
        if isinstance(a, KruskalTensor):
            out.append(a.factors)
        else:
            out.append([np.asarray(f) for f in a])
    return out


def forward_model(dictionary, activations):
    """Synthesize the signal ``sum_m d_m (*) K_m``.

    Parameters
    ----------
    dictionary : Dictionary
        M filters; with C > 1 channels the output gains a trailing channel
        axis and channel ``c`` uses filters ``d_{m,c}`` with the activations
        shared across channels.
    activations : sequence
        M activation tensors, each a :class:`KruskalTensor` or a factor
        list, all with the signal shape and a common rank.

    Returns
    -------
    ndarray
        ``(I_0, ..., I_{N-1})``, or ``(..., C)`` for multichannel filters.
    """
    factors = _activation_factors(activations)
    if len(factors) != dictionary.num_filters:
        raise ValueError(f"{len(factors)} activations for "
                         f"{dictionary.num_filters} filters")
    shape = tuple(f.shape[0] for f in factors[0])
    rank = factors[0][0].shape[1]
    for m, fs in enumerate(factors):
        if tuple(f.shape[0] for f in fs) != shape:
            raise ValueError(f"activation {m} shape mismatch")
        if any(f.shape[1] != rank for f in fs):
            raise ValueError(f"activation {m} rank mismatch")
    dictionary.check_signal_shape(shape)

    root = np.sqrt(float(np.prod(shape)))
    khat = [dft_nd(kruskal_reconstruct(fs)) for fs in factors]
    out = []
    for c in range(dictionary.num_channels):
        acc = np.zeros(shape, dtype=complex)
        for m in range(dictionary.num_filters):
            dspec = np.fft.fftn(pad_to_shape(dictionary.filter(m, c), shape))
            acc += dspec * khat[m]
        out.append(idft_nd(acc))
    if dictionary.num_channels == 1:
        return out[0]
    return np.stack(out, axis=-1)


def factor_to_vec(x):
    """Stack ``(M, I, R)`` factors into the canonical factor-side vector."""
    x = np.asarray(x)
    return x.transpose(0, 2, 1).reshape(-1)


def vec_to_factor(v, num_filters, length, rank):
    """Inverse of :func:`factor_to_vec`."""
    v = np.asarray(v)
    if v.size != num_filters * rank * length:
        raise ValueError(f"vector length {v.size} != M*R*I = "
                         f"{num_filters * rank * length}")
    return v.reshape(num_filters, rank, length).transpose(0, 2, 1)


def signal_to_vec(y):
    """Stack ``(C, I, Lambda)`` unfolding rows into the signal-side vector."""
    y = np.asarray(y)
    return y.transpose(0, 2, 1).reshape(-1)


def vec_to_signal(v, num_channels, length, lam):
    """Inverse of :func:`signal_to_vec`."""
    v = np.asarray(v)
    if v.size != num_channels * length * lam:
        raise ValueError(f"vector length {v.size} != C*I*Lambda = "
                         f"{num_channels * length * lam}")
    return v.reshape(num_channels, lam, length).transpose(0, 2, 1)


class SpectralOperator:
    """Frequency-domain linear map from one mode's factors to the model output.

    For mode ``n`` and fixed factors on all other modes, maps the stacked
    spectral factors ``xhat`` (length ``M*R*I_n``) to the stacked spectra of
    ``sum_m d_m (*) K_m`` unfolded along ``n`` (length ``C*I_n*Lambda``).
    Filter spectra are unnormalized FFTs of the zero-padded filters, so the
    map is exactly the unitary-DFT image of the spatial forward model.

    Immutable after construction; reuse one instance for all solves of the
    same mode while the other factors are fixed.

    Parameters
    ----------
    dictionary : Dictionary
    signal_shape : tuple of int
    factors : sequence of ndarray
        Per mode, the stacked real factors ``(M, I_k, R)``.  The entry at
        `mode` only fixes the dimensions; its values are not used.
    mode : int
    """

    def __init__(self, dictionary, signal_shape, factors, mode):
        shape = tuple(int(s) for s in signal_shape)
        n_modes = len(shape)
        if not 0 <= mode < n_modes:
            raise ValueError(f"mode {mode} out of range for shape {shape}")
        if len(factors) != n_modes:
            raise ValueError(f"{len(factors)} factor blocks for order-"
                             f"{n_modes} signal")
        dictionary.check_signal_shape(shape)
        factors = [np.asarray(f) for f in factors]
        m_count = dictionary.num_filters
        rank = factors[0].shape[2]
        for k, f in enumerate(factors):
            if f.shape != (m_count, shape[k], rank):
                raise ValueError(f"factor block {k} has shape {f.shape}, "
                                 f"expected {(m_count, shape[k], rank)}")

        self.mode = mode
        self.signal_shape = shape
        self.num_filters = m_count
        self.num_channels = dictionary.num_channels
        self.rank = rank
        self.mode_length = shape[mode]
        self.lam = co_size(shape, mode)

        # (M, C, I_n, Lambda): unfolded raw filter spectra
        dhat = np.empty((m_count, self.num_channels, self.mode_length, self.lam),
                        dtype=complex)
        for m in range(m_count):
            for c in range(self.num_channels):
                spec = np.fft.fftn(pad_to_shape(dictionary.filter(m, c), shape))
                dhat[m, c] = unfold(spec, mode)
        self._dhat = dhat

        # (M, Lambda, R): Khatri-Rao chain of the unitary factor spectra
        fhat = [dft_factor(f, axis=1) for f in factors]
        qhat = np.empty((m_count, self.lam, rank), dtype=complex)
        for m in range(m_count):
            if n_modes == 1:
                # single-mode degenerate case: the chain is empty and the
                # solve couples all ranks at each frequency directly
                qhat[m] = np.ones((1, rank), dtype=complex)
            else:
                qhat[m] = build_q([fhat[k][m] for k in range(n_modes)], mode)
        self._qhat = qhat
        self._gram = None

    @property
    def factor_size(self):
        return self.num_filters * self.rank * self.mode_length

    @property
    def signal_size(self):
        return self.num_channels * self.mode_length * self.lam

    def apply_arrays(self, xhat):
        """Map spectral factors ``(M, I_n, R)`` to output spectra
        ``(C, I_n, Lambda)``."""
        xhat = np.asarray(xhat)
        out = np.zeros((self.num_channels, self.mode_length, self.lam),
                       dtype=complex)
        for m in range(self.num_filters):
            rows = xhat[m] @ self._qhat[m].T          # (I_n, Lambda)
            out += self._dhat[m] * rows[None]
        return out

    def adjoint_arrays(self, yhat):
        """Adjoint of :meth:`apply_arrays` under the complex inner product."""
        yhat = np.asarray(yhat)
        out = np.empty((self.num_filters, self.mode_length, self.rank),
                       dtype=complex)
        for m in range(self.num_filters):
            g = np.einsum("cil,cil->il", self._dhat[m].conj(), yhat)
            out[m] = g @ self._qhat[m].conj()
        return out

    def apply(self, xhat_vec):
        """Vector form of :meth:`apply_arrays`."""
        x = vec_to_factor(np.asarray(xhat_vec, dtype=complex),
                          self.num_filters, self.mode_length, self.rank)
        return signal_to_vec(self.apply_arrays(x))

    def apply_adjoint(self, yhat_vec):
        """Vector form of :meth:`adjoint_arrays`."""
        y = vec_to_signal(np.asarray(yhat_vec, dtype=complex),
                          self.num_channels, self.mode_length, self.lam)
        return factor_to_vec(self.adjoint_arrays(y))

    def gram_blocks(self):
        """Per-frequency Gram blocks of the operator.

        The normal matrix ``W^H W`` is block-diagonal over the mode-n
        frequency index: entry ``((m, r), (m', r'))`` of block ``i`` is
        ``sum_{c,l} conj(dhat_m[c,i,l] qhat_m[l,r]) dhat_m'[c,i,l]
        qhat_m'[l,r']``.  Returns the ``(I_n, M*R, M*R)`` Hermitian PSD
        stack, cached.
        """
        if self._gram is not None:
            return self._gram
        m_count, rank = self.num_filters, self.rank
        size = m_count * rank
        gram = np.zeros((self.mode_length, size, size), dtype=complex)
        for m in range(m_count):
            for mp in range(m, m_count):
                cross = np.einsum("cil,cil->il",
                                  self._dhat[m].conj(), self._dhat[mp])
                pair = self._qhat[m].conj()[:, :, None] * self._qhat[mp][:, None, :]
                blk = np.tensordot(cross, pair, axes=(1, 0))  # (I_n, R, R)
                gram[:, m * rank:(m + 1) * rank, mp * rank:(mp + 1) * rank] = blk
                if mp > m:
                    gram[:, mp * rank:(mp + 1) * rank, m * rank:(m + 1) * rank] = \
                        blk.conj().transpose(0, 2, 1)
        self._gram = gram
        return gram

    def normal_blocks(self, regularizer):
        """Regularized normal-equation blocks ``W^H W + reg I``.

        Returns the ``(I_n, M*R, M*R)`` stack of Hermitian positive-definite
        systems; ``regularizer`` must be positive.
        """
        if not regularizer > 0:
            raise ValueError(f"regularizer must be positive, got {regularizer}")
        blocks = self.gram_blocks().copy()
        idx = np.arange(blocks.shape[1])
        blocks[:, idx, idx] += regularizer
        return blocks

    def factor_vec_to_blocks(self, vec):
        """Reorder a factor-side vector into per-frequency rows
        ``(I_n, M*R)`` matching :meth:`gram_blocks` column order."""
        x = np.asarray(vec).reshape(self.num_filters, self.rank,
                                    self.mode_length)
        return x.transpose(2, 0, 1).reshape(self.mode_length, -1)

    def blocks_to_factor_vec(self, blocks):
        """Inverse of :meth:`factor_vec_to_blocks`."""
        b = np.asarray(blocks).reshape(self.mode_length, self.num_filters,
                                       self.rank)
        return b.transpose(1, 2, 0).reshape(-1)

    def materialize(self):
        """Dense matrix of the operator, for validation at tiny sizes."""
        cols = [self.apply(e) for e in np.eye(self.factor_size, dtype=complex)]
        return np.stack(cols, axis=1)
