"""Per-mode solvers and the alternating main loop.

The fit decomposes a signal as ``sum_m d_m (*) K_m`` by cycling over the
tensor modes and, for each mode, minimizing over that mode's stacked
factors while the others stay fixed.  Three mode solvers exist:

* a closed-form ridge solve (squared-norm penalty on the factors),
* an ADMM loop for the l1 penalty, whose quadratic step reuses the same
  closed-form machinery through a proximal term, and
* a conjugate-gradient solve for masked (partially observed) signals,
  where the spatial mask destroys the per-frequency decoupling.

All quadratic solves happen in the unitary DFT domain where the normal
equations split into one small Hermitian system per mode-n frequency.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .convmodel import (SpectralOperator, factor_to_vec, forward_model,
                        signal_to_vec, vec_to_factor, vec_to_signal)
from .tensor import KruskalTensor, fold, unfold
from .transform import dft_factor, dft_nd, idft_factor, idft_nd_complex

__all__ = [
    "SolverConfig",
    "AdmmState",
    "SolveReport",
    "soft_threshold",
    "solve_mode_quadratic",
    "solve_mode_l2",
    "solve_mode_admm",
    "data_term_gradient",
    "lrd_fit",
    "lrd_fit_masked",
]

_TINY = 1e-30


@dataclass
class SolverConfig:
    """Hyperparameters for :func:`lrd_fit` and :func:`lrd_fit_masked`.

    ``reg`` selects the penalty on the activation factors: ``"l1"`` with
    weight ``lam`` (solved by ADMM) or ``"l2"`` with weight ``alpha``
    (closed form).  ``num_filters`` is optional and only cross-checked
    against the dictionary when set.
    """

    reg: str = "l2"
    lam: float = 0.1
    alpha: float = 1e-4
    rank: int = 3
    num_filters: int | None = None
    rho_init: float = 1.0
    rho_adaptive: bool = True
    admm_iters: int = 50
    outer_iters: int = 100
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    tol_outer: float = 1e-9
    cg_tol: float = 1e-8
    cg_max_iters: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.reg not in ("l1", "l2"):
            raise ValueError(f"reg must be 'l1' or 'l2', got {self.reg!r}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if not self.rho_init > 0:
            raise ValueError(f"rho_init must be positive, got {self.rho_init}")
        for name in ("tol_primal", "tol_dual", "tol_outer", "cg_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.admm_iters < 1 or self.outer_iters < 1 or self.cg_max_iters < 1:
            raise ValueError("iteration budgets must be >= 1")


@dataclass
class AdmmState:
    """Warm-startable state of one mode's ADMM loop.

    ``x``, ``y`` and ``u`` are the primary, auxiliary and scaled dual
    stacks, all real of shape ``(M, I_n, R)``; ``u`` is rescaled whenever
    the penalty ``rho`` adapts.
    """

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    rho: float
    iterations: int = 0
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)

    @classmethod
    def cold(cls, x0, rho):
        x0 = np.asarray(x0, dtype=float)
        return cls(x=x0.copy(), y=x0.copy(), u=np.zeros_like(x0), rho=rho)


@dataclass
class SolveReport:
    """Per-sweep diagnostics of a fit.

    ``objectives`` etc. carry one entry per completed outer sweep;
    ``mode_objectives`` is the finer trace with one entry per mode solve.
    """

    objectives: list = field(default_factory=list)
    data_terms: list = field(default_factory=list)
    reg_terms: list = field(default_factory=list)
    mode_objectives: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False
    seconds: float = 0.0
    warnings: list = field(default_factory=list)

    def _record_sweep(self, objective, data_term, reg_term, inner):
        if not np.isfinite(objective):
            raise ValueError(f"objective became non-finite: {objective}")
        self.objectives.append(objective)
        self.data_terms.append(data_term)
        self.reg_terms.append(reg_term)
        self.inner_iters.append(inner)
        self.sweeps += 1


def soft_threshold(v, gamma):
    """Elementwise shrinkage ``sign(v) * max(|v| - gamma, 0)``.

    Proximal map of ``gamma * ||.||_1``; `gamma` must be non-negative.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    v = np.asarray(v)
    return np.sign(v) * np.maximum(np.abs(v) - gamma, 0.0)


def _solve_blocks(op, rhs_blocks, z_blocks, rho):
    """Solve the per-frequency systems (gram + rho I) x = rhs + rho z."""
    blocks = op.normal_blocks(rho)
    rhs = rhs_blocks if z_blocks is None else rhs_blocks + rho * z_blocks
    x = np.linalg.solve(blocks, rhs[..., None])[..., 0]
    return op.blocks_to_factor_vec(x)


def solve_mode_quadratic(op, shat_vec, zhat_vec, rho):
    """Closed-form solve of ``(W^H W + rho I) x = W^H s + rho z``.

    Parameters
    ----------
    op : SpectralOperator
    shat_vec : ndarray
        Spectral signal vector, length ``op.signal_size``.
    zhat_vec : ndarray or None
        Spectral shortcut vector, length ``op.factor_size``; ``None``
        means zero.
    rho : float
        Positive diagonal regularizer.

    Returns
    -------
    ndarray
        Spectral factor vector of length ``op.factor_size``.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    rhs = op.factor_vec_to_blocks(op.apply_adjoint(shat_vec))
    z = None if zhat_vec is None else op.factor_vec_to_blocks(zhat_vec)
    return _solve_blocks(op, rhs, z, rho)


def solve_mode_l2(op, shat_vec, alpha):
    """Ridge mode solve ``(W^H W + alpha I) x = W^H s``."""
    return solve_mode_quadratic(op, shat_vec, None, alpha)


def solve_mode_admm(op, shat_vec, cfg, state=None):
    """ADMM solve of one mode's l1-penalized subproblem.

    Alternates the frequency-domain quadratic step with spatial shrinkage
    and a scaled dual update; the auxiliary (sparse) stack is returned as
    the solution.  Residual-balancing adaptation of the penalty is applied
    when ``cfg.rho_adaptive``.

    Parameters
    ----------
    op : SpectralOperator
    shat_vec : ndarray
        Spectral signal vector.
    cfg : SolverConfig
        Uses ``lam``, ``rho_init``, ``rho_adaptive``, ``admm_iters``,
        ``tol_primal`` and ``tol_dual``.
    state : AdmmState, optional
        Warm start; a cold zero-dual state is created when omitted.

    Returns
    -------
    (ndarray, AdmmState)
        The sparse factor stack ``(M, I_n, R)`` and the updated state.
    """
    dims = (op.num_filters, op.mode_length, op.rank)
    if state is None:
        state = AdmmState.cold(np.zeros(dims), cfg.rho_init)
    x, y, u, rho = state.x, state.y, state.u, state.rho
    rhs = op.factor_vec_to_blocks(op.apply_adjoint(shat_vec))

    for _ in range(cfg.admm_iters):
        zhat = dft_factor(y - u, axis=1)
        xhat_vec = _solve_blocks(op, rhs,
                                 op.factor_vec_to_blocks(factor_to_vec(zhat)),
                                 rho)
        x = idft_factor(vec_to_factor(xhat_vec, *dims), axis=1)
        y_prev = y
        y = soft_threshold(x + u, cfg.lam / rho)
        u = u + x - y

        primal = np.linalg.norm(x - y)
        dual = rho * np.linalg.norm(y - y_prev)
        primal_rel = primal / max(np.linalg.norm(x), np.linalg.norm(y), _TINY)
        dual_rel = dual / max(rho * np.linalg.norm(u), _TINY)
        state.iterations += 1
        state.primal_residuals.append(primal_rel)
        state.dual_residuals.append(dual_rel)
        if primal_rel <= cfg.tol_primal and dual_rel <= cfg.tol_dual:
            break
        if cfg.rho_adaptive:
            # balance the unnormalized residuals; the scaled dual shrinks
            # inversely with rho
            if primal > 10.0 * dual:
                rho *= 2.0
                u = u / 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                u = u * 2.0

    state.x, state.y, state.u, state.rho = x, y, u, rho
    return y.copy(), state


def data_term_gradient(op, shat_vec, x_factor):
    """Gradient of the data term ``0.5 ||W xhat - shat||^2`` with respect
    to the spatial factor stack ``x_factor`` of shape ``(M, I_n, R)``."""
    xhat = dft_factor(np.asarray(x_factor, dtype=float), axis=1)
    resid = op.apply_arrays(xhat) - vec_to_signal(
        shat_vec, op.num_channels, op.mode_length, op.lam)
    ghat = op.adjoint_arrays(resid)
    return idft_factor(ghat, axis=1)


def _as_channel_stack(signal, num_channels):
    """Split a signal into (C, *spatial) form; channels live on the last
    axis when the dictionary is multichannel."""
    signal = np.asarray(signal, dtype=float)
    if num_channels == 1:
        return signal[None], signal.shape
    if signal.ndim < 2 or signal.shape[-1] != num_channels:
        raise ValueError(f"multichannel signal must end with a channel axis "
                         f"of length {num_channels}, got shape {signal.shape}")
    return np.moveaxis(signal, -1, 0), signal.shape[:-1]


def _from_channel_stack(stack, num_channels):
    if num_channels == 1:
        return stack[0]
    return np.moveaxis(stack, 0, -1)


def _forward_stack(dictionary, factors):
    """Forward model from per-mode factor stacks, in (C, *spatial) form."""
    m_count = factors[0].shape[0]
    acts = [KruskalTensor([f[m] for f in factors]) for m in range(m_count)]
    out = forward_model(dictionary, acts)
    return _as_channel_stack(out, dictionary.num_channels)[0]


def _objective(dictionary, factors, s_stack, cfg, mask_stack=None):
    resid = _forward_stack(dictionary, factors) - s_stack
    if mask_stack is not None:
        resid = resid * mask_stack
    data = 0.5 * float(np.sum(resid * resid))
    if cfg.reg == "l1":
        reg = cfg.lam * float(sum(np.sum(np.abs(f)) for f in factors))
    else:
        reg = 0.5 * cfg.alpha * float(sum(np.sum(f * f) for f in factors))
    return data + reg, data, reg


def _init_factors(shape, m_count, rank, seed, signal_norm):
    rng = np.random.default_rng(seed)
    scale = (signal_norm / (m_count * rank)) ** (1.0 / len(shape))
    return [rng.uniform(-0.5, 0.5, size=(m_count, s, rank)) * scale
            for s in shape]


def _factors_from_init(init, shape, m_count, rank):
    init = list(init)
    if len(init) != m_count:
        raise ValueError(f"init has {len(init)} activations for {m_count} "
                         f"filters")
    stacks = []
    for n, s in enumerate(shape):
        stack = np.empty((m_count, s, rank))
        for m, k in enumerate(init):
            f = k.factors[n] if isinstance(k, KruskalTensor) else np.asarray(k[n])
            if f.shape != (s, rank):
                raise ValueError(f"init activation {m} factor {n} has shape "
                                 f"{f.shape}, expected {(s, rank)}")
            stack[m] = f
        stacks.append(stack)
    return stacks


def _spectral_signal_vecs(s_stack, n_modes):
    shat = np.stack([dft_nd(c) for c in s_stack])
    return [signal_to_vec(np.stack([unfold(c, n) for c in shat]))
            for n in range(n_modes)]


def _prepare_fit(signal, dictionary, cfg, init):
    if cfg.num_filters is not None and cfg.num_filters != dictionary.num_filters:
        raise ValueError(f"config expects {cfg.num_filters} filters, "
                         f"dictionary has {dictionary.num_filters}")
    s_stack, shape = _as_channel_stack(signal, dictionary.num_channels)
    if not np.all(np.isfinite(s_stack)):
        raise ValueError("signal contains non-finite values")
    dictionary.check_signal_shape(shape)
    m_count = dictionary.num_filters
    if init is None:
        factors = _init_factors(shape, m_count, cfg.rank, cfg.seed,
                                float(np.linalg.norm(s_stack)))
    else:
        factors = _factors_from_init(init, shape, m_count, cfg.rank)
    return s_stack, shape, factors


def _finish(factors):
    m_count = factors[0].shape[0]
    return [KruskalTensor([f[m].copy() for f in factors])
            for m in range(m_count)]


def lrd_fit(signal, dictionary, cfg, init=None):
    """Decompose `signal` into filters convolved with rank-R activations.

    Sweeps the tensor modes in ascending order; each visit solves that
    mode's subproblem exactly (l2) or by warm-started ADMM (l1).  Stops
    when the relative objective change over a sweep drops below
    ``cfg.tol_outer`` or after ``cfg.outer_iters`` sweeps.

    Parameters
    ----------
    signal : ndarray
        Real tensor; with a multichannel dictionary the trailing axis must
        be the channel axis.
    dictionary : Dictionary
    cfg : SolverConfig
    init : sequence of KruskalTensor or factor lists, optional
        Initial activations, one per filter.  Seeded random factors are
        used when omitted.

    Returns
    -------
    (list of KruskalTensor, SolveReport)
    """
    t0 = time.perf_counter()
    s_stack, shape, factors = _prepare_fit(signal, dictionary, cfg, init)
    shat_vecs = _spectral_signal_vecs(s_stack, len(shape))
    report = SolveReport()
    admm_states = [None] * len(shape)
    m_count = dictionary.num_filters

    prev_obj = _objective(dictionary, factors, s_stack, cfg)[0]
    last_mode_obj = prev_obj
    for _ in range(cfg.outer_iters):
        inner = 0
        for n in range(len(shape)):
            op = SpectralOperator(dictionary, shape, factors, n)
            if cfg.reg == "l2":
                xhat = solve_mode_l2(op, shat_vecs[n], cfg.alpha)
                factors[n] = idft_factor(
                    vec_to_factor(xhat, m_count, shape[n], cfg.rank), axis=1)
                inner += 1
            else:
                y, state = solve_mode_admm(op, shat_vecs[n], cfg,
                                           admm_states[n])
                factors[n] = y
                admm_states[n] = state
                inner += state.iterations
            obj = _objective(dictionary, factors, s_stack, cfg)[0]
            report.mode_objectives.append(obj)
            if cfg.reg == "l2" and obj > last_mode_obj + 1e-9 * max(
                    1.0, abs(last_mode_obj)):
                report.warnings.append(
                    f"l2 objective increased at mode {n}: "
                    f"{last_mode_obj:.6e} -> {obj:.6e}")
            last_mode_obj = obj
        obj, data, reg = _objective(dictionary, factors, s_stack, cfg)
        report._record_sweep(obj, data, reg, inner)
        if abs(prev_obj - obj) <= cfg.tol_outer * max(abs(prev_obj), _TINY):
            report.converged = True
            break
        prev_obj = obj

    report.seconds = time.perf_counter() - t0
    return _finish(factors), report


def _masked_apply(op, mask_stack, x_factor):
    """Spatial masked forward map of one mode's real factor stack."""
    xhat = dft_factor(x_factor, axis=1)
    yhat = op.apply_arrays(xhat)
    out = np.empty_like(mask_stack, dtype=float)
    for c in range(op.num_channels):
        out[c] = idft_nd_complex(fold(yhat[c], op.mode, op.signal_shape)).real
    return out * mask_stack


def _masked_adjoint(op, mask_stack, y_stack):
    """Adjoint of :func:`_masked_apply` on real signal stacks."""
    y = y_stack * mask_stack
    rows = np.stack([unfold(dft_nd(y[c]), op.mode)
                     for c in range(op.num_channels)])
    ghat = op.adjoint_arrays(rows)
    # conjugate symmetry holds up to roundoff for real inputs
    return (np.fft.ifft(ghat, axis=1) * np.sqrt(op.mode_length)).real


def _solve_mode_masked_cg(op, mask_stack, s_obs, alpha, x0, cfg):
    """CG solve of the masked normal equations for one mode.

    Returns the factor stack and the scipy convergence flag (0 means the
    relative tolerance was met)."""
    dims = x0.shape

    def matvec(v):
        x = v.reshape(dims)
        out = _masked_adjoint(op, mask_stack, _masked_apply(op, mask_stack, x))
        return (out + alpha * x).ravel()

    rhs = _masked_adjoint(op, mask_stack, s_obs).ravel()
    lin = scipy.sparse.linalg.LinearOperator(
        (x0.size, x0.size), matvec=matvec, dtype=float)
    sol, info = scipy.sparse.linalg.cg(lin, rhs, x0=x0.ravel(),
                                       rtol=cfg.cg_tol, atol=0.0,
                                       maxiter=cfg.cg_max_iters)
    return sol.reshape(dims), info


def lrd_fit_masked(signal, mask, dictionary, cfg, init=None):
    """Fit the model to the observed entries only and complete the signal.

    The mode subproblems keep the frequency-domain operator but compose it
    with the inverse transform and the spatial mask, so each solve runs
    matrix-free conjugate gradients on the normal equations instead of the
    per-frequency closed form.  Requires ``cfg.reg == "l2"``.

    Parameters
    ----------
    signal : ndarray
        Observed signal; entries where `mask` is False are ignored.
    mask : ndarray of bool
        True marks observed entries; same shape as `signal`.
    dictionary : Dictionary
    cfg : SolverConfig
    init : optional initial activations, as in :func:`lrd_fit`.

    Returns
    -------
    (list of KruskalTensor, ndarray, SolveReport)
        Fitted activations, the completed signal (the model output over
        the full domain), and diagnostics.  CG budget exhaustion is
        recorded in ``report.warnings``, not raised.
    """
    t0 = time.perf_counter()
    if cfg.reg != "l2":
        raise ValueError("masked completion requires the l2 regularizer")
    if not cfg.alpha > 0:
        raise ValueError("masked completion requires alpha > 0")
    mask = np.asarray(mask)
    signal = np.asarray(signal, dtype=float)
    if mask.dtype != bool:
        raise ValueError(f"mask must be boolean, got dtype {mask.dtype}")
    if mask.shape != signal.shape:
        raise ValueError(f"mask shape {mask.shape} != signal shape "
                         f"{signal.shape}")
    if not mask.any():
        raise ValueError("mask has no observed entries")

    s_full, shape, factors = _prepare_fit(
        np.where(mask, signal, 0.0), dictionary, cfg, init)
    mask_stack = _as_channel_stack(mask.astype(float),
                                   dictionary.num_channels)[0]
    s_obs = s_full * mask_stack
    report = SolveReport()

    prev_obj = _objective(dictionary, factors, s_obs, cfg, mask_stack)[0]
    for sweep in range(cfg.outer_iters):
        for n in range(len(shape)):
            op = SpectralOperator(dictionary, shape, factors, n)
            factors[n], info = _solve_mode_masked_cg(
                op, mask_stack, s_obs, cfg.alpha, factors[n], cfg)
            if info != 0:
                report.warnings.append(
                    f"cg budget exhausted at sweep {sweep} mode {n} "
                    f"(info={info})")
            obj = _objective(dictionary, factors, s_obs, cfg, mask_stack)[0]
            report.mode_objectives.append(obj)
        obj, data, reg = _objective(dictionary, factors, s_obs, cfg,
                                    mask_stack)
        report._record_sweep(obj, data, reg, len(shape))
        if abs(prev_obj - obj) <= cfg.tol_outer * max(abs(prev_obj), _TINY):
            report.converged = True
            break
        prev_obj = obj

    activations = _finish(factors)
    completed = forward_model(dictionary, activations)
    report.seconds = time.perf_counter() - t0
    return activations, completed, report
