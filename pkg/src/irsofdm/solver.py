"""Joint beamformer / surface-phase design by block coordinate descent.

The average sum-rate maximization is handled through its weighted-MSE
equivalent: per-stream MSE weights, scalar MMSE equalizers and the
beamformers all have closed-form block updates (the beamformer update
carries a water-level multiplier found by bisection on the transmit
power), and the per-element phase updates run a one-dimensional search
on a sub-band-aggregated objective.

Every block update is non-worsening for the traced surrogate: the
weight/equalizer/beamformer updates are exact block optimizers, and a
phase candidate is only accepted when the exact per-element objective
(all subcarriers, no sub-band aggregation) does not increase, so the
iteration trace is monotone up to floating-point noise.
"""

from dataclasses import dataclass
import logging
import math
import time

import numpy as np

from .channel import ChannelSet
from .config import SystemConfig
from .metrics import (
    Solution, effective_rows, mse_table, optimal_equalizers,
    wmmse_surrogate_nats,
)
from .reflection import (
    CarrierGrid, FitParams, PhaseCodebook,
    phase_slope, phase_intercept, reflection_amplitude, response_table,
    wrap_phase, AMPLITUDE_FLOOR,
)

logger = logging.getLogger(__name__)

GOLDEN_LO = 0.382
GOLDEN_HI = 0.618


class SolverError(RuntimeError):
    """Raised when a block update cannot produce a valid result."""


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the block-coordinate solver."""

    max_outer_iters: int = 50
    outer_tol: float = 1e-4          # relative objective change stop
    theta_inner_tol: float = 1e-4    # relative change stop for the phase sweeps
    theta_max_sweeps: int = 10
    mu_tol: float = 1e-9             # absolute power residual of the bisection
    golden_eps: float = 1e-4         # golden-section interval width, rad
    step_h0: float = 0.1             # initial success-failure step, rad
    n_subbands: int | None = None    # None: take the scenario value
    phase_mode: str = "auto"         # auto | continuous | discrete
    phase_bits: int | None = None    # resolution when discrete
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("need at least one outer iteration")
        for name in ("outer_tol", "theta_inner_tol", "mu_tol", "golden_eps", "step_h0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.theta_max_sweeps < 1:
            raise ValueError("need at least one phase sweep")
        if self.phase_mode not in ("auto", "continuous", "discrete"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")
        if self.phase_mode == "discrete" and not (self.phase_bits or 0) >= 1:
            raise ValueError("discrete phase_mode requires phase_bits >= 1")


@dataclass(eq=False)
class BlockState:
    """Mutable optimization state carried across block updates."""

    mse_weights: np.ndarray   # (K, N) positive
    equalizers: np.ndarray    # (K, N) complex
    beamformers: np.ndarray   # (N, N_t, K) complex
    theta: np.ndarray         # (M,)
    trace: list


@dataclass(frozen=True, eq=False)
class PhaseSubproblem:
    """Per-subcarrier quadratic data of the phase block.

    ``quad`` (N, M, M) Hermitian PSD, ``lin`` (N, M); ``resid_sub`` and
    ``diag_sub`` are the sub-band means of the per-element residual
    coupling and of the quadratic diagonal, shapes (N_s, M).
    """

    quad: np.ndarray
    lin: np.ndarray
    resid_sub: np.ndarray
    diag_sub: np.ndarray


# --------------------------------------------------------------------------
# Closed-form scalar blocks
# --------------------------------------------------------------------------

def update_mse_weights(rows, beamformers, equalizers, noise_w):
    """Weight update: reciprocal of the current per-stream MSE."""
    m = mse_table(rows, beamformers, equalizers, noise_w)
    if np.any(m <= 0):
        raise SolverError("nonpositive MSE encountered in the weight update")
    return 1.0 / m


def update_equalizers(rows, beamformers, noise_w):
    """Equalizer update: scalar MMSE receivers (exact block minimizer)."""
    return optimal_equalizers(rows, beamformers, noise_w)


# --------------------------------------------------------------------------
# Beamformer block: regularized LS with a power water-level
# --------------------------------------------------------------------------

def update_beamformers(rows, mse_weights, equalizers, power_budget, mu_tol=1e-9):
    """Closed-form beamformers with multiplier bisection on the power.

    Per subcarrier, w_k = (sum_p rho_p h_p h_p^H + mu I)^{-1} rho_k h_k
    with the equalizer-scaled channels h, and mu >= 0 the smallest value
    keeping the total power within budget (mu = 0 if the unconstrained
    solution is feasible). Returns (beamformers, mu, total_power).
    """
    k_users, n, n_tx = rows.shape[0], rows.shape[1], rows.shape[2]
    # equalizer-scaled channel columns: eq_{k,i} * conj(row_{k,i})
    hs = equalizers[:, :, None] * rows.conj()            # (K, N, N_t)
    lam = np.empty((n, n_tx))
    basis = np.empty((n, n_tx, n_tx), dtype=complex)
    beta = np.empty((n, n_tx, k_users), dtype=complex)
    for i in range(n):
        a_mat = np.einsum("k,kn,km->nm", mse_weights[:, i], hs[:, i, :], hs[:, i, :].conj())
        w_eig, u_mat = np.linalg.eigh(a_mat)
        lam[i] = np.maximum(w_eig, 0.0)
        basis[i] = u_mat
        rhs = (mse_weights[:, i][:, None] * hs[:, i, :]).T  # (N_t, K)
        beta[i] = u_mat.conj().T @ rhs
    coef = np.abs(beta) ** 2                              # (N, N_t, K)

    # spectral components outside the channel span carry no signal; mask
    # them so the mu = 0 (minimum-norm) candidate is well defined
    lam_max = lam.max(axis=1, keepdims=True)
    null = lam <= np.where(lam_max > 0, lam_max, 1.0) * 1e-12

    def total_power(mu, masked):
        denom = np.broadcast_to((lam + mu)[:, :, None] ** 2, coef.shape)
        c = np.where(null[:, :, None], 0.0, coef) if masked else coef
        vals = np.divide(c, denom, out=np.zeros_like(c), where=denom > 0)
        return float(vals.sum())

    def build(mu, masked):
        inv = np.zeros_like(lam)
        pos = (lam + mu) > 0
        inv[pos] = 1.0 / (lam + mu)[pos]
        if masked:
            inv = np.where(null, 0.0, inv)
        return np.einsum("inj,ij,ijk->ink", basis, inv, beta)

    p0 = total_power(0.0, masked=True)
    if p0 <= power_budget:
        return build(0.0, masked=True), 0.0, p0

    hi = 1.0
    for _ in range(300):
        if total_power(hi, masked=False) <= power_budget:
            break
        hi *= 4.0
    else:
        raise SolverError("power bisection could not bracket the multiplier")
    lo, mu, p_mu = 0.0, hi, total_power(hi, masked=False)
    for _ in range(256):
        mu = 0.5 * (lo + hi)
        p_mu = total_power(mu, masked=False)
        if abs(p_mu - power_budget) <= mu_tol:
            break
        if p_mu > power_budget:
            lo = mu
        else:
            hi = mu
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    if p_mu > power_budget + mu_tol:
        raise SolverError(
            f"power bisection left residual {p_mu - power_budget:.3g} above tolerance")
    return build(mu, masked=False), mu, p_mu


# --------------------------------------------------------------------------
# Phase block
# --------------------------------------------------------------------------

def build_phase_subproblem(channels: ChannelSet, state: BlockState, phi_table,
                           n_subbands) -> PhaseSubproblem:
    """Quadratic phase-block data from the current weights/equalizers/beamformers."""
    freq = channels.freq
    rho, eq, w_all = state.mse_weights, state.equalizers, state.beamformers
    n = w_all.shape[0]
    if n % n_subbands:
        raise ValueError("n_subbands must divide the subcarrier count")
    # v[k, i, m, p] = h_r[k, i, m] * conj((G_i w_p)[m])
    gw = np.einsum("imn,inp->imp", freq.g, w_all)               # (N, M, K)
    v = freq.h_r[:, :, :, None] * gw.conj()[None, :, :, :]      # (K, N, M, K)
    rw = rho * np.abs(eq) ** 2                                  # (K, N)
    quad = np.einsum("ki,kimp,kinp->imn", rw, v, v.conj())
    hbar = np.einsum("kin,inp->kip", freq.h_d.conj(), w_all)    # (K, N, K)
    k_users = rho.shape[0]
    v_kk = v[np.arange(k_users), :, :, np.arange(k_users)]      # (K, N, M)
    lin = np.einsum("ki,kim->im", rho * eq, v_kk) \
        - np.einsum("ki,kimp,kip->im", rw, v, hbar)
    resid = _residuals(quad, lin, phi_table)
    s = n // n_subbands
    resid_sub = resid.reshape(n_subbands, s, -1).mean(axis=1)
    diag = np.real(np.einsum("imm->im", quad))
    diag_sub = diag.reshape(n_subbands, s, -1).mean(axis=1)
    return PhaseSubproblem(quad=quad, lin=lin, resid_sub=resid_sub, diag_sub=diag_sub)


def _residuals(quad, lin, phi_table):
    """Residual coupling of every element: (A_i phi_i)_m - A_i(m,m) phi_{i,m} - b_i(m)."""
    y = np.einsum("imn,in->im", quad, phi_table)
    diag = np.einsum("imm->im", quad)
    return y - diag * phi_table - lin


def _band_values(fit: FitParams, freqs_ghz, theta):
    """Reflection amplitude/phase of the fit on a frequency vector.

    ``theta`` may be scalar or 1-d; returns arrays shaped
    broadcast(theta, 1) x len(freqs).
    """
    theta = np.asarray(theta, dtype=float)
    slope = np.atleast_1d(phase_slope(fit, theta))[..., None]
    intercept = np.atleast_1d(phase_intercept(fit, theta))[..., None]
    g = wrap_phase(slope * freqs_ghz + intercept)
    a, b, c = fit.a, fit.b, fit.c
    amp = np.clip(a[0] * g * g + b[0] * g + c[0], AMPLITUDE_FLOOR, 1.0)
    return amp, g


def _band_objective(fit, freqs_ghz, resid, alpha):
    """Objective theta -> sum_i 2|resid_i| F cos(angle(resid_i) - G) + alpha_i F^2."""
    mag = 2.0 * np.abs(resid)
    ang = np.angle(resid)

    def g_of(theta):
        amp, phs = _band_values(fit, freqs_ghz, theta)
        vals = mag * amp * np.cos(ang - phs) + alpha * amp * amp
        out = vals.sum(axis=-1)
        return float(out[0]) if out.size == 1 else out

    return g_of


def subband_objective(sub: PhaseSubproblem, fit: FitParams, grid: CarrierGrid,
                      m, theta):
    """Sub-band-aggregated search objective of element ``m`` at ``theta``.

    With one sub-band per subcarrier this equals the exact per-element
    objective; accepts scalar or array ``theta``.
    """
    freqs = grid.subband_frequencies(sub.resid_sub.shape[0])
    fn = _band_objective(fit, freqs, sub.resid_sub[:, m], sub.diag_sub[:, m])
    return fn(theta)


def three_phase_minimize(fn, lo, hi, start, step, eps):
    """Bracket/golden-section/boundary minimization of a scalar function.

    Phase 1 narrows a bracket by a success-failure walk with doubling
    step from ``start``; phase 2 golden-sections (0.382/0.618) the
    bracket down to width ``eps``; phase 3 compares the interior result
    against both interval ends (ties resolved interior first, then lo).
    """
    start = min(max(start, lo), hi)
    t1, t2 = start, start + step
    g1, g2 = fn(t1), fn(t2)
    if g2 >= g1:  # reverse direction
        step = -step
        t1, t2, g1, g2 = t2, t1, g2, g1
    t3 = t2 + step
    g3 = fn(t3)
    for _ in range(80):
        if g2 <= g3:
            break
        step *= 2.0
        t1, g1 = t2, g2
        t2, g2 = t3, g3
        t3 = t2 + step
        g3 = fn(t3)
    b_lo, b_hi = min(t1, t3), max(t1, t3)
    b_lo, b_hi = max(b_lo, lo), min(b_hi, hi)
    if b_lo > b_hi:  # walk ran past the domain; fall back to the near edge
        b_lo = b_hi = lo if t3 < lo else hi

    while b_hi - b_lo > eps:
        il = b_lo + GOLDEN_LO * (b_hi - b_lo)
        ir = b_lo + GOLDEN_HI * (b_hi - b_lo)
        if fn(il) <= fn(ir):
            b_hi = ir
        else:
            b_lo = il
    best = 0.5 * (b_lo + b_hi)
    g_best = fn(best)
    for cand in (lo, hi):
        g_cand = fn(cand)
        if g_cand < g_best:
            best, g_best = cand, g_cand
    return best


_COARSE_STARTS = np.linspace(-np.pi, np.pi, 129)


def _seeded_minimize(fn, start, opts: SolverOptions):
    """Three-phase search started from the best of a coarse scan and ``start``.

    The objective is typically a double-peak-trough curve whose troughs
    are O(1) rad wide, but a walk from an arbitrary start can slide into
    a boundary trough and miss a deeper interior one; the bracketing
    phase is therefore seeded at the argmin of a coarse scan, and the
    result is never worse than any scanned point.
    """
    coarse = fn(_COARSE_STARTS)
    idx = int(np.argmin(coarse))
    seed, g_seed = float(_COARSE_STARTS[idx]), float(coarse[idx])
    g_start = fn(start)
    if g_start < g_seed:
        seed, g_seed = start, g_start
    out = three_phase_minimize(fn, -np.pi, np.pi, seed, opts.step_h0, opts.golden_eps)
    if fn(out) > g_seed:
        out = seed
    return out


def search_phase_continuous(sub: PhaseSubproblem, fit: FitParams, grid: CarrierGrid,
                            m, opts: SolverOptions, start=0.0):
    """Continuous per-element phase search on the sub-band objective."""
    freqs = grid.subband_frequencies(sub.resid_sub.shape[0])
    fn = _band_objective(fit, freqs, sub.resid_sub[:, m], sub.diag_sub[:, m])
    return _seeded_minimize(fn, start, opts)


def search_phase_discrete(sub: PhaseSubproblem, fit: FitParams, grid: CarrierGrid,
                          m, codebook):
    """Exhaustive per-element search over a phase codebook (ties: smallest value)."""
    values = np.asarray(codebook.values if isinstance(codebook, PhaseCodebook) else codebook,
                        dtype=float)
    if values.size == 0:
        raise ValueError("empty phase codebook")
    g_vals = subband_objective(sub, fit, grid, m, values)
    return float(values[int(np.argmin(g_vals))])


def ideal_phase_closed_form(resid_total):
    """Exact per-element minimizer under unit-modulus frequency-flat reflection.

    Minimizes 2 Re{resid_total * exp(-j theta)}: the antipode of the
    residual-sum angle, wrapped to (-pi, pi]. A zero residual leaves any
    theta optimal; the angle of 0 is taken as 0, so the result is pi.
    """
    return float(wrap_phase(np.angle(resid_total) + np.pi))


def _response_column(fit, grid, theta_m, model):
    return response_table(fit, grid, float(theta_m), model)[:, 0]


def update_phases(channels: ChannelSet, state: BlockState, phi_table,
                  opts: SolverOptions, model="practical", codebook=None,
                  n_subbands=None):
    """Element-wise phase sweeps until the phase-block objective settles.

    Each element is updated by the model's one-dimensional search; a
    candidate is accepted only if the exact (per-subcarrier) element
    objective does not increase, which keeps the outer trace monotone
    even though the search itself runs on the sub-band surrogate.
    Returns (theta, phi_table, n_sweeps).
    """
    cfg = channels.config
    fit, grid = cfg.fit, cfg.grid()
    n_subbands = n_subbands or cfg.n_subbands
    sub = build_phase_subproblem(channels, state, phi_table, n_subbands)
    quad, lin = sub.quad, sub.lin
    n, m_el = lin.shape
    s = n // n_subbands
    freqs = grid.frequencies()
    fs = grid.subband_frequencies(n_subbands)
    diag = np.real(np.einsum("imm->im", quad))
    theta = state.theta.copy()
    phi = phi_table.copy()
    y = np.einsum("imn,in->im", quad, phi)

    def block_objective():
        return float((np.real(np.sum(phi.conj() * y))
                      - 2.0 * np.real(np.sum(phi.conj() * lin))) / n)

    prev = block_objective()
    sweeps = 0
    for sweeps in range(1, opts.theta_max_sweeps + 1):
        for m in range(m_el):
            resid = y[:, m] - diag[:, m] * phi[:, m] - lin[:, m]
            alpha = diag[:, m]
            if model == "ideal":
                total = resid.sum()
                if codebook is not None:
                    vals = np.asarray(codebook.values, dtype=float)
                    cand = float(vals[int(np.argmin(np.real(total * np.exp(-1j * vals))))])
                else:
                    cand = ideal_phase_closed_form(total)
                cand_col = np.exp(1j * cand) * np.ones(n)
            else:
                if model == "amplitude_only":
                    def fn(t, _r=resid, _a=alpha):
                        return _flat_objective(fit, grid.carrier_ghz, _r, _a, t)
                else:
                    resid_band = resid.reshape(n_subbands, s).mean(axis=1)
                    alpha_band = alpha.reshape(n_subbands, s).mean(axis=1)
                    fn = _band_objective(fit, fs, resid_band, alpha_band)
                if codebook is not None:
                    vals = np.asarray(codebook.values, dtype=float)
                    cand = float(vals[int(np.argmin(fn(vals)))])
                else:
                    cand = _seeded_minimize(fn, theta[m], opts)
                    if fn(cand) > fn(theta[m]):  # never leave the warm start worse off
                        cand = theta[m]
                cand_col = _response_column(fit, grid, cand, model)
            if cand == theta[m]:
                continue
            # exact-objective safeguard: the surrogate may disagree with the
            # full per-subcarrier objective; only accept strict improvements
            old_col = phi[:, m]
            val_new = float(2.0 * np.real(resid @ cand_col.conj())
                            + alpha @ np.abs(cand_col) ** 2)
            val_old = float(2.0 * np.real(resid @ old_col.conj())
                            + alpha @ np.abs(old_col) ** 2)
            if val_new >= val_old:
                continue
            y += quad[:, :, m] * (cand_col - old_col)[:, None]
            phi[:, m] = cand_col
            theta[m] = cand
        cur = block_objective()
        if abs(cur - prev) <= opts.theta_inner_tol * max(abs(prev), 1e-12):
            prev = cur
            break
        prev = cur
    return theta, phi, sweeps


def _flat_objective(fit, carrier_ghz, resid, alpha, theta):
    """Frequency-flat element objective: amplitude at the carrier, phase theta."""
    theta = np.asarray(theta, dtype=float)
    amp = reflection_amplitude(fit, theta, carrier_ghz)
    phi = amp * np.exp(1j * theta)
    total = resid.sum()
    out = 2.0 * np.real(total * np.conj(phi)) + alpha.sum() * amp * amp
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Initialization and the outer loop
# --------------------------------------------------------------------------

def mmse_initialize(rows, power_budget, noise_w):
    """Per-subcarrier MMSE beamformers, globally scaled to the power budget."""
    k_users, n, n_tx = rows.shape
    w_all = np.empty((n, n_tx, k_users), dtype=complex)
    eye = np.eye(n_tx)
    for i in range(n):
        h_cols = rows[:, i, :].conj().T                     # (N_t, K)
        psi = h_cols @ h_cols.conj().T + noise_w * eye
        w_all[i] = np.linalg.solve(psi, h_cols)
    total = np.sum(np.abs(w_all) ** 2)
    if total <= 0:
        raise SolverError("MMSE initialization produced an all-zero beamformer")
    return w_all * math.sqrt(power_budget / total)


def _resolve_phase_setup(config: SystemConfig, opts: SolverOptions):
    if opts.phase_mode == "continuous":
        return None
    bits = opts.phase_bits if opts.phase_bits is not None else config.phase_bits
    if opts.phase_mode == "discrete":
        return PhaseCodebook(bits)
    return PhaseCodebook(bits) if bits is not None else None


def initial_theta(config: SystemConfig, codebook, rng):
    """Uniform phase initialization, over the codebook when discrete."""
    m_el = config.n_elements
    if codebook is not None:
        return rng.choice(codebook.values, size=m_el)
    return rng.uniform(-np.pi, np.pi, size=m_el)


def solve(channels: ChannelSet, config: SystemConfig | None = None,
          opts: SolverOptions | None = None, model="practical",
          theta0=None, freeze_theta=False):
    """Run the full block-coordinate design.

    Returns (Solution, trace) where the trace holds the surrogate
    objective (bits/s/Hz; equal to the average sum-rate at the block
    optima) after initialization and after every outer iteration.
    """
    config = config or channels.config
    opts = opts or SolverOptions()
    if model not in ("practical", "ideal", "amplitude_only", "none"):
        raise ValueError(f"unknown design model {model!r}")
    noise_w, power = config.noise_w, config.power_w
    fit, grid = config.fit, config.grid()
    n_subbands = opts.n_subbands or config.n_subbands
    codebook = _resolve_phase_setup(config, opts)
    rng = np.random.default_rng(opts.rng_seed)

    theta = (np.asarray(theta0, dtype=float) if theta0 is not None
             else initial_theta(config, codebook, rng))
    phi = response_table(fit, grid, theta, model)
    rows = effective_rows(channels.freq, phi)
    w_all = mmse_initialize(rows, power, noise_w)
    eq = update_equalizers(rows, w_all, noise_w)
    rho = update_mse_weights(rows, w_all, eq, noise_w)
    state = BlockState(mse_weights=rho, equalizers=eq, beamformers=w_all,
                       theta=theta, trace=[])
    state.trace.append(wmmse_surrogate_nats(rows, w_all, rho, eq, noise_w))

    t_start = time.perf_counter()
    for it in range(1, opts.max_outer_iters + 1):
        state.mse_weights = update_mse_weights(rows, state.beamformers,
                                               state.equalizers, noise_w)
        state.equalizers = update_equalizers(rows, state.beamformers, noise_w)
        state.beamformers, mu, used = update_beamformers(
            rows, state.mse_weights, state.equalizers, power, opts.mu_tol)
        if used > power + opts.mu_tol or (mu > 0 and abs(used - power) > opts.mu_tol):
            raise SolverError(
                f"power constraint violated after beamformer update: {used} vs {power}")
        if not freeze_theta and model != "none":
            state.theta, phi, sweeps = update_phases(
                channels, state, phi, opts, model=model, codebook=codebook,
                n_subbands=n_subbands)
            rows = effective_rows(channels.freq, phi)
        else:
            sweeps = 0
        objective = wmmse_surrogate_nats(rows, state.beamformers, state.mse_weights,
                                         state.equalizers, noise_w)
        state.trace.append(objective)
        logger.info(
            "iter=%d objective=%.12g power=%.12g mu=%.3g theta_sweeps=%d wall_ms=%.1f",
            it, objective, used, mu, sweeps,
            1e3 * (time.perf_counter() - t_start))
        prev = state.trace[-2]
        if abs(objective - prev) <= opts.outer_tol * max(abs(prev), 1e-12):
            break
    solution = Solution(weights=state.beamformers, theta=state.theta, model_tag=model)
    solution.check_power(power, tol=opts.mu_tol + 1e-9)
    return solution, np.asarray(state.trace)
