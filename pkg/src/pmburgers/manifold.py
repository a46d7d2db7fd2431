"""High-mode closures from backward-forward integration of the noise history.

Two routes to the same object.  The operational route integrates the
partially-coupled backward-forward system: the resolved modes run *backward*
over [t-T, t] from a terminal value xi under their linear stochastic dynamics,
and the unresolved modes run *forward* over [t, t+T] from zero, forced by the
time-shifted resolved history and by the correspondingly shifted noise.  The
value at t+T is the lift used by the reduced systems.

The analytic route evaluates the closed-form expansion of the same pullback
value: a stationary Ornstein-Uhlenbeck term per noised high mode plus, per
interaction triple, coefficients that are constant, linear and quadratic in
xi, each an exponentially-weighted functional of the past noise.  Improper
time integrals are truncated to [-T_past, 0]; the constant/linear kernels use
left-endpoint Riemann sums on the step grid (matching the Euler order of the
integrator), while the OU term is accumulated as the same discrete stochastic
convolution the forward leg produces, so the two routes agree up to O(dt) at
matched horizons.

The averaged closure replaces the random expansion by its noise-free limit,
the deterministic quadratic kernel 1/(beta_{i1} + beta_{i2} - beta_n) per
interaction pair.  (For diagonal pairs the random coefficients are not
exactly centered, so this differs slightly from the true expectation; the
statistics tests quantify that.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NRViolation, StabilityViolation
from .model import InteractionTable, ModelParams, Spectrum, check_non_resonance
from .noise import WienerPath
from .spde import phi1

__all__ = [
    "PullbackEngine",
    "AnalyticCoefficients",
    "backward_leg",
    "forward_leg",
    "pullback_hs",
    "analytic_coefficients",
    "analytic_h1",
    "averaged_h1",
    "default_t_past",
]


def _reverse_cumsum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.flip(np.cumsum(np.flip(a, axis=axis), axis=axis), axis=axis)


def _window_steps(T: float, dt: float) -> int:
    k = round(T / dt)
    if k <= 0 or abs(k * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"window T={T} must be a positive multiple of dt={dt}")
    return int(k)


class PullbackEngine:
    """Window integrator for one (params, T, dt) combination.

    Re-used across many anchor times: all exponential weights depend only on
    the window shape, so a reduced-model run or a defect sweep pays the setup
    cost once.
    """

    def __init__(self, params: ModelParams, T: float, dt: float):
        self.params = params
        self.T = float(T)
        self.dt = float(dt)
        self.K = _window_steps(T, dt)
        m, N = params.m, params.n_noise
        self.m, self.n_noise = m, N
        betas = Spectrum.build(params, count=max(N, params.n_galerkin)).betas
        self.beta_c = betas[:m]
        self.beta_s = betas[m:N]
        # grid tau_0..tau_K = -T..0 relative to the anchor
        self.tau = (np.arange(self.K + 1) - self.K) * self.dt
        tl = self.tau[: self.K]
        self.bwd_decay = np.exp(np.outer(self.beta_c, self.tau))   # (m, K+1)
        # weight of the increment over [tau_k, tau_{k+1}] in the unrolled
        # reverse recursion: its right endpoint, so that re-running the
        # forward update recovers the terminal value exactly
        self.bwd_inv = np.exp(-np.outer(self.beta_c, tl + self.dt))  # (m, K)
        # forward-leg weight on the j-th increment/forcing sample:
        # exp(beta_n dt (K-1-j)) = exp(-beta_n (tau_j + dt))
        self.fwd_w = np.exp(-np.outer(self.beta_s, tl + self.dt))  # (N-m, K)
        self.phidt = phi1(self.beta_s * self.dt) * self.dt
        self.sigma_c = np.asarray(params.sigma[:m])
        self.sigma_s = np.asarray(params.sigma[m:N])
        # forcing pairs: resolved x resolved -> unresolved rows, grouped by row
        table = InteractionTable.build(params, top=N).restrict(m + 1, N, m)
        self._groups = []
        for row in np.unique(table.n - m):
            sel = (table.n - m) == row
            self._groups.append((int(row), table.i1[sel], table.i2[sel],
                                 table.coef[sel][:, None]))

    def history(self, xi: np.ndarray, dw_c: np.ndarray) -> np.ndarray:
        """Backward-leg values at tau_0..tau_K; column K equals xi exactly.

        The reverse step y(s-dt) = exp(-beta dt) (y(s) - sigma dW) is the
        algebraic inverse of the forward exponential Euler update, unrolled
        here into one vectorized reverse cumulative sum.
        """
        S = _reverse_cumsum(self.bwd_inv * (self.sigma_c[:, None] * dw_c), axis=1)
        y = np.empty((self.m, self.K + 1))
        y[:, : self.K] = self.bwd_decay[:, : self.K] * (xi[:, None] - S)
        y[:, self.K] = xi
        return y

    def forcing(self, history_left: np.ndarray) -> np.ndarray:
        """Bilinear forcing rows for unresolved modes, per history sample."""
        F = np.zeros((self.n_noise - self.m, history_left.shape[1]))
        for row, i1, i2, coef in self._groups:
            F[row] = (coef * history_left[i1] * history_left[i2]).sum(axis=0)
        return F

    def lift(self, xi: np.ndarray, dw: np.ndarray) -> np.ndarray:
        """Forward-leg terminal value for window increments dw (N, K)."""
        y = self.history(np.asarray(xi, dtype=float), dw[: self.m])
        F = self.forcing(y[:, : self.K])
        inner = self.phidt[:, None] * F + self.sigma_s[:, None] * dw[self.m :]
        return (self.fwd_w * inner).sum(axis=1)

    def lift_at(self, xi: np.ndarray, k_anchor: int, path: WienerPath) -> np.ndarray:
        dw = path.increment_block(k_anchor - self.K, k_anchor)
        return self.lift(xi, dw)


def backward_leg(params: ModelParams, xi, t: float, T: float,
                 path: WienerPath) -> np.ndarray:
    """Resolved-mode history on [t-T, t] ending exactly at xi.

    Returns shape (m, K+1); column j is the value at t - T + j dt.  Each mode
    solves its linear stochastic equation backward from the terminal value,
    consuming the path increments of the window.
    """
    engine = PullbackEngine(params, T, path.dt)
    k_anchor = _anchor_index(t, path.dt)
    dw = path.increment_block(k_anchor - engine.K, k_anchor)
    return engine.history(np.asarray(xi, dtype=float), dw[: params.m])


def forward_leg(params: ModelParams, history, t: float, T: float,
                path: WienerPath) -> np.ndarray:
    """Unresolved-mode value at t+T from a resolved history on [t-T, t].

    Integrates forward from zero with exponential Euler; the forcing at
    inner time s is the bilinear interaction of the history at s - T, and the
    noise increments are the window's, shifted by -T.
    """
    engine = PullbackEngine(params, T, path.dt)
    history = np.asarray(history, dtype=float)
    if history.shape != (params.m, engine.K + 1):
        raise ValueError(f"history must have shape ({params.m}, {engine.K + 1})")
    k_anchor = _anchor_index(t, path.dt)
    dw = path.increment_block(k_anchor - engine.K, k_anchor)
    F = engine.forcing(history[:, : engine.K])
    inner = engine.phidt[:, None] * F + engine.sigma_s[:, None] * dw[params.m :]
    return (engine.fwd_w * inner).sum(axis=1)


def pullback_hs(params: ModelParams, xi, t: float, T: float,
                path: WienerPath) -> np.ndarray:
    """On-the-fly lift of the resolved state xi at anchor time t.

    Composition of the backward and forward legs over the window of length T;
    returns the unresolved components m+1..n_noise.  This is the value the
    non-Markovian reduced system substitutes for the manifold function.
    """
    engine = PullbackEngine(params, T, path.dt)
    return engine.lift_at(np.asarray(xi, dtype=float), _anchor_index(t, path.dt),
                          path)


def _anchor_index(t: float, dt: float) -> int:
    k = round(t / dt)
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"anchor time t={t} is not on the dt={dt} grid")
    return int(k)


def default_t_past(params: ModelParams, T: float) -> float:
    """Truncation horizon for the improper integrals: max(T, 10/min-gap)."""
    report = check_non_resonance(params)
    return max(float(T), 10.0 / report.min_gap)


@dataclass(frozen=True)
class AnalyticCoefficients:
    """Quadrature-evaluated coefficients of the closed-form expansion.

    For each unresolved mode n (rows) the lift is

        Z_n + sum_{i1,i2} (A + B xi_{i1} + C xi_{i2} + D xi_{i1} xi_{i2})
                          * coef(i1, i2, n)

    A, B, C collect the noise-history functionals (sums of the eight kernel
    integrals M1..M8); D is deterministic.  ``d_exact`` is the untruncated
    value 1/gap, ``d_quad`` the truncated left-endpoint quadrature actually
    used when comparing against a finite-horizon pullback.  Arrays are
    indexed [n - m - 1, i1 - 1, i2 - 1]; entries for absent interactions are
    zero (and d_* entries are zero there too, never evaluated).
    """

    params: ModelParams
    t_past: float
    dt: float
    z: np.ndarray        # (N - m,)
    a: np.ndarray        # (N - m, m, m)
    b: np.ndarray
    c: np.ndarray
    d_exact: np.ndarray
    d_quad: np.ndarray
    m_terms: dict        # (j, n, i1, i2) -> M_j value, j = 1..8

    def evaluate(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        params = self.params
        table = InteractionTable.build(params, top=params.n_noise).restrict(
            params.m + 1, params.n_noise, params.m
        )
        out = self.z.copy()
        rows = table.n - params.m
        coeff = (
            self.a[rows, table.i1, table.i2]
            + self.b[rows, table.i1, table.i2] * xi[table.i1]
            + self.c[rows, table.i1, table.i2] * xi[table.i2]
            + self.d_quad[rows, table.i1, table.i2] * xi[table.i1] * xi[table.i2]
        )
        np.add.at(out, rows, coeff * table.coef)
        return out


def analytic_coefficients(params: ModelParams, path: WienerPath, t_past: float,
                          anchor: float = 0.0) -> AnalyticCoefficients:
    """Evaluate Z and the M/D kernels over the truncated past [-t_past, 0].

    The outer improper integrals and the inner history integrals are
    left-endpoint Riemann sums on the path grid; the OU term Z is the
    discrete stochastic convolution with the forward integrator's weights.
    Requires the non-resonance gaps to be positive.
    """
    report = check_non_resonance(params)
    if not report.satisfied:
        bad = {k: v for k, v in report.gaps.items() if v <= 0}
        raise NRViolation(f"non-resonance gaps not positive: {bad}")
    dt = path.dt
    K = _window_steps(t_past, dt)
    m, N = params.m, params.n_noise
    betas = Spectrum.build(params, count=N).betas
    beta_c, beta_s = betas[:m], betas[m:N]
    sig = np.asarray(params.sigma)
    k_anchor = _anchor_index(anchor, dt)
    dw = path.increment_block(k_anchor - K, k_anchor)      # (N, K)
    tau = (np.arange(K + 1) - K) * dt
    tl = tau[:K]
    # W at the grid points, anchored at the window's right edge (the fiber
    # convention W(anchor) = 0); left endpoints only.
    W = -_reverse_cumsum(dw, axis=1)                        # (N, K): W(tau_j)
    # inner history integrals I_i(j) = int_{tau_j}^0 e^{(tau_j - r) beta_i} W_i(r) dr
    inv = np.exp(-np.outer(beta_c, tl))
    I = dt * np.exp(np.outer(beta_c, tl)) * _reverse_cumsum(inv * W[:m], axis=1)

    z = sig[m:N] * (np.exp(-np.outer(beta_s, tl + dt)) * dw[m:]).sum(axis=1)

    shape = (N - m, m, m)
    a = np.zeros(shape)
    b = np.zeros(shape)
    c = np.zeros(shape)
    d_exact = np.zeros(shape)
    d_quad = np.zeros(shape)
    m_terms = {}
    table = InteractionTable.build(params, top=N).restrict(m + 1, N, m)
    for i1, i2, row in zip(table.i1, table.i2, table.n - m):
        bn = beta_s[row]
        b1, b2 = beta_c[i1], beta_c[i2]
        s1, s2 = sig[i1], sig[i2]
        ewn = np.exp(-bn * tl)
        ew1 = np.exp((b1 - bn) * tl)
        ew2 = np.exp((b2 - bn) * tl)
        m1 = s1 * s2 * dt * (ewn * W[i1] * W[i2]).sum()
        m2 = -s1 * s2 * b2 * dt * (ewn * W[i1] * I[i2]).sum()
        m3 = -s1 * s2 * b1 * dt * (ewn * W[i2] * I[i1]).sum()
        m4 = s1 * s2 * b1 * b2 * dt * (ewn * I[i1] * I[i2]).sum()
        m5 = s2 * dt * (ew1 * W[i2]).sum()
        m6 = -s2 * b2 * dt * (ew1 * I[i2]).sum()
        m7 = s1 * dt * (ew2 * W[i1]).sum()
        m8 = -s1 * b1 * dt * (ew2 * I[i1]).sum()
        gap = b1 + b2 - bn
        a[row, i1, i2] = m1 + m2 + m3 + m4
        b[row, i1, i2] = m5 + m6
        c[row, i1, i2] = m7 + m8
        d_exact[row, i1, i2] = 1.0 / gap
        d_quad[row, i1, i2] = dt * np.exp(gap * tl).sum()
        for j, val in enumerate((m1, m2, m3, m4, m5, m6, m7, m8), start=1):
            m_terms[(j, int(row) + m + 1, int(i1) + 1, int(i2) + 1)] = float(val)
    return AnalyticCoefficients(params=params, t_past=float(t_past), dt=dt,
                                z=z, a=a, b=b, c=c, d_exact=d_exact,
                                d_quad=d_quad, m_terms=m_terms)


def analytic_h1(params: ModelParams, xi, path: WienerPath, t_past: float,
                anchor: float = 0.0) -> np.ndarray:
    """Closed-form lift evaluated by quadrature over the truncated past."""
    return analytic_coefficients(params, path, t_past, anchor=anchor).evaluate(xi)


def averaged_h1(params: ModelParams, xi) -> np.ndarray:
    """Expectation-based closure: the deterministic quadratic kernel.

    Component n is sum over interaction pairs of
    coef(i1, i2, n) xi_{i1} xi_{i2} / (beta_{i1} + beta_{i2} - beta_n);
    raises NRViolation when a needed gap is not positive.
    """
    xi = np.asarray(xi, dtype=float)
    m, N = params.m, params.n_noise
    betas = Spectrum.build(params, count=N).betas
    if np.any(betas[m:] >= 0):
        raise StabilityViolation("unresolved modes must be linearly stable")
    table = InteractionTable.build(params, top=N).restrict(m + 1, N, m)
    gaps = betas[table.i1] + betas[table.i2] - betas[table.n]
    if np.any(gaps <= 0):
        raise NRViolation("non-positive gap in the deterministic kernel")
    out = np.zeros(N - m)
    np.add.at(out, table.n - m, table.coef * xi[table.i1] * xi[table.i2] / gaps)
    return out
