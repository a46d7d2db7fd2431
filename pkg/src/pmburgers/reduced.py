"""Reduced dynamics of the resolved modes with a high-mode closure.

Two variants share one step rule

    xi_i <- exp(beta_i dt) xi_i + phi1(beta_i dt) dt NL_i(xi + h) + sigma_i dW_i

and differ only in the lift h supplied to the drift: the non-Markovian
variant re-integrates the backward-forward window ending at the current step
(so the drift carries the noise history of [t-T, t]), the averaged variant
substitutes the deterministic quadratic kernel and is Markovian.  The drift
assembles *all* bilinear terms among modes 1..n_noise from the interaction
table; modes above n_noise are treated as zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, NRViolation
from .manifold import PullbackEngine, averaged_h1
from .model import InteractionTable, ModelParams, Spectrum, check_non_resonance
from .noise import WienerPath
from .spde import BLOWUP_THRESHOLD, phi1

__all__ = [
    "ReducedTrajectory",
    "ReducedStepper",
    "step_reduced",
    "simulate_reduced",
    "reconstruct_field",
    "VARIANTS",
]

VARIANTS = ("nonmarkov", "averaged")


@dataclass(frozen=True)
class ReducedTrajectory:
    """Resolved-mode time series plus the lift used at each step."""

    times: np.ndarray      # (n_steps + 1,)
    xi: np.ndarray         # (n_steps + 1, m)
    manifold: np.ndarray   # (n_steps + 1, n_noise - m)
    params: ModelParams
    variant: str
    T: float
    seed: int
    dt: float

    def full_state(self) -> np.ndarray:
        """Concatenated (xi, lift) rows: coefficients of modes 1..n_noise."""
        return np.concatenate([self.xi, self.manifold], axis=1)


class ReducedStepper:
    """Precomputed stepping data for one (params, T, dt, variant) combination."""

    def __init__(self, params: ModelParams, T: float, dt: float, variant: str):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        self.params = params
        self.variant = variant
        self.dt = float(dt)
        m, N = params.m, params.n_noise
        self.m, self.n_noise = m, N
        betas = Spectrum.build(params, count=N).betas
        self.decay = np.exp(betas[:m] * dt)
        self.phidt = phi1(betas[:m] * dt) * dt
        self.sigma_c = np.asarray(params.sigma[:m])
        # resolved-mode drift rows over all pairs with indices <= n_noise
        self.drift_table = InteractionTable.build(params, top=N).restrict(1, m, N)
        self.engine = PullbackEngine(params, T, dt)
        if variant == "nonmarkov" and not check_non_resonance(params).satisfied:
            raise NRViolation(
                "history-dependent closure requires positive non-resonance gaps")
        if variant == "averaged":
            # precompute the quadratic kernel; validates the gaps once
            averaged_h1(params, np.zeros(m))
            kernel = InteractionTable.build(params, top=N).restrict(m + 1, N, m)
            gaps = betas[kernel.i1] + betas[kernel.i2] - betas[kernel.n]
            self._avg_rows = kernel.n - m
            self._avg_i1 = kernel.i1
            self._avg_i2 = kernel.i2
            self._avg_coef = kernel.coef / gaps

    def lift(self, xi: np.ndarray, window_dw: np.ndarray) -> np.ndarray:
        if self.variant == "averaged":
            out = np.zeros(self.n_noise - self.m)
            np.add.at(out, self._avg_rows,
                      self._avg_coef * xi[self._avg_i1] * xi[self._avg_i2])
            return out
        return self.engine.lift(xi, window_dw)

    def drift_nl(self, xi: np.ndarray, lift: np.ndarray) -> np.ndarray:
        u_ext = np.concatenate([xi, lift])
        return self.drift_table.apply(u_ext)[: self.m]

    def step(self, xi: np.ndarray, lift: np.ndarray, dw_c: np.ndarray,
             step_index: int | None = None) -> np.ndarray:
        xi = self.decay * xi + self.phidt * self.drift_nl(xi, lift) \
            + self.sigma_c * dw_c
        if not np.all(np.isfinite(xi)) or np.abs(xi).max() > BLOWUP_THRESHOLD:
            raise NonFiniteError(
                f"reduced state left the finite range at step {step_index}",
                step=step_index,
            )
        return xi


def step_reduced(params: ModelParams, xi, k: int, path: WienerPath, T: float,
                 variant: str = "nonmarkov") -> np.ndarray:
    """Advance the resolved state one step from index k to k + 1."""
    stepper = ReducedStepper(params, T, path.dt, variant)
    xi = np.asarray(xi, dtype=float)
    K = stepper.engine.K
    window = path.increment_block(k - K, k)
    lift = stepper.lift(xi, window)
    dw_c = np.array([path.increment(i, k) for i in range(1, params.m + 1)])
    return stepper.step(xi, lift, dw_c, step_index=k)


def simulate_reduced(params: ModelParams, phi, t_end: float, T: float,
                     path: WienerPath, variant: str = "nonmarkov") -> ReducedTrajectory:
    """Integrate the reduced system from xi(0) = phi up to t_end.

    Shares the path with any paired full run: the drift noise at step k uses
    exactly the increments of components 1..m at index k, and the
    non-Markovian lift consumes the window [t_k - T, t_k] of all components.
    The lift actually used in the drift at step k is recorded at row k (the
    final row holds the lift of the final state, for reconstruction).
    """
    dt = path.dt
    n_steps = round(t_end / dt)
    if n_steps < 0 or abs(n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not a non-negative multiple of dt={dt}")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (params.m,):
        raise ValueError(f"phi must have shape ({params.m},)")
    stepper = ReducedStepper(params, T, dt, variant)
    K = stepper.engine.K
    block = path.increment_block(-K, n_steps)  # column j <-> index j - K
    m, N = params.m, params.n_noise
    xi_out = np.empty((n_steps + 1, m))
    lift_out = np.empty((n_steps + 1, N - m))
    xi = phi.copy()
    xi_out[0] = xi
    for k in range(n_steps):
        window = block[:, k : k + K]
        lift = stepper.lift(xi, window)
        lift_out[k] = lift
        xi = stepper.step(xi, lift, block[:m, k + K], step_index=k)
        xi_out[k + 1] = xi
    lift_out[n_steps] = stepper.lift(xi, block[:, n_steps : n_steps + K])
    times = np.arange(n_steps + 1) * dt
    return ReducedTrajectory(times=times, xi=xi_out, manifold=lift_out,
                             params=params, variant=variant, T=float(T),
                             seed=path.seed, dt=dt)


def reconstruct_field(params: ModelParams, traj: ReducedTrajectory, x) -> np.ndarray:
    """Space-time field from the reduced run: resolved modes plus their lift.

    Returns shape (n_times, n_x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    state = traj.full_state()                       # (n_times, n_noise)
    n = np.arange(1, state.shape[1] + 1, dtype=float)
    basis = np.sqrt(2.0 / params.length) * np.sin(
        np.outer(n, x) * np.pi / params.length
    )
    return state @ basis
