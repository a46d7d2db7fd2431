"""Direct spectral solver for the noise-driven Burgers equation.

The field is truncated to n_galerkin sine modes; the linear part is diagonal
and propagated exactly, the advection term is evaluated through the sparse
interaction table, and the additive noise enters per step.  One step is

    u_n <- exp(beta_n dt) u_n + phi1(beta_n dt) dt NL_n(u) + sigma_n dW_n

with phi1(z) = (e^z - 1)/z, which is unconditionally stable on the stiff
linear part and exact when gamma = sigma = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError
from .model import InteractionTable, ModelParams, Spectrum
from .noise import WienerPath

__all__ = [
    "ModeTrajectory",
    "SpdeStepper",
    "nonlinear_term",
    "step_spde",
    "simulate_spde",
    "field_value",
    "phi1",
    "BLOWUP_THRESHOLD",
]

SOLVER_ID = "galerkin-sine/exponential-euler-maruyama/v1"
BLOWUP_THRESHOLD = 1e8


def phi1(z):
    """(e^z - 1)/z with the removable singularity filled in at 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModeTrajectory:
    """Modal coefficient time series on a uniform grid.

    ``coeffs[k]`` is the coefficient vector at time ``times[k]``; metadata is
    sufficient to re-run the simulation bit-identically.
    """

    times: np.ndarray          # (n_steps + 1,)
    coeffs: np.ndarray         # (n_steps + 1, n_galerkin)
    params: ModelParams
    seed: int
    dt: float
    solver: str = SOLVER_ID
    u0: tuple = ()

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    def resolved(self) -> np.ndarray:
        """Columns of the resolved modes 1..m."""
        return self.coeffs[:, : self.params.m]

    def unresolved(self) -> np.ndarray:
        """Columns of the unresolved modes m+1..n_galerkin."""
        return self.coeffs[:, self.params.m :]


def nonlinear_term(coeffs: np.ndarray, table: InteractionTable) -> np.ndarray:
    """Projected advection term for one coefficient vector.

    Component n sums u_{i1} u_{i2} times the interaction coefficient over all
    pairs with i1 + i2 = n or |i1 - i2| = n; pairs reaching outside the
    truncation are absent from the table and hence dropped.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != table.top:
        raise ValueError(f"expected length-{table.top} vector, got {coeffs.shape}")
    return table.apply(coeffs)


class SpdeStepper:
    """Precomputed stepping data for one (params, dt) pair."""

    def __init__(self, params: ModelParams, dt: float):
        self.params = params
        self.dt = float(dt)
        self.table = InteractionTable.build(params)
        betas = Spectrum.build(params).betas
        self.decay = np.exp(betas * dt)
        self.phidt = phi1(betas * dt) * dt
        self.sigma = np.asarray(params.sigma, dtype=float)

    def step(self, u: np.ndarray, dw: np.ndarray, step_index: int | None = None):
        """One exponential Euler-Maruyama step; dw holds the n_noise increments."""
        u = self.decay * u + self.phidt * self.table.apply(u)
        u[: self.params.n_noise] += self.sigma * dw
        if not np.all(np.isfinite(u)) or np.abs(u).max() > BLOWUP_THRESHOLD:
            raise NonFiniteError(
                f"state left the finite range at step {step_index}", step=step_index
            )
        return u


def step_spde(params: ModelParams, state: np.ndarray, k: int,
              path: WienerPath) -> np.ndarray:
    """Advance one state vector from step k to k + 1."""
    stepper = SpdeStepper(params, path.dt)
    dw = path.increment_block(k, k + 1)[:, 0]
    return stepper.step(np.array(state, dtype=float), dw, step_index=k)


def simulate_spde(params: ModelParams, u0, t_end: float,
                  path: WienerPath) -> ModeTrajectory:
    """Integrate the full system from u0 to t_end on the path's grid.

    t_end must be a non-negative multiple of path.dt.  The increments consumed
    at step k are exactly path.increments(i, k, k+1) for i = 1..n_noise, so a
    reduced run sharing the same path sees identical forcing on the resolved
    modes.
    """
    dt = path.dt
    n_steps = _steps_for(t_end, dt)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (params.n_galerkin,):
        raise ValueError(f"u0 must have shape ({params.n_galerkin},)")
    stepper = SpdeStepper(params, dt)
    coeffs = np.empty((n_steps + 1, params.n_galerkin))
    coeffs[0] = u0
    if n_steps > 0:
        dw = path.increment_block(0, n_steps)
        u = u0.copy()
        for k in range(n_steps):
            u = stepper.step(u, dw[:, k], step_index=k)
            coeffs[k + 1] = u
    times = np.arange(n_steps + 1) * dt
    return ModeTrajectory(times=times, coeffs=coeffs, params=params,
                          seed=path.seed, dt=dt, u0=tuple(u0))


def field_value(params: ModelParams, frame: np.ndarray, x) -> np.ndarray:
    """Evaluate the field u(x) = sum_n u_n e_n(x) on a position grid."""
    frame = np.asarray(frame, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(1, frame.shape[0] + 1, dtype=float)
    basis = np.sqrt(2.0 / params.length) * np.sin(
        np.outer(n, x) * np.pi / params.length
    )
    return frame @ basis


def _steps_for(t_end: float, dt: float) -> int:
    n = round(t_end / dt)
    if n < 0 or abs(n * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not a non-negative multiple of dt={dt}")
    return int(n)
