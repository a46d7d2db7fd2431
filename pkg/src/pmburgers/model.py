"""Spectral structure of the linear-plus-advection operator on (0, l).

The linear part ``nu*u_xx + lam*u`` with Dirichlet boundary conditions is
diagonal in the sine basis ``e_n(x) = sqrt(2/l) sin(n pi x / l)`` with
eigenvalues ``beta_n = lam - nu n^2 pi^2 / l^2``.  The advection term
``-gamma u u_x`` projects onto that basis with a sparse set of bilinear
interaction coefficients; everything downstream (full solver, backward-forward
closures, reduced systems) is assembled from these two ingredients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import StabilityViolation

__all__ = [
    "ModelParams",
    "Spectrum",
    "InteractionTable",
    "NonResonanceReport",
    "eigenvalue",
    "eigenfunction_value",
    "interaction_coefficient",
    "check_non_resonance",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and spectral parameters of one model instance.

    Parameters
    ----------
    nu : float
        Viscosity, > 0.
    lam : float
        Linear instability parameter.  ``lam_c = nu*pi^2/l^2`` is the value
        at which the leading eigenvalue changes sign.
    gamma : float
        Advection strength, >= 0 (zero switches the coupling off, which the
        linear-limit tests rely on).
    length : float
        Domain length l, > 0.
    m : int
        Number of resolved modes (>= 1).
    n_noise : int
        Number of noise-forced modes N, with m < N.
    n_galerkin : int
        Mode count of the full spectral solver, >= n_noise.
    sigma : tuple of float
        Per-mode noise amplitudes sigma_1..sigma_N, all >= 0.
    """

    nu: float
    lam: float
    gamma: float
    length: float
    m: int = 2
    n_noise: int = 10
    n_galerkin: int = 32
    sigma: tuple = field(default_factory=tuple)

    def __post_init__(self):
        problems = []
        if not self.nu > 0:
            problems.append("nu must be > 0")
        if self.gamma < 0:
            problems.append("gamma must be >= 0")
        if not self.length > 0:
            problems.append("length must be > 0")
        if self.m < 1:
            problems.append("m must be >= 1")
        if not self.m < self.n_noise:
            problems.append("need m < n_noise")
        if not self.n_noise <= self.n_galerkin:
            problems.append("need n_noise <= n_galerkin")
        sigma = tuple(float(s) for s in self.sigma)
        if len(sigma) != self.n_noise:
            problems.append(
                f"sigma must have n_noise={self.n_noise} entries, got {len(sigma)}"
            )
        if any(s < 0 for s in sigma):
            problems.append("sigma entries must be >= 0")
        if problems:
            raise ValueError("bad ModelParams: " + "; ".join(problems))
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def with_uniform_sigma(cls, nu, lam, gamma, length, sigma, m=2, n_noise=10,
                           n_galerkin=32):
        """All noised modes share one amplitude (the usual experiment setup)."""
        return cls(nu=nu, lam=lam, gamma=gamma, length=length, m=m,
                   n_noise=n_noise, n_galerkin=n_galerkin,
                   sigma=(float(sigma),) * n_noise)

    @property
    def lambda_c(self):
        """Critical value of lam at which beta_1 crosses zero."""
        return self.nu * math.pi ** 2 / self.length ** 2

    def sigma_full(self):
        """Noise amplitudes padded with zeros up to n_galerkin."""
        out = np.zeros(self.n_galerkin)
        out[: self.n_noise] = self.sigma
        return out

    def with_lam_ratio(self, ratio):
        return replace(self, lam=ratio * self.lambda_c)


def eigenvalue(params: ModelParams, n: int) -> float:
    """beta_n = lam - nu n^2 pi^2 / l^2 for mode n >= 1."""
    return params.lam - params.nu * (n * math.pi / params.length) ** 2


def eigenfunction_value(params: ModelParams, n: int, x):
    """Value of the n-th sine eigenfunction at position(s) x in [0, l]."""
    x = np.asarray(x, dtype=float)
    out = math.sqrt(2.0 / params.length) * np.sin(n * math.pi * x / params.length)
    return float(out) if out.ndim == 0 else out


def interaction_coefficient(params: ModelParams, i1: int, i2: int, n: int) -> float:
    """Projection of -gamma e_{i1} (e_{i2})' onto e_n.

    Nonzero only when n = i1+i2 or n = |i1-i2| >= 1.  The i1 = i2 case never
    reaches the difference branch: index 0 is not a mode.
    """
    base = params.gamma * i2 * math.pi / (math.sqrt(2.0) * params.length ** 1.5)
    if n == i1 + i2:
        return -base
    if i1 != i2 and n == abs(i1 - i2):
        return -base * (1.0 if i1 > i2 else -1.0)
    return 0.0


@dataclass(frozen=True)
class Spectrum:
    """Cached eigen-data for modes 1..count."""

    params: ModelParams
    count: int
    betas: np.ndarray  # shape (count,), betas[k] = beta_{k+1}

    @classmethod
    def build(cls, params: ModelParams, count: int | None = None):
        count = params.n_galerkin if count is None else count
        n = np.arange(1, count + 1, dtype=float)
        betas = params.lam - params.nu * (n * math.pi / params.length) ** 2
        betas.setflags(write=False)
        return cls(params=params, count=count, betas=betas)

    def alpha_weights(self, alpha: float = 0.0) -> np.ndarray:
        """Coefficient-space norm weights (1 + (n pi / l)^2)^alpha."""
        n = np.arange(1, self.count + 1, dtype=float)
        return (1.0 + (n * math.pi / self.params.length) ** 2) ** alpha


@dataclass(frozen=True)
class InteractionTable:
    """Sparse table of bilinear interaction coefficients.

    Entries are the triples (i1, i2, n) with 1 <= i1, i2, n <= top and a
    nonzero coefficient; ``apply`` evaluates the projected advection term
    for a coefficient vector of length top.
    """

    top: int
    i1: np.ndarray  # 0-based first index
    i2: np.ndarray  # 0-based second index
    n: np.ndarray   # 0-based target mode
    coef: np.ndarray

    @classmethod
    def build(cls, params: ModelParams, top: int | None = None):
        top = params.n_galerkin if top is None else top
        return _build_table(params.gamma, params.length, top)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Component n of the projected advection term for coefficients u."""
        u = np.asarray(u, dtype=float)
        prod = u[self.i1] * u[self.i2] * self.coef
        return np.bincount(self.n, weights=prod, minlength=self.top)

    def restrict(self, n_lo: int, n_hi: int, i_hi: int) -> "InteractionTable":
        """Sub-table with target modes in [n_lo, n_hi] and i1, i2 <= i_hi (1-based)."""
        keep = (
            (self.n >= n_lo - 1)
            & (self.n <= n_hi - 1)
            & (self.i1 <= i_hi - 1)
            & (self.i2 <= i_hi - 1)
        )
        return InteractionTable(top=self.top, i1=self.i1[keep], i2=self.i2[keep],
                                n=self.n[keep], coef=self.coef[keep])


@lru_cache(maxsize=64)
def _build_table(gamma: float, length: float, top: int) -> InteractionTable:
    base = gamma * math.pi / (math.sqrt(2.0) * length ** 1.5)
    i1s, i2s, ns, cs = [], [], [], []
    for i1 in range(1, top + 1):
        for i2 in range(1, top + 1):
            n = i1 + i2
            if n <= top:
                i1s.append(i1 - 1); i2s.append(i2 - 1); ns.append(n - 1)
                cs.append(-base * i2)
            n = abs(i1 - i2)
            if i1 != i2 and 1 <= n <= top:
                i1s.append(i1 - 1); i2s.append(i2 - 1); ns.append(n - 1)
                cs.append(-base * i2 * (1.0 if i1 > i2 else -1.0))
    table = InteractionTable(
        top=top,
        i1=np.asarray(i1s, dtype=np.intp),
        i2=np.asarray(i2s, dtype=np.intp),
        n=np.asarray(ns, dtype=np.intp),
        coef=np.asarray(cs, dtype=float),
    )
    for arr in (table.i1, table.i2, table.n, table.coef):
        arr.setflags(write=False)
    return table


@dataclass(frozen=True)
class NonResonanceReport:
    """Outcome of the non-resonance check.

    ``gaps`` maps (i1, i2, n, kind) -> gap value, where kind is one of
    "sum" (beta_i1 + beta_i2 - beta_n, always required for a nonzero
    interaction), "left" (beta_i2 - beta_n, required when sigma_i1 != 0) and
    "right" (beta_i1 - beta_n, required when sigma_i2 != 0).
    """

    satisfied: bool
    gaps: dict

    @property
    def min_gap(self) -> float:
        if not self.gaps:
            raise ValueError("no interaction triples: no gaps to report")
        return min(self.gaps.values())


def check_non_resonance(params: ModelParams) -> NonResonanceReport:
    """Check the eigenvalue-gap conditions for every forced interaction triple.

    Requires beta_n < 0 for every unresolved mode (raises StabilityViolation
    otherwise).  For each pair (i1, i2) of resolved indices and each
    unresolved n with a nonzero interaction coefficient, the report records
    the sum gap and, for each noised member of the pair, the corresponding
    single-index gap.  All required gaps must be strictly positive.
    """
    spec = Spectrum.build(params)
    m = params.m
    if np.any(spec.betas[m:] >= 0):
        bad = int(np.argmax(spec.betas[m:] >= 0)) + m + 1
        raise StabilityViolation(
            f"beta_{bad} = {spec.betas[bad - 1]:.6g} >= 0: unresolved modes "
            "must all be linearly stable"
        )
    gaps = {}
    for i1 in range(1, m + 1):
        for i2 in range(1, m + 1):
            for n in (i1 + i2, abs(i1 - i2)):
                if n <= m:
                    continue
                if interaction_coefficient(params, i1, i2, n) == 0.0:
                    continue
                b1, b2 = spec.betas[i1 - 1], spec.betas[i2 - 1]
                bn = eigenvalue(params, n)
                gaps[(i1, i2, n, "sum")] = b1 + b2 - bn
                if params.sigma[i1 - 1] != 0.0:
                    gaps[(i1, i2, n, "left")] = b2 - bn
                if params.sigma[i2 - 1] != 0.0:
                    gaps[(i1, i2, n, "right")] = b1 - bn
    satisfied = all(g > 0 for g in gaps.values())
    return NonResonanceReport(satisfied=satisfied, gaps=gaps)
