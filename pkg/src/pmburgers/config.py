"""Run configuration: TOML files, presets, validation.

A configuration has four sections: [model] for the physical/spectral
parameters, [numerics] for step sizes and horizons, [noise] for the seed and
[experiment] for orchestration choices.  Exactly one of ``lambda`` and
``lambda_ratio`` selects the linear parameter, the latter as a multiple of
the critical value nu pi^2 / l^2.  A persisted configuration re-runs
bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .errors import ConfigInvalid
from .model import ModelParams

__all__ = ["RunConfig", "load_config", "load_preset", "PRESETS"]

PRESETS = ("fig1", "fig2", "fig3")

_MODEL_KEYS = {"nu", "gamma", "l", "m", "n_noise", "n_galerkin", "sigma",
               "lambda", "lambda_ratio"}
_NUMERICS_KEYS = {"dt", "t_end", "T", "t_past", "alpha", "k_stride"}
_NOISE_KEYS = {"seed"}
_EXPERIMENT_KEYS = {"variant", "pdf_bins", "x_points", "t1", "t2",
                    "sweep_lambda_ratios", "sweep_sigmas"}


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run configuration."""

    nu: float
    gamma: float
    l: float
    lam: float
    lam_ratio: float | None
    m: int
    n_noise: int
    n_galerkin: int
    sigma: tuple
    dt: float
    t_end: float
    T: float
    t_past: float | None
    alpha: float
    k_stride: int
    seed: int
    variant: str
    pdf_bins: int
    x_points: int
    t1: float
    t2: float
    sweep_lambda_ratios: tuple = field(default_factory=tuple)
    sweep_sigmas: tuple = field(default_factory=tuple)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        problems = []
        model = dict(raw.get("model", {}))
        numerics = dict(raw.get("numerics", {}))
        noise = dict(raw.get("noise", {}))
        experiment = dict(raw.get("experiment", {}))
        for section, known in (("model", _MODEL_KEYS), ("numerics", _NUMERICS_KEYS),
                               ("noise", _NOISE_KEYS),
                               ("experiment", _EXPERIMENT_KEYS)):
            for key in raw.get(section, {}):
                if key not in known:
                    problems.append((f"{section}.{key}", "unknown key"))

        def need(section, d, key, cast, default=None):
            if key not in d:
                if default is None:
                    problems.append((f"{section}.{key}", "missing"))
                    return None
                return default
            try:
                return cast(d[key])
            except (TypeError, ValueError):
                problems.append((f"{section}.{key}", f"cannot parse {d[key]!r}"))
                return None

        nu = need("model", model, "nu", float)
        gamma = need("model", model, "gamma", float)
        l = need("model", model, "l", float)
        m = need("model", model, "m", int, 2)
        n_noise = need("model", model, "n_noise", int, 10)
        n_galerkin = need("model", model, "n_galerkin", int, 32)
        has_lam = "lambda" in model
        has_ratio = "lambda_ratio" in model
        if has_lam == has_ratio:
            problems.append(("model.lambda",
                             "give exactly one of lambda and lambda_ratio"))
        lam_ratio = need("model", model, "lambda_ratio", float) \
            if has_ratio else None
        if has_lam and not has_ratio:
            lam = need("model", model, "lambda", float)
        elif lam_ratio is not None and None not in (nu, l):
            lam = lam_ratio * nu * math.pi ** 2 / l ** 2
        else:
            lam = None
        sigma_raw = model.get("sigma", None)
        sigma = ()
        if sigma_raw is None:
            problems.append(("model.sigma", "missing"))
        else:
            entries = sigma_raw if isinstance(sigma_raw, (list, tuple)) \
                else [sigma_raw] * (n_noise or 0)
            try:
                sigma = tuple(float(s) for s in entries)
            except (TypeError, ValueError):
                problems.append(("model.sigma", f"cannot parse {sigma_raw!r}"))
            if isinstance(sigma_raw, (list, tuple)) and n_noise is not None \
                    and len(entries) != n_noise:
                problems.append(("model.sigma",
                                 f"need {n_noise} entries, got {len(entries)}"))

        dt = need("numerics", numerics, "dt", float)
        t_end = need("numerics", numerics, "t_end", float)
        T = need("numerics", numerics, "T", float, 2.0)
        t_past = need("numerics", numerics, "t_past", float) \
            if "t_past" in numerics else None
        alpha = need("numerics", numerics, "alpha", float, 0.0)
        k_stride = need("numerics", numerics, "k_stride", int, 10)
        seed = need("noise", noise, "seed", int)
        variant = str(experiment.get("variant", "nonmarkov"))
        pdf_bins = need("experiment", experiment, "pdf_bins", int, 81)
        x_points = need("experiment", experiment, "x_points", int, 129)
        t1 = need("experiment", experiment, "t1", float, 400.0)
        t2 = need("experiment", experiment, "t2", float, 1000.0)
        try:
            sweep_ratios = tuple(float(v) for v in
                                 experiment.get("sweep_lambda_ratios", ()))
            sweep_sigmas = tuple(float(v) for v in
                                 experiment.get("sweep_sigmas", ()))
        except (TypeError, ValueError):
            problems.append(("experiment.sweep", "cannot parse sweep grids"))
            sweep_ratios = sweep_sigmas = ()

        for name, val in (("model.nu", nu), ("model.l", l),
                          ("numerics.dt", dt)):
            if val is not None and not val > 0:
                problems.append((name, "must be > 0"))
        if gamma is not None and gamma < 0:
            problems.append(("model.gamma", "must be >= 0"))
        if t_end is not None and t_end < 0:
            problems.append(("numerics.t_end", "must be >= 0"))
        if T is not None and not T > 0:
            problems.append(("numerics.T", "must be > 0"))
        if variant not in ("nonmarkov", "averaged"):
            problems.append(("experiment.variant",
                             "must be 'nonmarkov' or 'averaged'"))
        if k_stride is not None and k_stride < 1:
            problems.append(("numerics.k_stride", "must be >= 1"))
        if None not in (dt, t_end) and dt > 0:
            if abs(round(t_end / dt) * dt - t_end) > 1e-9 * max(1.0, t_end):
                problems.append(("numerics.t_end", f"not a multiple of dt={dt}"))
        if None not in (dt, T) and dt > 0:
            if abs(round(T / dt) * dt - T) > 1e-9 * max(1.0, T):
                problems.append(("numerics.T", f"not a multiple of dt={dt}"))
        if m is not None and n_noise is not None and not m < n_noise:
            problems.append(("model.m", "need m < n_noise"))
        if n_noise is not None and n_galerkin is not None \
                and not n_noise <= n_galerkin:
            problems.append(("model.n_noise", "need n_noise <= n_galerkin"))
        if problems:
            raise ConfigInvalid(problems)
        return cls(nu=nu, gamma=gamma, l=l, lam=lam, lam_ratio=lam_ratio, m=m,
                   n_noise=n_noise, n_galerkin=n_galerkin, sigma=sigma, dt=dt,
                   t_end=t_end, T=T, t_past=t_past, alpha=alpha,
                   k_stride=k_stride, seed=seed, variant=variant,
                   pdf_bins=pdf_bins, x_points=x_points, t1=t1, t2=t2,
                   sweep_lambda_ratios=sweep_ratios, sweep_sigmas=sweep_sigmas)

    def params(self) -> ModelParams:
        return ModelParams(nu=self.nu, lam=self.lam, gamma=self.gamma,
                           length=self.l, m=self.m, n_noise=self.n_noise,
                           n_galerkin=self.n_galerkin, sigma=self.sigma)

    def with_overrides(self, seed=None, variant=None) -> "RunConfig":
        raw = self.canonical_dict()
        if seed is not None:
            raw["noise"]["seed"] = int(seed)
        if variant is not None:
            raw["experiment"]["variant"] = str(variant)
        return RunConfig.from_dict(raw)

    def canonical_dict(self) -> dict:
        """Nested sections with every value resolved; re-parseable."""
        model = {"nu": self.nu, "gamma": self.gamma, "l": self.l,
                 "lambda": self.lam, "m": self.m, "n_noise": self.n_noise,
                 "n_galerkin": self.n_galerkin, "sigma": list(self.sigma)}
        numerics = {"dt": self.dt, "t_end": self.t_end, "T": self.T,
                    "alpha": self.alpha, "k_stride": self.k_stride}
        if self.t_past is not None:
            numerics["t_past"] = self.t_past
        experiment = {"variant": self.variant, "pdf_bins": self.pdf_bins,
                      "x_points": self.x_points, "t1": self.t1, "t2": self.t2}
        if self.sweep_lambda_ratios:
            experiment["sweep_lambda_ratios"] = list(self.sweep_lambda_ratios)
        if self.sweep_sigmas:
            experiment["sweep_sigmas"] = list(self.sweep_sigmas)
        return {"model": model, "numerics": numerics,
                "noise": {"seed": self.seed}, "experiment": experiment}

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return RunConfig.from_dict(raw)


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigInvalid([("preset", f"unknown preset {name!r}; "
                              f"choose from {PRESETS}")])
    text = resources.files("pmburgers").joinpath(f"presets/{name}.toml").read_bytes()
    return RunConfig.from_dict(tomllib.loads(text.decode()))
