"""Command-line interface: experiment orchestration and artifact output.

Every subcommand takes a configuration (a TOML file via --config or a named
preset via --preset), writes CSV/JSON artifacts plus a manifest into the
output directory, and prints a short summary.  ``rerun`` re-executes any
manifest and reproduces its CSV artifacts byte for byte.  Flags mirror
environment variables (PMBURGERS_SEED and friends).
"""

from __future__ import annotations

from pathlib import Path

import click
import numpy as np

from . import __version__
from .artifacts import (read_manifest, write_csv, write_json, write_manifest,
                        write_matrix_csv)
from .config import RunConfig, load_config, load_preset
from .diagnostics import (compare_distributions, defect_sweep, estimate_pdf,
                          parameterization_defect)
from .errors import PmburgersError
from .manifold import analytic_h1, averaged_h1, default_t_past, pullback_hs
from .model import check_non_resonance
from .noise import WienerPath
from .reduced import reconstruct_field, simulate_reduced
from .spde import simulate_spde


@click.group()
@click.version_option(version=__version__, prog_name="pmburgers")
def main():
    """Stochastic manifold reduction of a noise-driven Burgers equation."""


def _resolve(config_path, preset, seed=None, variant=None) -> RunConfig:
    if (config_path is None) == (preset is None):
        raise click.UsageError("give exactly one of --config and --preset")
    cfg = load_config(config_path) if config_path else load_preset(preset)
    if seed is not None or variant is not None:
        cfg = cfg.with_overrides(seed=seed, variant=variant)
    return cfg


def run_check_nr(cfg: RunConfig, out: Path) -> list:
    report = check_non_resonance(cfg.params())
    rows = [
        {"i1": int(k[0]), "i2": int(k[1]), "n": int(k[2]), "kind": k[3],
         "gap": float(v)}
        for k, v in sorted(report.gaps.items())
    ]
    write_json(out / "nr_report.json",
               {"satisfied": report.satisfied, "min_gap": report.min_gap,
                "gaps": rows})
    click.echo("satisfied" if report.satisfied else "violated")
    for row in rows:
        click.echo(f"  ({row['i1']},{row['i2']})->{row['n']} {row['kind']}: "
                   f"{row['gap']:+.6f}")
    return ["nr_report.json"]


def run_simulate_spde(cfg: RunConfig, out: Path) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    traj = simulate_spde(params, np.zeros(params.n_galerkin), cfg.t_end, path)
    headers = [f"u{n}" for n in range(1, params.n_galerkin + 1)]
    write_matrix_csv(out / "trajectory.csv", "t", traj.times, headers,
                     traj.coeffs)
    write_json(out / "trajectory_meta.json",
               {"config_hash": cfg.config_hash(), "solver": traj.solver,
                "seed": traj.seed, "dt": traj.dt,
                "u0": [0.0] * params.n_galerkin})
    click.echo(f"simulated {traj.times[-1]:g} time units, "
               f"{params.n_galerkin} modes")
    return ["trajectory.csv", "trajectory_meta.json"]


def run_simulate_reduced(cfg: RunConfig, out: Path) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    traj = simulate_reduced(params, np.zeros(params.m), cfg.t_end, cfg.T, path,
                            variant=cfg.variant)
    headers = [f"xi{i}" for i in range(1, params.m + 1)] \
        + [f"y{n}" for n in range(params.m + 1, params.n_noise + 1)]
    write_matrix_csv(out / "reduced.csv", "t", traj.times, headers,
                     traj.full_state())
    write_json(out / "reduced_meta.json",
               {"config_hash": cfg.config_hash(), "variant": cfg.variant,
                "T": cfg.T, "seed": cfg.seed, "dt": cfg.dt})
    click.echo(f"simulated reduced ({cfg.variant}) to t={traj.times[-1]:g}")
    return ["reduced.csv", "reduced_meta.json"]


def run_defect(cfg: RunConfig, out: Path) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    traj = simulate_spde(params, np.zeros(params.n_galerkin), cfg.t_end, path)
    rep = parameterization_defect(traj, cfg.T, path, t1=cfg.t1, t2=cfg.t2,
                                  alpha=cfg.alpha, stride=cfg.k_stride)
    write_csv(out / "defect.csv", ["T", "Q"],
              zip(rep.sample_times, rep.q_curve))
    write_json(out / "defect_summary.json",
               {"time_average": rep.time_average, "t1": rep.t1, "t2": rep.t2,
                "alpha": rep.alpha, "window": rep.window,
                "stride": rep.stride, "seed": rep.seed,
                "config_hash": cfg.config_hash()})
    click.echo(f"time-averaged defect over [{rep.t1:g}, {rep.t2:g}]: "
               f"{rep.time_average:.6f}")
    return ["defect.csv", "defect_summary.json"]


def run_defect_sweep(cfg: RunConfig, out: Path, threads: int = 1) -> list:
    if not cfg.sweep_lambda_ratios or not cfg.sweep_sigmas:
        raise click.UsageError(
            "config needs experiment.sweep_lambda_ratios and sweep_sigmas")
    params = cfg.params()
    lams = [r * params.lambda_c for r in cfg.sweep_lambda_ratios]
    cells = defect_sweep(params, lams, cfg.sweep_sigmas, cfg.seed, cfg.t_end,
                         cfg.T, cfg.dt, t1=cfg.t1, t2=cfg.t2, alpha=cfg.alpha,
                         stride=cfg.k_stride, max_workers=threads)
    rows = [
        (c.lam, c.sigma,
         c.time_average if c.time_average is not None else float("nan"))
        for c in cells
    ]
    write_csv(out / "sweep.csv", ["lambda", "sigma", "Qbar"], rows)
    skipped = sum(1 for c in cells if c.skipped)
    click.echo(f"{len(cells)} cells, {skipped} skipped")
    return ["sweep.csv"]


def run_pdf(cfg: RunConfig, out: Path, source: str = "spde") -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    if source == "spde":
        series = simulate_spde(params, np.zeros(params.n_galerkin), cfg.t_end,
                               path).resolved()
    else:
        series = simulate_reduced(params, np.zeros(params.m), cfg.t_end, cfg.T,
                                  path, variant=source).xi
    artifacts = []
    for i in range(params.m):
        est = estimate_pdf(series[:, i], bins=cfg.pdf_bins, mode_index=i + 1)
        name = f"pdf_mode{i + 1}_{source}.csv"
        write_csv(out / name, ["bin_center", "density"],
                  zip(est.centers, est.density))
        artifacts.append(name)
    click.echo(f"wrote {len(artifacts)} PDFs from {source}")
    return artifacts


def run_reconstruct(cfg: RunConfig, out: Path) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    traj = simulate_reduced(params, np.zeros(params.m), cfg.t_end, cfg.T, path,
                            variant=cfg.variant)
    x = np.linspace(0.0, params.length, cfg.x_points)
    field = reconstruct_field(params, traj, x)
    headers = [f"x{j}" for j in range(cfg.x_points)]
    write_matrix_csv(out / "field.csv", "t", traj.times, headers, field)
    write_json(out / "field_meta.json",
               {"x_grid": [float(v) for v in x], "variant": cfg.variant,
                "config_hash": cfg.config_hash()})
    click.echo(f"reconstructed field on {cfg.x_points} points")
    return ["field.csv", "field_meta.json"]


def run_compare(cfg: RunConfig, out: Path) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    full = simulate_spde(params, np.zeros(params.n_galerkin), cfg.t_end, path)
    runs = {"spde": full.resolved()}
    headers = [f"xi{i}" for i in range(1, params.m + 1)]
    artifacts = ["spde_modes.csv"]
    write_matrix_csv(out / "spde_modes.csv", "t", full.times, headers,
                     runs["spde"])
    for variant in ("nonmarkov", "averaged"):
        red = simulate_reduced(params, np.zeros(params.m), cfg.t_end, cfg.T,
                               path, variant=variant)
        runs[variant] = red.xi
        name = f"reduced_{variant}.csv"
        write_matrix_csv(out / name, "t", red.times, headers, red.xi)
        artifacts.append(name)
    rows = []
    for i in range(params.m):
        lo = min(r[:, i].min() for r in runs.values())
        hi = max(r[:, i].max() for r in runs.values())
        ref = estimate_pdf(runs["spde"][:, i], bins=cfg.pdf_bins,
                           range=(lo, hi), mode_index=i + 1)
        for variant in ("nonmarkov", "averaged"):
            est = estimate_pdf(runs[variant][:, i], bins=cfg.pdf_bins,
                               range=(lo, hi), mode_index=i + 1)
            dist = compare_distributions(ref, est)
            rows.append((f"xi{i + 1}", variant, dist.l1, dist.ks))
    write_csv(out / "pdf_distances.csv", ["mode", "variant", "l1", "ks"], rows)
    artifacts.append("pdf_distances.csv")
    for mode, variant, l1, ks in rows:
        click.echo(f"{mode} {variant}: L1={l1:.4f} KS={ks:.4f}")
    return artifacts


def run_manifold_grid(cfg: RunConfig, out: Path, grid_points: int = 5,
                      xi_range: float = 2.0) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    t_past = cfg.t_past if cfg.t_past is not None \
        else default_t_past(params, cfg.T)
    t_past = round(t_past / cfg.dt) * cfg.dt
    values = np.linspace(-xi_range, xi_range, grid_points)
    rows = []
    for x1 in values:
        for x2 in values:
            xi = np.zeros(params.m)
            xi[0] = x1
            if params.m > 1:
                xi[1] = x2
            pb = pullback_hs(params, xi, 0.0, cfg.T, path)
            an = analytic_h1(params, xi, path, t_past)
            av = averaged_h1(params, xi)
            for row, n in enumerate(range(params.m + 1, params.n_noise + 1)):
                rows.append((x1, x2, str(n), pb[row], an[row], av[row]))
    write_csv(out / "manifold_grid.csv",
              ["xi1", "xi2", "n", "pullback", "analytic", "averaged"], rows)
    click.echo(f"wrote {len(rows)} rows (t_past={t_past:g})")
    return ["manifold_grid.csv"]


def run_dump_noise(cfg: RunConfig, out: Path, k_from: int = 0,
                   k_to: int = 0) -> list:
    params = cfg.params()
    path = WienerPath(cfg.seed, params.n_noise, cfg.dt)
    block = path.increment_block(k_from, k_to)
    rows = [(str(k), *block[:, j]) for j, k in enumerate(range(k_from, k_to))]
    write_csv(out / "noise.csv",
              ["k", *[f"dW{i}" for i in range(1, params.n_noise + 1)]], rows)
    click.echo(f"dumped increments for k in [{k_from}, {k_to})")
    return ["noise.csv"]


_RUNNERS = {
    "check-nr": run_check_nr,
    "simulate-spde": run_simulate_spde,
    "simulate-reduced": run_simulate_reduced,
    "defect": run_defect,
    "defect-sweep": run_defect_sweep,
    "pdf": run_pdf,
    "reconstruct": run_reconstruct,
    "compare": run_compare,
    "manifold-grid": run_manifold_grid,
    "dump-noise": run_dump_noise,
}


def execute(name: str, cfg: RunConfig, out_dir, **extra) -> list:
    """Run one subcommand programmatically and write its manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = _RUNNERS[name](cfg, out, **extra)
    write_manifest(out, name, cfg, artifacts, extra=extra or None)
    return artifacts


def _register(name, help_text, extra_options=()):
    def impl(config_path, preset, seed, out_dir, **kwargs):
        variant = kwargs.pop("variant", None)
        try:
            cfg = _resolve(config_path, preset, seed=seed, variant=variant)
            execute(name, cfg, out_dir, **kwargs)
        except PmburgersError as exc:
            raise click.ClickException(str(exc)) from exc

    impl.__name__ = name.replace("-", "_")
    fn = impl
    for opt in reversed(list(extra_options)):
        fn = opt(fn)
    fn = click.option("--out", "out_dir", type=click.Path(),
                      envvar="PMBURGERS_OUT", default="runs",
                      help="Output directory.")(fn)
    fn = click.option("--seed", type=int, envvar="PMBURGERS_SEED", default=None,
                      help="Override the configured seed.")(fn)
    fn = click.option("--preset", type=str, envvar="PMBURGERS_PRESET",
                      default=None, help="Named preset: fig1, fig2 or fig3.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      envvar="PMBURGERS_CONFIG", default=None,
                      help="TOML configuration file.")(fn)
    return main.command(name=name, help=help_text)(fn)


_register("check-nr", "Check the non-resonance gaps and print margins.")
_register("simulate-spde", "Integrate the full spectral model.")
_register(
    "simulate-reduced",
    "Integrate a reduced system (non-Markovian or averaged).",
    [click.option("--variant", type=click.Choice(["nonmarkov", "averaged"]),
                  envvar="PMBURGERS_VARIANT", default=None,
                  help="Closure variant (defaults to the config).")],
)
_register("defect", "Full run plus the window-lift defect curve.")
_register(
    "defect-sweep",
    "Time-averaged defect over the configured (lambda, sigma) grid.",
    [click.option("--threads", type=int, envvar="PMBURGERS_THREADS", default=1,
                  help="Worker processes for sweep cells.")],
)
_register(
    "pdf",
    "Mode-amplitude PDFs from one simulation.",
    [click.option("--source",
                  type=click.Choice(["spde", "nonmarkov", "averaged"]),
                  default="spde", help="Which dynamics to sample.")],
)
_register(
    "reconstruct",
    "Space-time field reconstructed from a reduced run.",
    [click.option("--variant", type=click.Choice(["nonmarkov", "averaged"]),
                  envvar="PMBURGERS_VARIANT", default=None,
                  help="Closure variant (defaults to the config).")],
)
_register("compare", "Paired full/reduced runs on one seed plus PDF distances.")
_register(
    "manifold-grid",
    "Dump (pullback, analytic, averaged) lift triples on a xi grid.",
    [click.option("--grid-points", type=int, default=5),
     click.option("--xi-range", type=float, default=2.0)],
)
_register(
    "dump-noise",
    "Dump raw Brownian increments for cross-checking generators.",
    [click.option("--k-from", type=int, required=True),
     click.option("--k-to", type=int, required=True)],
)


@main.command()
@click.argument("manifest_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), envvar="PMBURGERS_OUT",
              default="reruns", help="Output directory for the re-run.")
def rerun(manifest_path, out_dir):
    """Re-execute a manifest; artifacts are byte-identical to the original."""
    manifest = read_manifest(manifest_path)
    cfg = RunConfig.from_dict(manifest["config"])
    extra = manifest.get("extra") or {}
    try:
        execute(manifest["subcommand"], cfg, out_dir, **extra)
    except PmburgersError as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main()
