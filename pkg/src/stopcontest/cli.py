"""Command-line interface: solve, verify, simulate, plot.

Every command writes its data files (CSV tables, JSON results, SVG figures)
plus a run manifest recording the full parameter set.  Data files are
deterministic for fixed arguments and seed.  Exit codes: 0 success or
certificate pass, 1 verification failure, 2 usage error, 3 numerical
failure.
"""
from __future__ import annotations

import json
import os
import sys
import time

import click
import numpy as np

from . import __version__
from .closed_form import closed_form_law, effective_player_count
from .laws import Mode
from .model import ContestSpec
from .past_regret import SolverError, past_regret_law
from .simulate import PathConfig, equilibrium_rule, run_contest, QuantileOracle
from .verify import certify, compare_candidate_table

ENV_OUT = "STOPCONTEST_OUTDIR"


def _out_dir(out):
    d = out or os.environ.get(ENV_OUT, ".")
    os.makedirs(d, exist_ok=True)
    return d


def _parse_k_list(text: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise click.UsageError(f"cannot parse K list {text!r}")
    if not vals:
        raise click.UsageError("empty K list")
    return vals


def _law_for(spec: ContestSpec):
    if spec.mode == Mode.PAST_REGRET:
        return past_regret_law(spec)
    return closed_form_law(spec)


def _write_manifest(out_dir, stem, command, params, outputs, started):
    manifest = {
        "command": command,
        "parameters": params,
        "tool_version": __version__,
        "seed": params.get("seed"),
        "outputs": sorted(outputs),
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    path = os.path.join(out_dir, f"{stem}.manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path, header, columns):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join("%.12g" % v for v in row) + "\n")


def _table_for(spec, law, grid):
    marginal = law.marginal
    if spec.mode == Mode.PAST_REGRET and law.solution is not None:
        x, G, g, mm = law.solution.export_table(grid)
        return ["x", "G", "g", "M_of_x"], [x, G, g, mm]
    x = np.linspace(0.0, marginal.right, grid + 1)[1:]
    return ["x", "G", "g"], [x, marginal.cdf(x), marginal.pdf(x)]


def _header_for(spec, law):
    if spec.mode == Mode.PAST_REGRET and law.solution is not None:
        h = law.solution.header()
    else:
        h = {"n": spec.n, "x0": spec.x0, "K": spec.K, "r": law.marginal.right}
    h["mode"] = spec.mode.value
    return h


mode_option = click.option(
    "--mode", type=click.Choice(["none", "future", "past", "all"]),
    default="none", show_default=True, help="which maximum defines regret")


@click.group()
@click.version_option(__version__)
def main():
    """Solve, certify, simulate and plot stopping-contest equilibria."""


@main.command()
@mode_option
@click.option("--n", type=int, default=2, show_default=True, help="player count")
@click.option("--x0", type=float, default=1.0, show_default=True, help="starting value")
@click.option("--k", "--K", "k", type=str, default="0", show_default=True,
              help="penalty K; comma-separated list for sweeps")
@click.option("--grid", type=int, default=512, show_default=True, help="table size")
@click.option("--out", type=str, default=None, help=f"output directory [env {ENV_OUT}]")
def solve(mode, n, x0, k, grid, out):
    """Write CDF/density tables and a JSON header per K value."""
    started = time.time()
    out_dir = _out_dir(out)
    outputs = []
    try:
        for kv in _parse_k_list(k):
            spec = ContestSpec(n=n, x0=x0, K=kv, mode=mode)
            law = _law_for(spec)
            stem = f"solve_{mode}_n{n}_K{kv:g}"
            csv_path = os.path.join(out_dir, stem + ".csv")
            header, cols = _table_for(spec, law, grid)
            _write_csv(csv_path, header, cols)
            json_path = os.path.join(out_dir, stem + ".json")
            with open(json_path, "w") as fh:
                json.dump(_header_for(spec, law), fh, indent=2, sort_keys=True)
                fh.write("\n")
            outputs += [csv_path, json_path]
            click.echo(f"wrote {csv_path}")
    except (ValueError,) as exc:
        raise click.UsageError(str(exc))
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(3)
    params = {"mode": mode, "n": n, "x0": x0, "K": k, "grid": grid, "seed": None}
    _write_manifest(out_dir, f"solve_{mode}_n{n}", "solve", params, outputs, started)


@main.command()
@mode_option
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--x0", type=float, default=1.0, show_default=True)
@click.option("--k", "--K", "k", type=float, default=0.0, show_default=True)
@click.option("--x-points", type=int, default=4000, show_default=True)
@click.option("--y-points", type=int, default=400, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--active-tol", type=float, default=1e-6, show_default=True)
@click.option("--r-scale", type=float, default=1.0, show_default=True,
              help="inflate the claimed support endpoint (negative control)")
@click.option("--candidate", type=click.Path(exists=True), default=None,
              help="CSV table of a candidate CDF to check against the solution")
@click.option("--out", type=str, default=None, help=f"output directory [env {ENV_OUT}]")
def verify(mode, n, x0, k, x_points, y_points, tol, active_tol, r_scale,
           candidate, out):
    """Certify the equilibrium via its Lagrangian; exit 1 on failure."""
    started = time.time()
    out_dir = _out_dir(out)
    try:
        spec = ContestSpec(n=n, x0=x0, K=k, mode=mode)
        law = _law_for(spec)
        cert = certify(spec, law, x_points=x_points, y_points=y_points,
                       tol=tol, active_tol=active_tol, r_scale=r_scale)
        result = cert.to_dict()
        if candidate is not None:
            data = np.genfromtxt(candidate, delimiter=",", names=True)
            err, ok = compare_candidate_table(data["x"], data["G"], law.marginal)
            result["candidate_table"] = {"path": candidate,
                                         "max_cdf_error": err, "passed": ok}
            result["passed"] = bool(result["passed"] and ok)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(3)
    stem = f"verify_{mode}_n{n}_K{k:g}"
    path = os.path.join(out_dir, stem + ".json")
    with open(path, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    params = {"mode": mode, "n": n, "x0": x0, "K": k, "x_points": x_points,
              "y_points": y_points, "tol": tol, "active_tol": active_tol,
              "r_scale": r_scale, "candidate": candidate, "seed": None}
    _write_manifest(out_dir, stem, "verify", params, [path], started)
    if result["passed"]:
        click.echo(f"PASS max_violation={result['max_violation']:.3e} "
                   f"active={result['active_set_residual']:.3e}")
    else:
        click.echo(f"FAIL max_violation={result['max_violation']:.3e} "
                   f"worst_point={result['worst_point']}", err=True)
        sys.exit(1)


@main.command()
@mode_option
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--x0", type=float, default=1.0, show_default=True)
@click.option("--k", "--K", "k", type=float, default=0.0, show_default=True)
@click.option("--paths", type=int, default=10000, show_default=True,
              help="number of contests")
@click.option("--dt", type=float, default=1e-4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-steps", type=int, default=10_000_000, show_default=True)
@click.option("--scheme", type=click.Choice(["gaussian", "walk"]),
              default="gaussian", show_default=True)
@click.option("--bridge/--no-bridge", default=True, show_default=True,
              help="Brownian-bridge crossing and maximum corrections")
@click.option("--rule", type=click.Choice(["equilibrium", "oracle"]),
              default="equilibrium", show_default=True,
              help="path-level embedding or direct draws from the law")
@click.option("--out", type=str, default=None, help=f"output directory [env {ENV_OUT}]")
def simulate(mode, n, x0, k, paths, dt, seed, max_steps, scheme, bridge, rule, out):
    """Run Monte Carlo contests at equilibrium and write a report."""
    started = time.time()
    out_dir = _out_dir(out)
    try:
        spec = ContestSpec(n=n, x0=x0, K=k, mode=mode)
        law = _law_for(spec)
        config = PathConfig(dt=dt, max_steps=max_steps, seed=seed,
                            scheme=scheme, bridge=bridge)
        if rule == "oracle":
            player_rule = QuantileOracle(law)
        else:
            player_rule = equilibrium_rule(spec, law)
        report = run_contest(spec, [player_rule] * n, paths, config,
                             target_cdf=law.marginal,
                             joint_law=law if mode == "past" else None)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(3)
    stem = f"simulate_{mode}_n{n}_K{k:g}_seed{seed}"
    path = os.path.join(out_dir, stem + ".json")
    with open(path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    params = {"mode": mode, "n": n, "x0": x0, "K": k, "paths": paths,
              "dt": dt, "seed": seed, "max_steps": max_steps,
              "scheme": scheme, "bridge": bridge, "rule": rule}
    _write_manifest(out_dir, stem, "simulate", params, [path], started)
    click.echo(f"wrote {path}; win_prob={report.win_prob}")


@main.command()
@click.option("--mode", type=click.Choice(["none", "future", "past", "all"]),
              default="past", show_default=True)
@click.option("--n", type=int, default=3, show_default=True)
@click.option("--x0", type=float, default=1.0, show_default=True)
@click.option("--k", "--K", "k", type=str, required=True,
              help="comma-separated K values to overlay")
@click.option("--grid", type=int, default=600, show_default=True)
@click.option("--ceiling", type=float, default=5.0, show_default=True,
              help="clip densities at this value (they blow up near 0)")
@click.option("--out", type=str, default=None, help=f"output directory [env {ENV_OUT}]")
def plot(mode, n, x0, k, grid, ceiling, out):
    """Render overlaid equilibrium CDFs and densities to SVG."""
    from .plotting import render_curves

    started = time.time()
    out_dir = _out_dir(out)
    k_values = _parse_k_list(k)
    cdf_curves, pdf_curves = [], []
    try:
        for kv in k_values:
            spec = ContestSpec(n=n, x0=x0, K=kv, mode=mode)
            law = _law_for(spec)
            x = np.linspace(0.0, law.marginal.right, grid + 1)[1:]
            cdf_curves.append((f"K={kv:g}", x, np.asarray(law.marginal.cdf(x))))
            g = np.clip(np.asarray(law.marginal.pdf(x)), 0.0, ceiling)
            pdf_curves.append((f"K={kv:g}", x, g))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(3)
    stem = f"plot_{mode}_n{n}"
    cdf_path = render_curves(cdf_curves, os.path.join(out_dir, stem + "_cdf.svg"),
                             "x", "G*(x)", f"equilibrium CDF, mode={mode}, n={n}")
    pdf_path = render_curves(pdf_curves, os.path.join(out_dir, stem + "_density.svg"),
                             "x", "g*(x)", f"equilibrium density, mode={mode}, n={n}")
    params = {"mode": mode, "n": n, "x0": x0, "K": k, "grid": grid,
              "ceiling": ceiling, "seed": None}
    _write_manifest(out_dir, stem, "plot", params, [cdf_path, pdf_path], started)
    click.echo(f"wrote {cdf_path} and {pdf_path}")


if __name__ == "__main__":
    main()
