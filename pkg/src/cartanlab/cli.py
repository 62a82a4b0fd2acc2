"""Command-line orchestration: seeded reproducible runs with JSON/CSV artifacts.

Exit codes: 0 success, 1 numerical failure (failing criterion named),
2 configuration/schema/usage errors.  Identical config + seed reruns write
byte-identical artifacts; CARTANLAB_THREADS caps worker parallelism.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._kernels import BACKEND
from .acceptance import run_verify
from .analysis import estimate_exponents, build_chart
from .config import ConfigError, ExperimentConfig, format_real
from .errors import CartanLabError, UnknownPreset
from .presets import build_from_config, preset, preset_names, resolve_defaults
from .semiconjugacy import check_equivariance, solve_franks, surjectivity_diagnostic
from .util import substream
from .weyl import enumerate_chambers

EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def _load_config(config_path, seed, preset_name) -> ExperimentConfig:
    try:
        if config_path is not None:
            raw = json.loads(Path(config_path).read_text())
        elif preset_name is not None:
            raw = preset(preset_name).data
        else:
            raw = preset("cubic-2cos-pi-9").data
        defaults = resolve_defaults(raw.get("action", {}))
        cfg = ExperimentConfig.from_dict(raw, defaults)
        if seed is not None:
            cfg = cfg.merged_with({"seed": int(seed)})
        return cfg
    except (ConfigError, UnknownPreset, FileNotFoundError, json.JSONDecodeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _out_dir(out) -> Path:
    path = Path(out) if out else Path("cartanlab-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


_config_opt = click.option("--config", "config_path", type=click.Path(), default=None,
                           help="JSON experiment config (flags override file values).")
_seed_opt = click.option("--seed", type=int, default=None,
                         help="Seed for all randomness (mandatory for stochastic runs).")
_out_opt = click.option("--out", type=click.Path(), default=None,
                        help="Artifact directory (default ./cartanlab-out).")
_preset_opt = click.option("--preset", "preset_name", type=str, default=None,
                           help="Named preset to use when no config file is given.")


@click.group()
@click.version_option(version=__version__)
def main():
    """Numerical laboratory for Cartan actions on the torus."""


@main.command("gen-action")
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def gen_action(config_path, seed, out, preset_name):
    """Build and validate the Cartan action; write action.json."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    try:
        base, _, _ = build_from_config(cfg)
    except CartanLabError as exc:
        click.echo(f"action rejected: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    doc = base.to_json_dict()
    text = json.dumps(
        {
            "k": doc["k"],
            "dim": doc["dim"],
            "generators": doc["generators"],
            "spectrum": {
                "coefficients": [
                    [float(format_real(v)) for v in row]
                    for row in doc["spectrum"]["coefficients"]
                ]
            },
        },
        sort_keys=True, indent=2,
    ) + "\n"
    (out_path / "action.json").write_text(text)
    click.echo(f"wrote {out_path / 'action.json'} "
               f"(k={doc['k']}, dim={doc['dim']})")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def weyl(config_path, seed, out, preset_name):
    """Enumerate Weyl chambers; write chambers.json."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    base, _, _ = build_from_config(cfg)
    wcfg = cfg.section("weyl")
    try:
        arrangement = enumerate_chambers(
            base.spectrum, search_radius=wcfg.get("search_radius", 5),
            cutoff=wcfg.get("degeneracy_cutoff", 1e-9),
        )
    except CartanLabError as exc:
        click.echo(f"enumeration failed: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    _dump_json(out_path / "chambers.json", arrangement.to_json_dict())
    click.echo(f"{len(arrangement.chambers)} chambers -> {out_path / 'chambers.json'}")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def perturb(config_path, seed, out, preset_name):
    """Build the perturbed action; write diffeo.json with certificates."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    try:
        _, diffeo, action = build_from_config(cfg)
    except (CartanLabError, ValueError) as exc:
        click.echo(f"perturbation rejected: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    from .perturbation import commutation_residual

    doc = diffeo.to_json_dict()
    doc["derivative_bound"] = diffeo.derivative_bound
    doc["margin"] = diffeo.margin
    doc["commutation_residual"] = commutation_residual(action)
    _dump_json(out_path / "diffeo.json", doc)
    click.echo(f"margin {diffeo.margin:.4f}, commutation residual "
               f"{doc['commutation_residual']:.2e} -> {out_path / 'diffeo.json'}")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
@click.option("--element", "element", type=str, default="1,0",
              help="Action element m to solve against, e.g. '1,0'.")
def semiconj(config_path, seed, out, preset_name, element):
    """Solve the Franks semiconjugacy; write semiconj.bin (+ sidecar)."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    base, _, action = build_from_config(cfg)
    m = tuple(int(v) for v in element.split(","))
    solver_cfg = cfg.section("solver")
    fmap = action.element_map(m)
    try:
        field_ = solve_franks(
            fmap, fmap.linear,
            grid_n=solver_cfg.get("grid_n", 64),
            tol=solver_cfg.get("tol", 1e-6),
            interpolation=solver_cfg.get("interpolation", "cubic"),
        )
    except CartanLabError as exc:
        click.echo(f"solver failed: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    field_.save(out_path / "semiconj.bin")
    equiv = check_equivariance(field_, action, base)
    coverage = surjectivity_diagnostic(field_, samples=200000)
    _dump_json(out_path / "semiconj-report.json", {
        "element": list(m),
        "residual": field_.residual,
        "iterations": field_.iterations,
        "contraction_rate": field_.contraction_rate,
        "equivariance": {str(k): v for k, v in equiv.items()},
        "coverage": coverage,
    })
    click.echo(f"residual {field_.residual:.2e} in {field_.iterations} sweeps "
               f"-> {out_path / 'semiconj.bin'}")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def lyapunov(config_path, seed, out, preset_name):
    """Estimate Lyapunov exponents for the configured elements; write exponents.csv."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    try:
        seed_val = cfg.require_seed()
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    base, _, action = build_from_config(cfg)
    ana = cfg.section("analysis")
    rows = ["m1,m2,i,estimate,stderr,linear_value"]
    summary = []
    for m in [tuple(v) for v in ana.get("exponent_elements", [[1, 0]])]:
        est = estimate_exponents(
            action, m, steps=ana.get("orbit_steps", 10**6),
            trials=ana.get("trials", 16), seed=seed_val,
        )
        mc = list(m) + [0] * (2 - len(m))
        for slot in range(est.estimates.shape[0]):
            rows.append(f"{mc[0]},{mc[1]},{slot + 1},{est.estimates[slot]!r},"
                        f"{est.stderrs[slot]!r},{est.linear[slot]!r}")
        summary.append({
            "m": list(m), "sampler": est.sampler_label,
            "max_error": float(np.max(np.abs(est.estimates - est.linear))),
        })
    (out_path / "exponents.csv").write_text("\n".join(rows) + "\n")
    _dump_json(out_path / "lyapunov-report.json", {"runs": summary})
    click.echo(f"{len(summary)} elements -> {out_path / 'exponents.csv'}")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def linearize(config_path, seed, out, preset_name):
    """Build a stable-leaf linearization chart; write chart.csv."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    try:
        seed_val = cfg.require_seed()
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    _, _, action = build_from_config(cfg)
    ana = cfg.section("analysis")
    fmap = action.element_map((1, 0))
    x = action.sample_invariant(substream(seed_val, 2, 0), 1)[0]
    chart = build_chart(
        fmap, x, radius=ana.get("leaf_radius", 0.1),
        step=ana.get("leaf_step", 1e-3), depth=ana.get("direction_depth", 60),
    )
    rows = ["s,rho,H"] + [
        f"{chart.leaf.arclengths[i]!r},{chart.density.rho[i]!r},{chart.chart[i]!r}"
        for i in range(chart.leaf.n_samples)
    ]
    (out_path / "chart.csv").write_text("\n".join(rows) + "\n")
    click.echo(f"chart on {chart.leaf.n_samples} samples "
               f"(cutoff {chart.density.cutoff}, tail {chart.density.tail_bound:.1e}) "
               f"-> {out_path / 'chart.csv'}")


@main.command()
@_config_opt
@_seed_opt
@_out_opt
@_preset_opt
def verify(config_path, seed, out, preset_name):
    """Run the full acceptance suite; PASS/FAIL per criterion; exit 0 iff all pass."""
    cfg = _load_config(config_path, seed, preset_name)
    out_path = _out_dir(out)
    try:
        cfg.require_seed()
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    try:
        results = run_verify(cfg, out_path, echo=click.echo)
    except CartanLabError as exc:
        click.echo(f"verification aborted: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    failed = [r for r in results if not r.passed]
    if failed:
        click.echo(f"FAILED criteria: {', '.join(r.name for r in failed)}", err=True)
        sys.exit(EXIT_NUMERICAL)
    click.echo(f"all {len(results)} criteria passed; artifacts in {out_path}")


@main.command()
@click.argument("artifacts", type=click.Path())
def report(artifacts):
    """One-page text summary of a verify artifact directory."""
    path = Path(artifacts)
    run_file = path / "run.json"
    if not run_file.exists():
        click.echo(f"no run.json in {path}", err=True)
        sys.exit(EXIT_CONFIG)
    doc = json.loads(run_file.read_text())
    lines = [f"cartanlab report ({doc['provenance']['package_version']}, "
             f"backend {doc['provenance']['backend']}, "
             f"seed {doc['provenance']['seed']})", ""]

    lines.append("criteria:")
    for c in doc["criteria"]:
        status = "PASS" if c["passed"] else "FAIL"
        lines.append(f"  [{status}] {c['index']:2d} {c['name']}: {c['details']}")
    lines.append("")

    exp_file = path / "exponents.csv"
    if exp_file.exists():
        lines.append("exponents (estimated vs linear):")
        lines.append("  m          i  estimate             linear               |delta|")
        for row in exp_file.read_text().strip().splitlines()[1:]:
            m1, m2, i, est, err, lin = row.split(",")
            delta = abs(float(est) - float(lin))
            lines.append(f"  ({m1:>2},{m2:>2})  {i}  {float(est):+.12f}  "
                         f"{float(lin):+.12f}  {delta:.2e}")
        lines.append("")

    ch_file = path / "chambers.json"
    if ch_file.exists():
        chambers = json.loads(ch_file.read_text())["chambers"]
        lines.append(f"chambers ({len(chambers)}):")
        for c in chambers:
            lines.append(f"  {c['pattern']}  m={c['representative']}")
        lines.append("")

    side = path / "semiconj.bin.json"
    if side.exists():
        meta = json.loads(side.read_text())
        lines.append(f"semiconjugacy: residual {meta['residual']:.3e}, "
                     f"{meta['iterations']} sweeps, rate {meta['contraction_rate']:.3f}, "
                     f"grid {meta['grid_n']}^{meta['dim']} ({meta['interpolation']})")
    click.echo("\n".join(lines))


if __name__ == "__main__":
    main()
