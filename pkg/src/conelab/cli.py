"""Command-line driver: parse a scenario, run one subcommand, persist
CSV data files plus a JSON run manifest.

Data files are fully deterministic (17 significant digits, fixed row
order, thread-count independent); the manifest additionally records the
wall time, which is the one field that varies between otherwise identical
runs.  Exit codes: 0 success, 1 validation error, 2 numerical-contract
failure; errors go to stderr with a machine-parsable prefix.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, ValidationError
from .lattice import BlochModel, RhoVector
from .mixing import FLAVOURS, MixingSpec
from .oscillation import (
    K_POINT,
    delta_sweep,
    direction_sweep,
    evolve,
    momentum_to_k,
    prepare_flavour_state,
    t_asymmetry,
)
from .dispersion import LadderMixModel, fit_dispersion_exponent
from .parallel import resolve_threads
from .pauli import pauli_dot
from .scenario import Scenario, parse_scenario
from .topology import (
    band_gap,
    chiral_winding,
    dirac_points_analytic,
    fermi_velocities,
    gap_function,
    refine_minimum,
    sample_bands,
)

SUBCOMMANDS = (
    "bands",
    "dirac",
    "oscillate",
    "sweep-direction",
    "sweep-delta",
    "dispersion",
)

_ERROR_PREFIX = "conelab: error"


def _fmt(x: float) -> str:
    """17 significant digits: round-trip exact for doubles."""
    return "%.17g" % float(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row))
            fh.write("\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit_plot_script(out: Path, csv_name: str, title: str, using: str, ylabel: str) -> Path:
    script = out / (Path(csv_name).stem + ".gnuplot")
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set ylabel '{ylabel}'",
        "set key autotitle columnhead",
        f"plot '{csv_name}' using {using} with lines",
        "pause -1",
    ]
    with open(script, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return script


# ---------------------------------------------------------------------------
# subcommand implementations; each returns (written file names, extra manifest)


def _run_bands(scenario: Scenario, out: Path, threads: int, plot: bool):
    model = scenario.build_model()
    nk = scenario.get_int("run", "nk", 64) if scenario.has("run") else 64
    grid = sample_bands(model, nk, threads=threads)
    header = ["kx", "ky"] + [f"E_{b + 1}" for b in range(grid.n_bands)]
    rows = ((kx, ky, *bands) for kx, ky, bands in grid.rows())
    _write_csv(out / "bands.csv", header, rows)
    files = ["bands.csv"]
    if plot:
        _emit_plot_script(out, "bands.csv", "band energies", "1:3", "E")
        files.append("bands.gnuplot")
    return files, {"nk": nk, "n_bands": grid.n_bands}


def _split_block_model(spec: MixingSpec, h) -> BlochModel:
    # negated hoppings realise the +g convention of the mixing blocks, so
    # (g_k - h).sigma is a BlochModel evaluated at the same momentum
    return BlochModel(
        RhoVector([1.0]), t_x=-spec.t_x, t_y=-spec.t_y, onsite=-pauli_dot(h)
    )


def _run_dirac(scenario: Scenario, out: Path, threads: int, plot: bool):
    spec = scenario.build_mixing()
    rows = []
    for index, h in enumerate(spec.h_vectors, start=1):
        block = _split_block_model(spec, h)
        if h[2] != 0.0:
            gap = band_gap(block, 64, threads=threads)
            rows.append((str(index), "gapped", "", "", gap, "", ""))
            continue
        search = dirac_points_analytic(spec.t_x, spec.t_y, h)
        if search.status == "annihilated":
            gap = band_gap(block, 64, threads=threads)
            rows.append((str(index), search.status, "", "", gap, "", ""))
            continue
        f = gap_function(block)
        for point in search.points:
            refined = refine_minimum(f, point, span=0.05)
            gap = f(refined)
            velocities = fermi_velocities(block, refined, (1.0, 0.0), 1e-4)
            charge = chiral_winding(block, refined, loop_radius=0.04)
            rows.append(
                (
                    str(index),
                    search.status,
                    refined[0],
                    refined[1],
                    gap,
                    str(charge),
                    ";".join(_fmt(v) for v in velocities),
                )
            )
    header = ["block", "status", "kx", "ky", "gap", "charge", "velocities"]
    _write_csv(out / "dirac_points.csv", header, rows)
    files = ["dirac_points.csv"]
    return files, {"blocks": 3}


def _oscillation_momentum(scenario: Scenario):
    p_mag = scenario.get_float("run", "p_mag")
    phi_p = scenario.get_float("run", "phi_p", 0.0)
    direction = (np.cos(phi_p), np.sin(phi_p))
    return momentum_to_k(direction, p_mag), p_mag, phi_p


def _run_oscillate(scenario: Scenario, out: Path, threads: int, plot: bool):
    spec = scenario.build_mixing()
    k, p_mag, phi_p = _oscillation_momentum(scenario)
    times = scenario.times()
    alpha = scenario.flavour_index()
    branch = scenario.get_int("run", "branch", -1)
    trace = evolve(spec, prepare_flavour_state(spec, k, alpha, branch), times)
    totals = trace.probabilities.sum(axis=0)
    rows = (
        (times[i], *trace.probabilities[:, i], totals[i]) for i in range(times.size)
    )
    _write_csv(
        out / "oscillation.csv",
        ["time"] + [f"p_to_{f}" for f in FLAVOURS] + ["total"],
        rows,
    )
    asym = t_asymmetry(spec, k, times, branch)
    _write_csv(
        out / "t_asymmetry.csv",
        ["time", "delta_t", "undefined"],
        ((times[i], asym.values[i], str(int(asym.undefined[i]))) for i in range(times.size)),
    )
    files = ["oscillation.csv", "t_asymmetry.csv"]
    if plot:
        _emit_plot_script(out, "oscillation.csv", "flavour oscillation", "1:3", "P")
        files.append("oscillation.gnuplot")
    return files, {
        "initial_flavour": FLAVOURS[alpha],
        "branch": branch,
        "p_mag": p_mag,
        "phi_p": phi_p,
    }


def _run_sweep_direction(scenario: Scenario, out: Path, threads: int, plot: bool):
    spec = scenario.build_mixing()
    p_mag = scenario.get_float("run", "p_mag")
    n_dirs = scenario.get_int("run", "n_dirs", 64)
    t_probe = (
        scenario.get_float("run", "t_probe")
        if scenario.has("run", "t_probe")
        else None
    )
    branch = scenario.get_int("run", "branch", -1)
    sweep = direction_sweep(spec, p_mag, n_dirs, t_probe, branch, threads=threads)
    rows = (
        (
            sweep.angles[i],
            np.cos(sweep.angles[i]),
            np.sin(sweep.angles[i]),
            sweep.probabilities[i],
        )
        for i in range(n_dirs)
    )
    _write_csv(out / "direction_sweep.csv", ["phi_p", "p_hat_x", "p_hat_y", "p_e_mu"], rows)
    files = ["direction_sweep.csv"]
    if plot:
        _emit_plot_script(out, "direction_sweep.csv", "direction sweep", "1:4", "P(e->mu)")
        files.append("direction_sweep.gnuplot")
    return files, {"p_mag": p_mag, "t_probe": sweep.t_probe, "branch": branch}


def _run_sweep_delta(scenario: Scenario, out: Path, threads: int, plot: bool):
    spec = scenario.build_mixing()
    deltas = scenario.get_floats("run", "deltas")
    k, p_mag, phi_p = _oscillation_momentum(scenario)
    times = scenario.times()
    branch = scenario.get_int("run", "branch", -1)
    table = delta_sweep(spec, deltas, k, times, branch)
    rows = (
        (deltas[d], times[i], table[d, i])
        for d in range(len(deltas))
        for i in range(times.size)
    )
    _write_csv(out / "delta_sweep.csv", ["delta", "time", "delta_t"], rows)
    files = ["delta_sweep.csv"]
    if plot:
        _emit_plot_script(out, "delta_sweep.csv", "T asymmetry", "2:3", "Delta T")
        files.append("delta_sweep.gnuplot")
    return files, {"p_mag": p_mag, "phi_p": phi_p, "n_deltas": len(deltas)}


def _run_dispersion(scenario: Scenario, out: Path, threads: int, plot: bool):
    model = LadderMixModel(
        scenario.get_int("run", "layers"),
        scenario.get_float("run", "g"),
        scenario.get_float("run", "c_l", 1.0),
    )
    direction = scenario.get_floats("run", "direction", np.array([1.0, 0.0]))
    fit = fit_dispersion_exponent(
        model,
        scenario.get_float("run", "p_min"),
        scenario.get_float("run", "p_max"),
        scenario.get_int("run", "n_samples", 16),
        direction,
    )
    payload = {
        "layers": model.layers,
        "coupling": model.coupling,
        "c_l": model.c_l,
        "exponent": fit.exponent,
        "r_squared": fit.r_squared,
        "window": [fit.p_min, fit.p_max],
        "n_samples": fit.n_samples,
        "direction": list(fit.direction),
    }
    _write_json(out / "dispersion.json", payload)
    return ["dispersion.json"], {"layers": model.layers}


_RUNNERS = {
    "bands": _run_bands,
    "dirac": _run_dirac,
    "oscillate": _run_oscillate,
    "sweep-direction": _run_sweep_direction,
    "sweep-delta": _run_sweep_delta,
    "dispersion": _run_dispersion,
}


def run(
    command: str,
    scenario: Scenario,
    out_dir=None,
    threads: int | None = None,
    emit_plot_script: bool = False,
) -> list[Path]:
    """Execute one subcommand; returns the paths of all written files."""
    if command not in _RUNNERS:
        raise ValidationError(f"unknown subcommand {command!r}")
    threads = resolve_threads(threads)
    if out_dir is None:
        out_dir = scenario.get_str("run", "out", ".") if scenario.has("run") else "."
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    files, extra = _RUNNERS[command](scenario, out, threads, emit_plot_script)
    manifest = {
        "command": command,
        "version": __version__,
        "scenario_file": scenario.path,
        "scenario": scenario.sections,
        "outputs": sorted(files),
        "parameters": extra,
        "wall_time_s": time.perf_counter() - started,
    }
    _write_json(out / "manifest.json", manifest)
    return [out / name for name in files] + [out / "manifest.json"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description=(
            "Layered-Dirac-cone lattice simulations: band structures, "
            "splitting analysis, flavour oscillations, dispersion fits."
        ),
    )
    parser.add_argument("--version", action="version", version=f"conelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--scenario", required=True, help="scenario file (INI grammar)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (default: CONELAB_THREADS or 1)",
        )
        p.add_argument(
            "--emit-plot-script",
            action="store_true",
            help="write a gnuplot script next to each data file",
        )
    args = parser.parse_args(argv)
    try:
        scenario = parse_scenario(args.scenario)
        run(
            args.command,
            scenario,
            out_dir=args.out,
            threads=args.threads,
            emit_plot_script=args.emit_plot_script,
        )
    except ValidationError as exc:
        print(f"{_ERROR_PREFIX}: validation: {exc}", file=sys.stderr)
        return 1
    except ContractError as exc:
        print(f"{_ERROR_PREFIX}: numerical: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
