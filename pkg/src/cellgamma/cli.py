"""Batch front-end: schema-validated JSON config, subcommand dispatch,
deterministic reports.

Exit codes: 0 success, 1 a requested computation failed, 2 invalid
configuration.  Flags override top-level config scalars; the env var
CELLGAMMA_THREADS is the fallback for --threads.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .cellopt import OptimizerOptions, compute_cell_energy
from .errors import CellGammaError, ComputeFailed, ConfigInvalid
from .gamma import DomainSpec, run_gamma_sweep, write_sweep_csv
from .grid import TensorField, build_cell_grid, build_frame
from .hyperbolic import build_shock_grid, compute_shock_cell_energy
from .model import JumpData, SpaceTimeJumpData, catalog_lookup
from .oracle import geodesic_energy_1d
from .poisson import BcVariant, duality_gap, nonlocal_energy
from .report import config_hash, emit_report, emit_timing

SUBCOMMANDS = ("cell", "shock", "duality", "gamma", "oracle", "catalog")

_BC_NAMES = {"neumann": BcVariant.NEUMANN, "dirichlet": BcVariant.DIRICHLET}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["subcommand"],
    "properties": {
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "params": {"type": "object"},
            },
        },
        "jump": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "phi_plus": {"type": "array", "items": {"type": "number"}},
                "phi_minus": {"type": "array", "items": {"type": "number"}},
                "nu": {"type": "array", "items": {"type": "number"}},
                "u_plus": {"type": "array", "items": {"type": "number"}},
                "u_minus": {"type": "array", "items": {"type": "number"}},
                "nu_y": {"type": "array", "items": {"type": "number"}},
                "nu_s": {"type": "number"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_normal": {"type": "integer", "minimum": 8},
                "n_lateral": {"type": "integer", "minimum": 1},
                "n_time": {"type": "integer", "minimum": 1},
            },
        },
        "bc": {
            "anyOf": [
                {"enum": list(_BC_NAMES)},
                {"type": "array", "items": {"enum": list(_BC_NAMES)}},
            ]
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "etol": {"type": "number"},
                "gtol_scale": {"type": "number"},
                "n_random": {"type": "integer", "minimum": 0},
                "amplitude": {"type": "number", "minimum": 0},
                "require_converged": {"type": "boolean"},
            },
        },
        "duality": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_fluxes": {"type": "integer", "minimum": 1},
                "resolution": {"type": "integer", "minimum": 8},
            },
        },
        "gamma": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilons"],
            "properties": {
                "epsilons": {"type": "array", "items": {"type": "number"},
                             "minItems": 1},
                "resolution": {"type": "integer", "minimum": 32},
                "offset": {"type": "number"},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sampling": {"type": "integer", "minimum": 16},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
    },
}


def validate_config(config):
    import jsonschema
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(f"config rejected: {exc.message}") from exc
    sub = config["subcommand"]
    needs_model = sub in ("cell", "shock", "gamma", "oracle")
    if needs_model and "model" not in config:
        raise ConfigInvalid(f"subcommand {sub!r} requires a model block")
    if sub in ("cell", "gamma", "oracle"):
        jump = config.get("jump", {})
        for key in ("phi_plus", "phi_minus", "nu"):
            if key not in jump:
                raise ConfigInvalid(f"subcommand {sub!r} requires jump.{key}")
    if sub == "shock":
        jump = config.get("jump", {})
        for key in ("u_plus", "u_minus", "nu_y", "nu_s"):
            if key not in jump:
                raise ConfigInvalid(f"subcommand {sub!r} requires jump.{key}")
    return config


def _opts(config):
    o = dict(config.get("optimizer", {}))
    o.setdefault("seed", config.get("seed", 0))
    o["threads"] = config.get("threads", 1)
    return OptimizerOptions(**o)


def _model(config):
    m = config["model"]
    return catalog_lookup(m["name"], m.get("params"))


def _base_row(config):
    return {"config_hash": config_hash(config), "version": __version__,
            "seed": config.get("seed", 0)}


def _run_cell(config):
    specs = _model(config)
    j = config["jump"]
    jump = JumpData(phi_plus=j["phi_plus"], phi_minus=j["phi_minus"],
                    nu=j["nu"])
    g = config.get("grid", {})
    frame = build_frame(jump.nu)
    grid = build_cell_grid(frame, g.get("n_normal", 128),
                           n_lateral=g.get("n_lateral"))
    bcs = config.get("bc", "neumann")
    if isinstance(bcs, str):
        bcs = [bcs]
    opts = _opts(config)
    rows = []
    for name in bcs:
        sol = compute_cell_energy(jump, specs, grid, _BC_NAMES[name], opts)
        row = _base_row(config)
        row.update({"subcommand": "cell", "model": specs.name, "bc": name})
        row.update(sol.to_dict())
        rows.append(row)
    return rows


def _run_shock(config):
    specs = _model(config)
    if specs.flux is None or specs.entropy is None:
        raise ConfigInvalid(f"model {specs.name!r} has no flux/entropy pair")
    j = config["jump"]
    st = SpaceTimeJumpData(u_plus=j["u_plus"], u_minus=j["u_minus"],
                           nu_y=j["nu_y"], nu_s=j["nu_s"])
    g = config.get("grid", {})
    grid = build_shock_grid(st, g.get("n_normal", 128),
                            n_lateral=g.get("n_lateral"),
                            n_time=g.get("n_time", g.get("n_lateral", 8)))
    sol = compute_shock_cell_energy(st, specs.flux, specs.entropy, grid,
                                    _opts(config))
    row = _base_row(config)
    row.update({"subcommand": "shock", "model": specs.name})
    row.update(sol.to_dict())
    return [row]


def _run_duality(config):
    d = config.get("duality", {})
    n_fluxes = d.get("n_fluxes", 50)
    res = d.get("resolution", 16)
    seed = config.get("seed", 0)
    frame = build_frame(np.array([1.0, 0.0]))
    grid = build_cell_grid(frame, res, n_lateral=res)
    rng = np.random.Generator(np.random.Philox(key=(seed, 0)))
    rows = []
    for i in range(n_fluxes):
        M = TensorField(grid, rng.standard_normal(grid.shape + (1, 2)))
        rep = duality_gap(M, BcVariant.NEUMANN)
        e_n, _ = nonlocal_energy(M, BcVariant.NEUMANN, check_compat=False)
        e_d, _ = nonlocal_energy(M, BcVariant.DIRICHLET)
        m_sq = float(np.sum(grid.node_weights()[..., None, None]
                            * np.square(M.values)))
        row = _base_row(config)
        row.update({
            "subcommand": "duality", "flux_index": i,
            "gap": rep.gap, "projection_min": rep.J0_projection,
            "nonlocal_energy": rep.nonlocal_energy,
            "neumann_energy": e_n, "dirichlet_energy": e_d,
            "flux_norm_sq": m_sq,
            "gap_ok": rep.gap <= 1e-9 * (1.0 + m_sq),
            "ordering_ok": e_d <= e_n + 1e-9 * (1.0 + e_n),
        })
        rows.append(row)
    return rows


def _run_gamma(config):
    specs = _model(config)
    j = config["jump"]
    jump = JumpData(phi_plus=j["phi_plus"], phi_minus=j["phi_minus"],
                    nu=j["nu"])
    g = config["gamma"]
    domain = DomainSpec(nu=jump.nu, resolution=g.get("resolution", 256),
                        offset=g.get("offset", 0.0))
    rows_sweep = run_gamma_sweep(domain, jump, specs, g["epsilons"],
                                 opts=_opts(config))
    rows = []
    for r in rows_sweep:
        row = _base_row(config)
        row.update({"subcommand": "gamma", "model": specs.name,
                    "epsilon": r.epsilon, "full_energy": r.full_energy,
                    "predicted": r.predicted, "ratio": r.ratio,
                    "error": r.error})
        rows.append(row)
    if any(r.error for r in rows_sweep):
        raise ComputeFailed("one or more sweep rows failed")
    return rows, rows_sweep


def _run_oracle(config):
    specs = _model(config)
    j = config["jump"]
    jump = JumpData(phi_plus=j["phi_plus"], phi_minus=j["phi_minus"],
                    nu=j["nu"])
    sampling = config.get("oracle", {}).get("sampling", 200)
    value = geodesic_energy_1d(jump, specs, sampling=sampling)
    row = _base_row(config)
    row.update({"subcommand": "oracle", "model": specs.name,
                "sampling": sampling, "geodesic_energy": value})
    return [row]


def _run_catalog(config):
    names = ["double_well", "micromagnetics_2d", "burgers",
             "linear_advection", "quadratic_entropy"]
    rows = []
    for name in names:
        params = {"speed": [1.0]} if name == "linear_advection" else {}
        specs = catalog_lookup(name, params)
        row = _base_row(config)
        row.update({
            "subcommand": "catalog", "model": name, "m": specs.m,
            "N": specs.G.N, "constraint": specs.constraint.kind,
            "has_flux": specs.flux is not None,
            "has_entropy": specs.entropy is not None,
            "psi_zero": specs.Psi.is_zero,
        })
        rows.append(row)
    return rows


def run_config(config, out_dir):
    """Dispatch one validated config; writes report.json/report.csv
    (deterministic) and timing.json (sidecar) to out_dir."""
    sub = config["subcommand"]
    t0 = time.perf_counter()
    sweep = None
    if sub == "cell":
        rows = _run_cell(config)
    elif sub == "shock":
        rows = _run_shock(config)
    elif sub == "duality":
        rows = _run_duality(config)
    elif sub == "gamma":
        try:
            rows, sweep = _run_gamma(config)
        except ComputeFailed:
            raise
    elif sub == "oracle":
        rows = _run_oracle(config)
    elif sub == "catalog":
        rows = _run_catalog(config)
    else:
        raise ConfigInvalid(f"unknown subcommand {sub!r}")
    wall = time.perf_counter() - t0
    paths = emit_report(rows, out_dir)
    if sweep is not None:
        write_sweep_csv(sweep, os.path.join(out_dir, "gamma_sweep.csv"))
    emit_timing({"subcommand": sub, "wall_seconds": wall,
                 "rows": len(rows)}, out_dir)
    return paths


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cellgamma",
        description="Cell-problem energies, shock layers, and gamma sweeps")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", default=None,
                        help="output directory for reports")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config) if args.config else {}
        config.setdefault("subcommand", args.subcommand)
        if config["subcommand"] != args.subcommand:
            raise ConfigInvalid(
                f"config subcommand {config['subcommand']!r} does not match "
                f"the command line {args.subcommand!r}")
        if args.seed is not None:
            config["seed"] = args.seed
        threads = args.threads
        if threads is None:
            env = os.environ.get("CELLGAMMA_THREADS")
            if env:
                try:
                    threads = int(env)
                except ValueError:
                    raise ConfigInvalid(
                        f"CELLGAMMA_THREADS must be an integer, got {env!r}")
        if threads is not None:
            config["threads"] = threads
        out_dir = args.out or config.get("output_dir", "cellgamma_out")
        validate_config(config)
    except ConfigInvalid as exc:
        print(f"cellgamma: config error: {exc}", file=sys.stderr)
        return 2

    try:
        run_config(config, out_dir)
    except ConfigInvalid as exc:
        print(f"cellgamma: config error: {exc}", file=sys.stderr)
        return 2
    except CellGammaError as exc:
        print(f"cellgamma: compute failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
