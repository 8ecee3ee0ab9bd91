"""Command-line driver: full analysis runs, mesh checks, network assembly.

Subcommands::

    fissura run --config cfg.json [--out DIR] [--seed N]
    fissura mesh --check mesh.json
    fissura network --grid grid.json [--out network.mtx]

The run subcommand writes report.json, directions.csv, energy_profile.csv
and (when requested) network.mtx into the output directory; identical
config and seed give byte-identical reports.  FISSURA_THREADS caps the
worker threads of the friction scan (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature import (TWO_PI, assemble_form, dissipation_with_diag,
                        preferential_curv)
from .flow import FluidParams, apply_V, edge_flux_mismatch
from .friction import friction_profile, minimize_friction, preferential_friction
from .gravity import dissipation_grav, preferential_grav
from .lifting import lift
from .mesh import (AcutenessUnachievable, DomainTooSmall, MeshError,
                   generate_mesh, load_mesh, validate_mesh)
from .network import FissureGrid, build_matrix, grid_from_json, stationary
from .superposition import compute_weights, geometric_entropy, superpose
from .surface import SurfaceError, SurfaceSpec, load_heightmap_csv

ANALYSES = ("curvature", "gravity", "friction", "superposition", "entropy", "network")
_BASE = ("curvature", "gravity", "friction")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass
class RunConfig:
    surface: SurfaceSpec
    edge_length: float
    jitter: float = 0.1
    mesh_seed: int = 0
    fluid: FluidParams = field(default_factory=FluidParams)
    analyses: tuple = _BASE
    dense_scan: int = 8192
    product_samples: int = 10000
    entropy_bins: int = 16
    seed: int = 0
    output_dir: str = "out"
    network_dims: tuple = (3, 3)
    network_cell_size: float = 1.0
    network_crack_cells: tuple | None = None  # None -> center cell
    threads: int = 1
    config_echo: dict = field(default_factory=dict)


def _get(obj, name, typ, field_name, default=None, required=False):
    if name not in obj:
        if required:
            raise ConfigError(field_name, "missing required field")
        return default
    val = obj[name]
    if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if typ is int and isinstance(val, int) and not isinstance(val, bool):
        return int(val)
    if not isinstance(val, typ):
        raise ConfigError(field_name, f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def parse_config(obj: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a run configuration object; errors name the offending field."""
    if not isinstance(obj, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    surf = _get(obj, "surface", dict, "surface", required=True)
    kind = _get(surf, "kind", str, "surface.kind", required=True)
    params = _get(surf, "params", dict, "surface.params", default={})
    domain = _get(surf, "domain", list, "surface.domain", required=True)
    heightmap = None
    if kind == "heightmap":
        path = _get(surf, "file", str, "surface.file", required=True)
        if base_dir is not None and not os.path.isabs(path):
            path = str(base_dir / path)
        heightmap = load_heightmap_csv(path)
    try:
        spec = SurfaceSpec(kind=kind, params=dict(params),
                           domain=np.asarray(domain, dtype=float),
                           heightmap=heightmap)
    except SurfaceError as exc:
        raise ConfigError("surface", str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("surface.domain", str(exc)) from exc

    mesh_cfg = _get(obj, "mesh", dict, "mesh", required=True)
    edge = _get(mesh_cfg, "edge_length", float, "mesh.edge_length", required=True)
    if not edge > 0:
        raise ConfigError("mesh.edge_length", "must be strictly positive")
    jitter = _get(mesh_cfg, "jitter", float, "mesh.jitter", default=0.1)
    if not (0.0 <= jitter < 0.3):
        raise ConfigError("mesh.jitter", "must lie in [0, 0.3)")
    seed = _get(obj, "seed", int, "seed", default=0)
    mesh_seed = _get(mesh_cfg, "seed", int, "mesh.seed", default=seed)

    fluid_cfg = _get(obj, "fluid", dict, "fluid", default={})
    try:
        fluid = FluidParams(
            mu=_get(fluid_cfg, "mu", float, "fluid.mu", default=1.0e-3),
            rho=_get(fluid_cfg, "rho", float, "fluid.rho", default=1.0e3),
            g=_get(fluid_cfg, "g", float, "fluid.g", default=9.81),
            gamma=_get(fluid_cfg, "gamma", float, "fluid.gamma", default=0.5))
    except ValueError as exc:
        raise ConfigError("fluid", str(exc)) from exc

    analyses = tuple(_get(obj, "analyses", list, "analyses", default=list(ANALYSES)))
    if not analyses:
        raise ConfigError("analyses", "must request at least one analysis")
    for a in analyses:
        if a not in ANALYSES:
            raise ConfigError("analyses", f"unknown analysis {a!r}")
    needs_base = {"superposition", "entropy", "network"} & set(analyses)
    if needs_base and not set(_BASE) <= set(analyses):
        raise ConfigError("analyses",
                          "superposition/entropy/network require curvature, gravity and friction")
    if "entropy" in analyses and "superposition" not in analyses:
        raise ConfigError("analyses", "entropy requires superposition")
    if "network" in analyses and "superposition" not in analyses:
        raise ConfigError("analyses", "network requires superposition")

    sampling = _get(obj, "sampling", dict, "sampling", default={})
    dense = _get(sampling, "dense_scan", int, "sampling.dense_scan", default=8192)
    products = _get(sampling, "product_samples", int, "sampling.product_samples",
                    default=10000)
    bins = _get(sampling, "entropy_bins", int, "sampling.entropy_bins", default=16)
    if dense < 16:
        raise ConfigError("sampling.dense_scan", "must be at least 16")
    if products < 1:
        raise ConfigError("sampling.product_samples", "must be positive")
    if bins < 2:
        raise ConfigError("sampling.entropy_bins", "must be at least 2")

    net = _get(obj, "network", dict, "network", default={})
    dims = tuple(_get(net, "dims", list, "network.dims", default=[3, 3]))
    if len(dims) != 2 or any((not isinstance(d, int)) or d < 1 for d in dims):
        raise ConfigError("network.dims", "must be two positive integers")
    cell_size = _get(net, "cell_size", float, "network.cell_size", default=1.0)
    if not cell_size > 0:
        raise ConfigError("network.cell_size", "must be positive")
    cracks = _get(net, "crack_cells", list, "network.crack_cells", default=None)
    if cracks is not None:
        cracks = tuple(tuple(int(v) for v in c) for c in cracks)

    threads = 1
    env = os.environ.get("FISSURA_THREADS")
    if env is not None:
        try:
            threads = max(1, int(env))
        except ValueError as exc:
            raise ConfigError("FISSURA_THREADS", f"not an integer: {env!r}") from exc

    out_dir = _get(obj, "output_dir", str, "output_dir", default="out")
    return RunConfig(surface=spec, edge_length=edge, jitter=jitter,
                     mesh_seed=mesh_seed, fluid=fluid, analyses=analyses,
                     dense_scan=dense, product_samples=products,
                     entropy_bins=bins, seed=seed, output_dir=out_dir,
                     network_dims=dims, network_cell_size=cell_size,
                     network_crack_cells=cracks, threads=threads,
                     config_echo=obj)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def run(config: RunConfig) -> dict:
    """Execute the configured analyses and write all artifacts to disk."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh = generate_mesh(config.surface, config.edge_length,
                         jitter=config.jitter, seed=config.mesh_seed)
    tri = lift(mesh, config.surface)
    report = {
        "config": _jsonable(config.config_echo),
        "mesh": {
            "n_vertices": mesh.n_vertices,
            "n_triangles": mesh.n_triangles,
            "n_edges": mesh.n_edges,
            "n_interior_edges": int(len(mesh.interior_edges)),
            "total_lifted_area": float(tri.total_area),
            "violations": [v.as_dict() for v in validate_mesh(mesh)],
        },
        "flow": {"edge_flux_mismatch_max": float(
            edge_flux_mismatch(tri, apply_V(tri, np.array([1.0, 0.0]))))},
    }
    directions_rows = []
    form_curv = form_grav = friction_min = None
    dist_curv = dist_grav = dist_friction = None

    if "curvature" in config.analyses:
        dropped_total = 0

        def u_curv(b):
            nonlocal dropped_total
            val, dropped = dissipation_with_diag(tri, config.fluid, apply_V(tri, b))
            dropped_total = max(dropped_total, dropped)
            return val

        form_curv = assemble_form(u_curv)
        dist_curv = preferential_curv(form_curv, tri)
        frag = form_curv.as_report()
        frag["dropped_quotients"] = int(dropped_total)
        frag["distribution"] = dist_curv.as_report()
        report["curvature"] = frag
        directions_rows += _distribution_rows("curv", dist_curv)

    if "gravity" in config.analyses:
        analysis = preferential_grav(tri, config.fluid, n_scan=4096)
        form_grav = analysis.form
        dist_grav = analysis.distribution
        report["gravity"] = analysis.as_report()
        directions_rows += _distribution_rows("grav", dist_grav)

    if "friction" in config.analyses:
        friction_min = minimize_friction(tri, config.fluid, dense=config.dense_scan,
                                         threads=config.threads)
        dist_friction = preferential_friction(tri, config.fluid, friction_min)
        frag = friction_min.as_report()
        frag["distribution"] = dist_friction.as_report()
        report["friction"] = frag
        directions_rows += _distribution_rows("friction", dist_friction)

    space = None
    if "superposition" in config.analyses:
        weights = compute_weights(form_curv.lam1, form_grav.lam1, friction_min.value)
        space = superpose(dist_curv, dist_grav, dist_friction, weights,
                          n_samples=config.product_samples, seed=config.seed)
        frag = {"weights": [weights.p1, weights.p2, weights.p3]}
        frag.update(space.as_report())
        if "entropy" in config.analyses:
            frag.update(geometric_entropy(space, bins=config.entropy_bins))
        else:
            frag.update({"atomic_entropy": None, "histogram_entropy": None,
                         "bins": config.entropy_bins})
        report["superposition"] = frag
        for v, q in zip(space.directions, space.probs):
            directions_rows.append(("global", v[0], v[1], v[2], q))

    if "network" in config.analyses:
        nx_, ny_ = config.network_dims
        crack_cells = config.network_crack_cells
        if crack_cells is None:
            crack_cells = ((nx_ // 2, ny_ // 2),)
        grid = FissureGrid(dims=(nx_, ny_), cell_size=config.network_cell_size,
                           cells={c: space for c in crack_cells})
        mat = build_matrix(grid)
        mat.save(out / "network.mtx")
        st = stationary(mat)
        report["network"] = {
            "dims": [nx_, ny_],
            "cell_size": float(config.network_cell_size),
            "stationary": [float(x) for x in st.vector],
            "stationary_converged": bool(st.converged),
            "matrix_file": "network.mtx",
        }

    _write_report(out / "report.json", report)
    _write_directions(out / "directions.csv", directions_rows)
    _write_energy_profile(out / "energy_profile.csv", tri, config,
                          form_curv, form_grav)
    return report


def _distribution_rows(source, dist, arc_samples: int = 64):
    rows = [(source, v[0], v[1], v[2], p) for v, p in dist.atoms]
    if dist.arcs:
        total_len = dist.arc_length()
        for a, b in dist.arcs:
            k = max(1, int(round(arc_samples * (b - a) / total_len)))
            ts = a + (b - a) * (np.arange(k) + 0.5) / k
            vs = dist.direction_at(ts)
            p = dist.arc_mass * (b - a) / total_len / k
            rows += [(source, v[0], v[1], v[2], p) for v in vs]
    return rows


def _write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_directions(path, rows):
    with open(path, "w") as fh:
        fh.write("source,x,y,z,probability\n")
        for source, x, y, z, p in rows:
            fh.write(f"{source},{float(x)!r},{float(y)!r},{float(z)!r},{float(p)!r}\n")


def _write_energy_profile(path, tri, config, form_curv, form_grav):
    ts = np.arange(config.dense_scan) * (TWO_PI / config.dense_scan)
    dirs = np.column_stack([np.cos(ts), np.sin(ts)])
    cols = {"t": ts}
    if form_curv is not None:
        cols["U_curv"] = np.einsum("ni,ij,nj->n", dirs, form_curv.matrix, dirs)
    if form_grav is not None:
        cols["U_grav"] = np.einsum("ni,ij,nj->n", dirs, form_grav.matrix, dirs)
    if "friction" in config.analyses:
        cols["F"] = friction_profile(tri, config.fluid, np.mod(ts, np.pi),
                                     threads=config.threads)
    with open(path, "w") as fh:
        fh.write(",".join(cols.keys()) + "\n")
        arrays = list(cols.values())
        for i in range(len(ts)):
            fh.write(",".join(repr(float(a[i])) for a in arrays) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    cfg_path = Path(args.config)
    try:
        with open(cfg_path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        _emit_error("config", f"no such file: {cfg_path}")
        return 2
    except json.JSONDecodeError as exc:
        _emit_error("config", f"malformed JSON: {exc}")
        return 2
    try:
        config = parse_config(obj, base_dir=cfg_path.parent)
    except ConfigError as exc:
        _emit_error(exc.field, exc.message)
        return 2
    if args.out is not None:
        config.output_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
        if "seed" not in obj.get("mesh", {}):
            config.mesh_seed = args.seed
    try:
        run(config)
    except (DomainTooSmall, AcutenessUnachievable, MeshError, SurfaceError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    print(f"wrote artifacts to {config.output_dir}")
    return 0


def _cmd_mesh(args) -> int:
    try:
        mesh = load_mesh(args.check)
    except (OSError, json.JSONDecodeError, MeshError) as exc:
        _emit_error("mesh", str(exc))
        return 2
    violations = validate_mesh(mesh)
    print(json.dumps({"valid": not violations,
                      "violations": [v.as_dict() for v in violations]},
                     sort_keys=True, indent=2))
    return 0 if not violations else 1


def _cmd_network(args) -> int:
    try:
        with open(args.grid) as fh:
            grid = grid_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        _emit_error("grid", str(exc))
        return 2
    mat = build_matrix(grid)
    st = stationary(mat)
    if args.out:
        mat.save(args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(mat.to_matrix_market())
    print(json.dumps({"stationary": [float(x) for x in st.vector],
                      "converged": bool(st.converged)}, sort_keys=True))
    return 0


def _emit_error(field_name, message):
    print(json.dumps({"error": {"field": field_name, "message": message}},
                     sort_keys=True))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fissura",
        description="preferential fluid-flow direction analysis of crack surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the analysis pipeline from a config file")
    p_run.add_argument("--config", required=True, help="JSON run configuration")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None, help="seed override")
    p_run.set_defaults(func=_cmd_run)

    p_mesh = sub.add_parser("mesh", help="validate a mesh JSON file")
    p_mesh.add_argument("--check", required=True, help="mesh JSON to validate")
    p_mesh.set_defaults(func=_cmd_mesh)

    p_net = sub.add_parser("network", help="build a transmission matrix from a grid spec")
    p_net.add_argument("--grid", required=True, help="grid JSON spec")
    p_net.add_argument("--out", default=None, help="MatrixMarket output path")
    p_net.set_defaults(func=_cmd_network)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
