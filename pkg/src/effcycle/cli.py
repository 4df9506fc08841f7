"""Command line driver: volumes, tilings, developed complexes, towers and
minimizing sequences, with CSV/JSON artifacts for plotting.

Settings come from an INI file (section ``[effcycle]``) and are overridden
by command flags.  Exit status is 0 when every requested check passes, 1
when a check fails and 2 on configuration errors.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import click
import numpy as np

from .hyperbolic import TAU_GEO, GeometryError
from .volume import V3, lobachevsky

SCHEMA_VERSION = 1
IMAX_LIMIT = 16
RADIUS_LIMIT = 6
SECTION = "effcycle"
EXIT_FAIL = 1
EXIT_CONFIG = 2


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


@dataclass(frozen=True)
class RunConfig:
    manifold: str = "figure8"
    imax: int = 10
    seed: int = 0
    tau_geo: float = TAU_GEO
    tau_cls: float = 1e-6
    tau_reg: float = 1e-9
    mc_budget: int = 10_000_000
    mc_samples: int = 0  # 0: closed-form clips only
    jitter: bool = True
    output_dir: str = "."

    def validate(self) -> "RunConfig":
        if self.manifold not in ("figure8", "gieseking"):
            raise ConfigError(f"unknown manifold {self.manifold!r}")
        if not 1 <= self.imax <= IMAX_LIMIT:
            raise ConfigError(f"imax must be in 1..{IMAX_LIMIT}")
        for name in ("tau_geo", "tau_cls", "tau_reg"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.mc_samples < 0 or self.mc_budget < 1:
            raise ConfigError("Monte Carlo samples must be >= 0 and the budget >= 1")
        if self.mc_samples > self.mc_budget:
            raise ConfigError(f"mc_samples {self.mc_samples} exceeds mc_budget {self.mc_budget}")
        return self

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        if not parser.has_section(SECTION):
            raise ConfigError(f"config {path} has no [{SECTION}] section")
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in parser.items(SECTION):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                if known[key] in ("bool", bool):
                    values[key] = parser.getboolean(SECTION, key)
                elif known[key] in ("int", int):
                    values[key] = int(raw)
                elif known[key] in ("float", float):
                    values[key] = float(raw)
                else:
                    values[key] = raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}")
        return cls(**values)

    def override(self, **flags) -> "RunConfig":
        return replace(self, **{k: v for k, v in flags.items() if v is not None}).validate()

    def out(self, name: str) -> Path:
        p = Path(self.output_dir)
        p.mkdir(parents=True, exist_ok=True)
        return p / name


def fmt(x) -> str:
    from .spine import fmt as _fmt

    return _fmt(x)


def _round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def write_json(data, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_round12(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _manifold(name: str):
    from .manifold import figure8, gieseking

    return {"figure8": figure8, "gieseking": gieseking}[name]()


def _orientable(tri):
    """The triangulation itself, or its orientation double cover."""
    from .manifold import orientation_double_cover

    return tri if tri.is_orientable() else orientation_double_cover(tri)


def _echo(line: str) -> None:
    click.echo(line)


# --------------------------------------------------------------------------
# commands

@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="INI file with an [effcycle] section.")
@click.option("--output-dir", default=None, help="Directory for CSV/JSON outputs.")
@click.option("--seed", type=int, default=None)
@click.option("--manifold", type=click.Choice(["figure8", "gieseking"]), default=None)
@click.pass_context
def main(ctx, config_path, output_dir, seed, manifold):
    """Efficient cycles of cusped hyperbolic 3-manifolds."""
    cfg = RunConfig.from_file(config_path) if config_path else RunConfig()
    ctx.obj = cfg.override(output_dir=output_dir, seed=seed, manifold=manifold)


@main.command()
@click.pass_obj
def volume(cfg: RunConfig):
    """Hyperbolic volume from the developed tetrahedra, in units of v3."""
    from .manifold import cached_develop
    from .simplices import volume as simplex_volume

    tri = _manifold(cfg.manifold)
    cover = _orientable(tri)
    dev = cached_develop(cover)
    sheets = 1 if cover is tri else 2
    vol = math.fsum(simplex_volume(dev.canonical_simplex(t)) for t in range(cover.num_tetrahedra)) / sheets
    ratio = vol / V3
    ok = abs(ratio - tri.num_tetrahedra) < 1e-6
    _echo(f"manifold {tri.name}")
    _echo(f"tetrahedra {tri.num_tetrahedra}")
    _echo(f"v3 {fmt(V3)}")
    _echo(f"volume {fmt(vol)}")
    _echo(f"volume/v3 {ratio:.6f}")
    _echo("PASS" if ok else "FAIL")
    sys.exit(0 if ok else EXIT_FAIL)


@main.command()
@click.option("--depth", type=int, default=3, show_default=True)
@click.pass_obj
def tile(cfg: RunConfig, depth):
    """Enumerate the regular ideal tiling and write tiling.json."""
    from .tiling import MAX_DEPTH, generate_tiling

    if not 0 <= depth <= MAX_DEPTH:
        raise ConfigError(f"depth must be in 0..{MAX_DEPTH}")
    tiling = generate_tiling(depth)
    path = cfg.out("tiling.json")
    write_json(tiling.to_json(), path)
    _echo(f"tiles {len(tiling)}")
    _echo(f"wrote {path}")


@main.command()
@click.option("--radius", type=int, default=3, show_default=True)
@click.pass_obj
def develop(cfg: RunConfig, radius):
    """Develop the triangulation into the tiling and write complex.json."""
    from .manifold import develop as develop_tri

    if not 0 <= radius <= RADIUS_LIMIT:
        raise ConfigError(f"radius must be in 0..{RADIUS_LIMIT}")
    tri = _orientable(_manifold(cfg.manifold))
    dev = develop_tri(tri, radius)
    data = {
        "schema": "developed-complex", "version": SCHEMA_VERSION, "triangulation": tri.to_json(),
        "radius": radius,
        "tiles": [{"tet": t.tet, "radius": t.radius, "marking": t.marking.to_json(),
                   "deck": t.deck.to_json()} for t in dev.tiles],
        "generators": [g.to_json() for g in dev.generators],
    }
    path = cfg.out("complex.json")
    write_json(data, path)
    _echo(f"tiles {len(dev.tiles)}")
    _echo(f"generators {len(dev.generators)}")
    _echo(f"wrote {path}")


@main.command()
@click.option("--i", "window", type=int, default=1, show_default=True, help="Tower row (1: base spine).")
@click.pass_obj
def adapt(cfg: RunConfig, window):
    """Adapted triangulation of tower row ``i``; writes triangulation.json."""
    from .spine import (
        adapted_triangulation, dual_spine, dualize_back, insert_theta_spines, tower_row,
    )

    if not 1 <= window <= cfg.imax:
        raise ConfigError(f"--i must be in 1..{cfg.imax}")
    tri = _orientable(_manifold(cfg.manifold))
    if window == 1:
        at = dualize_back(insert_theta_spines(dual_spine(tri), tri))
    else:
        at = adapted_triangulation(tower_row(window, tri=tri), tri)
    data = {"schema": "triangulation", "version": SCHEMA_VERSION, "source": tri.to_json(),
            "window": window, "adapted": at.to_json()}
    path = cfg.out("triangulation.json")
    write_json(data, path)
    _echo(f"tetrahedra {len(at.tetrahedra)} residual {at.residual_count} non-residual {at.non_residual_count}")
    _echo(f"wrote {path}")


@main.command()
@click.option("--imax", type=int, default=None)
@click.pass_obj
def tower(cfg: RunConfig, imax):
    """Vertex counts of the covering tower; writes tower.csv."""
    from .spine import tower_row, write_tower_csv

    cfg = cfg.override(imax=imax)
    tri = _orientable(_manifold(cfg.manifold))
    rows = [tower_row(i, tri=tri) for i in range(1, cfg.imax + 1)]
    path = cfg.out("tower.csv")
    write_tower_csv(rows, path)
    ok = all(all(r.bounds()) and r.ratio <= r.envelope() for r in rows)
    for r in rows:
        _echo(f"i={r.i} d={r.d} B={r.v_B} C={r.v_C} D={r.v_D} r/d={fmt(r.ratio)}")
    _echo(f"wrote {path}")
    _echo("PASS" if ok else "FAIL")
    sys.exit(0 if ok else EXIT_FAIL)


CONVERGENCE_COLUMNS = ["i", "d_i", "r_i/d_i", "l1Norm", "omegaEps", "omegaStderr", "volThick",
                       "totalVariation", "maxAtomError", "offSupportMax", "relativeCycle"]


def minimize_rows(cfg: RunConfig, progress=None):
    """Build and measure ``c_1 .. c_imax``; returns (rows, atom keys, last measure)."""
    from .chains import (
        hat_integrals, is_relative_cycle, l1_norm, mu_t, off_support_centers, omega_eps, theta,
    )
    from .manifold import cached_develop, thick_part
    from .spine import build_minimizing_chain, tower_row

    tri = _orientable(_manifold(cfg.manifold))
    dev = cached_develop(tri)
    muT = mu_t(tri, dev)
    keys = [k for k, _ in muT.atoms]
    target = np.array([w for _, w in muT.atoms])
    centres = [k.simplex(dev) for k in keys]
    off = off_support_centers(dev, 16, seed=cfg.seed)
    method = "mc" if cfg.mc_samples else "quadrature"
    rows, m = [], None
    for i in range(1, cfg.imax + 1):
        row = tower_row(i, tri=tri, dev=dev)
        c = build_minimizing_chain(tri, row, jitter_seed=cfg.seed if cfg.jitter else None, dev=dev)
        om = omega_eps(c, i, dev, method=method, samples=cfg.mc_samples, seed=cfg.seed, budget=cfg.mc_budget)
        m = theta(c, dev, tol=cfg.tau_cls)
        hats = hat_integrals(m, centres, dev)
        rows.append({
            "i": i, "d_i": row.d, "r_i/d_i": row.ratio, "l1Norm": l1_norm(c),
            "omegaEps": om.value, "omegaStderr": om.stderr,
            "volThick": thick_part(tri, i, dev).thick_volume(),
            "totalVariation": m.total_variation(),
            "maxAtomError": float(np.abs(hats - target).max()),
            "offSupportMax": float(np.abs(hat_integrals(m, off, dev)).max()),
            "relativeCycle": int(bool(is_relative_cycle(c, i, dev))),
            "weights": hats, "row": row,
        })
        if progress:
            progress(rows[-1])
    return rows, keys, m


@main.command()
@click.option("--imax", type=int, default=None)
@click.option("--jitter/--no-jitter", default=None)
@click.option("--mc-samples", type=int, default=None, help="Monte Carlo samples for interior clips (0: none).")
@click.pass_obj
def minimize(cfg: RunConfig, imax, jitter, mc_samples):
    """Minimizing sequence c_1 .. c_imax; writes convergence.csv, tower.csv, measure.json."""
    from .spine import write_tower_csv

    cfg = cfg.override(imax=imax, jitter=jitter, mc_samples=mc_samples)

    def progress(r):
        _echo(f"i={r['i']} l1={fmt(r['l1Norm'])} omega={fmt(r['omegaEps'])} "
              f"maxAtomError={fmt(r['maxAtomError'])}")

    rows, keys, m = minimize_rows(cfg, progress)
    atom_cols = [f"w_{k.tet}_{''.join(map(str, k.perm))}" for k in keys]
    path = cfg.out("convergence.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS + atom_cols)
        for r in rows:
            w.writerow([fmt(r[c]) for c in CONVERGENCE_COLUMNS] + [fmt(x) for x in r["weights"]])
    write_tower_csv([r["row"] for r in rows], cfg.out("tower.csv"),
                    [{"l1Norm": r["l1Norm"], "omegaEps": r["omegaEps"], "maxAtomError": r["maxAtomError"]}
                     for r in rows])
    write_json(m.to_json(), cfg.out("measure.json"))
    ok = all(r["l1Norm"] <= 2 + r["r_i/d_i"] + 1e-12 and r["relativeCycle"] for r in rows)
    if len(rows) > 1:
        ok = ok and rows[-1]["maxAtomError"] < rows[0]["maxAtomError"]
    _echo(f"wrote {path}")
    _echo("PASS" if ok else "FAIL")
    sys.exit(0 if ok else EXIT_FAIL)


# --------------------------------------------------------------------------
# verification suites

def _suite_volume(cfg):
    from .manifold import cached_develop, figure8
    from .simplices import volume as simplex_volume

    dev = cached_develop(figure8())
    vol = sum(simplex_volume(dev.canonical_simplex(t)) for t in range(2))
    return [("regular ideal volume", abs(3 * lobachevsky(math.pi / 3) - V3) < 1e-12),
            ("figure8 volume 2 v3", abs(vol / V3 - 2) < 1e-6)]


def _suite_tiling(cfg):
    from .tiling import generate_tiling, pointwise_stabilizer_order, tile_stabilizer_order

    t = generate_tiling(3)
    return [("tile stabilizer order 24", tile_stabilizer_order(t) == 24),
            ("trivial pointwise stabilizer", pointwise_stabilizer_order(t) == 1)]


def _suite_manifold(cfg):
    from .manifold import figure8, gieseking, is_isomorphic, orientation_double_cover

    tri = figure8()
    return [("edge valences (6, 6)", sorted(tri.edge_valences()) == [6, 6]),
            ("edge angle sums 2 pi", all(abs(a - 2 * math.pi) < 1e-9 for a in tri.edge_angle_sums())),
            ("one cusp", tri.num_cusps() == 1),
            ("gieseking double cover", is_isomorphic(orientation_double_cover(gieseking()), tri))]


def _suite_measure(cfg):
    from .chains import check_reflection_law, mu_t
    from .manifold import figure8

    m = mu_t(figure8())
    ws = [w for _, w in m.atoms]
    return [("mu_T has 48 atoms", len(ws) == 48),
            ("atom weights 1/24", all(abs(w) == 1 / 24 for w in ws)),
            ("total variation 2", m.total_variation() == 2.0),
            ("reflection law", check_reflection_law(m, seed=cfg.seed).passed)]


def _suite_simplices(cfg):
    from .hyperbolic import Point3
    from .simplices import REGULAR_INRADIUS, GeodesicSimplex3, inradius, is_degenerate, volumes

    rng = np.random.default_rng(cfg.seed)
    P = rng.normal(size=(1000, 4, 3))
    P /= np.linalg.norm(P, axis=2, keepdims=True)
    P *= rng.random((1000, 4, 1)) ** (1 / 3) * 0.999
    sims = [GeodesicSimplex3(tuple(Point3.from_klein(p) for p in q)) for q in P]
    vols = volumes([s for s in sims if not is_degenerate(s)])
    d = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)
    pulled = GeodesicSimplex3(tuple(Point3.from_klein(math.tanh(10) * v) for v in d))
    return [("volume <= v3", bool(np.all(vols <= V3 + 1e-9))),
            ("pulled inradius near atanh(1/3)", abs(inradius(pulled) - REGULAR_INRADIUS) < 1e-3)]


def _suite_spine(cfg):
    from .spine import characteristic_cover, cusp_cellularization, tower_row

    tri = _orientable(_manifold(cfg.manifold))
    cell = cusp_cellularization(tri)
    rows = [tower_row(i, tri=tri) for i in range(1, min(cfg.imax, 10) + 1)]
    return [("cellularization chi 0", cell.euler_characteristic() == 0),
            ("x=3 cover degree 9", characteristic_cover(cell, 3).degree == 9),
            ("tower d_i = i^2", all(r.d == r.i ** 2 for r in rows)),
            ("tower vertex bounds", all(all(r.bounds()) for r in rows)),
            ("tower envelope", all(r.ratio <= r.envelope() for r in rows))]


def _suite_chains(cfg):
    from .chains import is_relative_cycle, l1_norm, orientation_mismatch_mass, theta
    from .manifold import cached_develop
    from .spine import build_minimizing_chain, tower_row

    tri = _orientable(_manifold(cfg.manifold))
    dev = cached_develop(tri)
    out = []
    for i in range(1, min(cfg.imax, 4) + 1):
        row = tower_row(i, tri=tri, dev=dev)
        c = build_minimizing_chain(tri, row, dev=dev)
        tv = theta(c, dev, tol=cfg.tau_cls).total_variation()
        out.append((f"c_{i} norm and cycle", l1_norm(c) <= 2 + row.ratio + 1e-12
                    and bool(is_relative_cycle(c, i, dev)) and orientation_mismatch_mass(c) == 0))
        out.append((f"c_{i} no loss of mass", 2 - row.ratio - 1e-6 <= tv <= 2 + row.ratio + 1e-12))
    return out


SUITES = [("volume", _suite_volume), ("tiling", _suite_tiling), ("manifold", _suite_manifold),
          ("measure", _suite_measure), ("simplices", _suite_simplices), ("spine", _suite_spine),
          ("chains", _suite_chains)]


@main.command()
@click.option("--suite", "only", multiple=True, type=click.Choice([n for n, _ in SUITES]))
@click.pass_obj
def verify(cfg: RunConfig, only):
    """Run the invariant suites and report pass/fail counts."""
    passed = failed = 0
    for name, fn in SUITES:
        if only and name not in only:
            continue
        t = time.perf_counter()
        try:
            checks = fn(cfg)
        except (GeometryError, ValueError, RuntimeError) as exc:
            checks = [(f"error: {exc}", False)]
        for label, ok in checks:
            _echo(f"{'PASS' if ok else 'FAIL'} {name}: {label}")
            passed += bool(ok)
            failed += not ok
        _echo(f"     {name} done in {time.perf_counter() - t:.1f}s")
    _echo(f"{passed} passed, {failed} failed")
    sys.exit(0 if failed == 0 else EXIT_FAIL)


if __name__ == "__main__":
    main()
