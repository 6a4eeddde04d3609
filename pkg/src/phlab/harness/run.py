"""Experiment execution, CSV/manifest persistence and run aggregation."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import __version__, kernels
from ..core import ProductSystem, SystemPoint, analytic_lyapunov_spectrum, orbit_chunks
from ..fixedpoint import INV_SCALE
from ..lattice import ergodicity_certificate, escape_certificate
from ..stats import (GridSampler, RandomSampler, basin_survey, boxes_per_axis,
                     center_exponent_series, default_ladder, lyapunov_estimate,
                     parse_observable, rotation_weyl_closed_form, sandwich_check,
                     transitivity_probe, weyl_sums)
from .config import ORBIT_KINDS, ConfigError, ExperimentConfig

SCHEMA_VERSION = 1


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)


@dataclass
class Outcome:
    tables: list
    assertions: dict
    summary: dict


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, kind: str, table: Table) -> None:
    buf = io.StringIO()
    buf.write(f"# phlab {kind}/{table.name} schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _atomic_json(path: Path, obj) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# ------------------------------------------------------------------ kinds

def _certify(cfg: ExperimentConfig, s: ProductSystem, p0) -> Outcome:
    rep = ergodicity_certificate(s, cfg.lattice_bound, cfg.k_bound, cfg.step_budget, cfg.margin_floor)
    esc = escape_certificate(s.cat, cfg.lattice_bound, cfg.step_budget)
    kcols = [f"k{i + 1}" for i in range(s.r)]
    margins = Table("margins", kcols + ["margin"], [list(k) + [m] for k, m in rep.margins.items()])
    steps = Table("escape", ["m", "n", "steps"],
                  [[m, n, st] for (m, n), st in sorted(esc.steps.items())]
                  + [[m, n, None] for m, n in esc.failures])
    assertions = {
        "escape_complete": rep.escape_passed and rep.n_indices == (2 * cfg.lattice_bound + 1) ** 2 - 1,
        "margins_above_floor": rep.min_margin > cfg.margin_floor,
    }
    summary = {"certificate_passed": rep.passed, "min_margin": rep.min_margin, "argmin_k": list(rep.argmin_k),
               "max_escape_step": rep.max_escape_step, "n_indices": rep.n_indices}
    return Outcome([margins, steps], assertions, summary)


def _weyl(cfg, s, p0) -> Outcome:
    tab = weyl_sums(s, p0, cfg.box, cfg.n, workers=cfg.workers)
    kcols = [f"k{i + 1}" for i in range(s.r)]
    rows = []
    worst = 0.0
    worst_cf = 0.0
    zero_ok = True
    for f, N, mod, val in tab.rows():
        cf = None
        if f.m == 0 and f.n == 0 and f.j == 0:
            cf = rotation_weyl_closed_form(s, f.k, N)
            worst_cf = max(worst_cf, abs(cf - mod))
        if f.is_zero():
            zero_ok = zero_ok and val == 1.0
        elif f.m or f.n or any(f.k):
            worst = max(worst, mod)
        rows.append([f.m, f.n, *f.k, f.j, N, mod, val.real, val.imag, cf])
    assertions = {
        "zero_row_exact": zero_ok,
        "moduli_at_most_one": bool(np.all(np.abs(tab.values) <= 1.0 + 1e-15)),
        "nonzero_below_threshold": worst < cfg.weyl_threshold,
        "rotation_closed_form": worst_cf <= cfg.closed_form_tol,
    }
    table = Table("weyl", ["m", "n", *kcols, "j", "N", "modulus", "re", "im", "closed_form"], rows)
    return Outcome([table], assertions, {"max_nonzero_modulus": worst,
                                         "max_closed_form_error": worst_cf, "rows": len(rows)})


def _lyapunov(cfg, s, p0) -> Outcome:
    est = lyapunov_estimate(s, p0, cfg.n)
    analytic = analytic_lyapunov_spectrum(s.without_center())
    rows = [["cat", 0, est.cat[0], analytic[0]], ["cat", 1, est.cat[1], analytic[-1]]]
    rows += [["rotation", i, e, 0.0] for i, e in enumerate(est.rotations)]
    assertions = {"rotation_exactly_zero": all(e == 0.0 for e in est.rotations),
                  "cat_analytic": abs(est.cat[0] - analytic[0]) <= 1e-9 and abs(est.cat[1] + analytic[0]) <= 1e-9}
    summary = {"cat": list(est.cat), "rotations": list(est.rotations), "center": est.center}
    if s.has_center:
        limit = math.log1p(-s.center.epsilon)
        rows.append(["center", 0, est.center, limit])
        assertions["center_near_sink_value"] = abs(est.center - limit) <= cfg.lyap_tol
        summary["center_error"] = abs(est.center - limit)
    return Outcome([Table("lyapunov", ["block", "index", "exponent", "analytic"], rows)], assertions, summary)


def grid_source_count(s: ProductSystem, n: int, tol: float) -> int:
    """Grid points i/n lying within ``tol`` of a source of h, counted exactly."""
    h = s.center
    count = 0
    seen = set()
    for k in range(h.ell):
        src = (Fraction(h.phase) + Fraction(k, h.ell)) % 1
        c = math.floor(src * n)
        for i in range(c - 1, c + 3):
            d = abs(Fraction(i, n) - src)
            d = min(d % 1, 1 - d % 1)
            if d < Fraction(tol) and i % n not in seen:
                seen.add(i % n)
                count += 1
    return count


def _basins(cfg, s, p0) -> Outcome:
    sampler = RandomSampler(int(cfg.seed)) if cfg.sampler == "random" else GridSampler()
    rep = basin_survey(s, sampler, cfg.samples, cfg.max_iter, cfg.radius, cfg.source_tol, cfg.workers)
    ell = s.center.ell
    expect = 1.0 / ell
    sigma3 = 3.0 * math.sqrt(expect * (1.0 - expect) / rep.total)
    rows = [[i, pos, c, fr, hw, expect] for i, (pos, c, fr, hw) in
            enumerate(zip(rep.sinks, rep.counts, rep.fractions, rep.half_widths))]
    rows.append(["unresolved", None, rep.unresolved, rep.unresolved / rep.total, None, None])
    assertions = {
        "basin_equality": rep.resolved_agree == rep.resolved,
        "covering": sum(rep.counts) + rep.unresolved == rep.total,
    }
    if cfg.sampler == "random":
        assertions["fractions_within_3sigma"] = all(abs(f - expect) <= sigma3 for f in rep.fractions)
        assertions["sinks_found"] = rep.sinks_found == ell
        assertions["no_unresolved"] = rep.unresolved == 0
    else:
        assertions["unresolved_equals_grid_sources"] = (
            rep.unresolved == grid_source_count(s, cfg.samples, cfg.source_tol))
    summary = {"ell": ell, "sinks_found": rep.sinks_found, "fractions": rep.fractions,
               "unresolved": rep.unresolved, "total": rep.total,
               "max_fraction_error": max(abs(f - expect) for f in rep.fractions),
               "resolved_agree": rep.resolved_agree}
    return Outcome([Table("basins", ["sink", "position", "count", "fraction", "half_width_3sigma",
                                     "expected_fraction"], rows)], assertions, summary)


def _sandwich(cfg, s, p0) -> Outcome:
    obs = parse_observable(cfg.obs, s.r)
    ladder = cfg.ladder or default_ladder(cfg.n)
    rep = sandwich_check(s, obs, p0, cfg.sandwich_eps, cfg.n, ladder)
    rows = [[r.n, r.D, r.bound, r.holds] for r in rep.rows]
    Ds = [r.D for r in rep.rows]
    assertions = {"bound_holds": rep.holds,
                  "difference_decays": all(b <= a for a, b in zip(Ds, Ds[1:]))}
    summary = {"sink_index": rep.sink_index, "delta": rep.delta, "N_delta": rep.N_delta, "P": rep.P,
               "violations": rep.violations, "final_D": Ds[-1],
               "lipschitz_estimated": rep.lipschitz_estimated}
    return Outcome([Table("sandwich", ["n", "D", "bound", "holds"], rows)], assertions, summary)


def _transitivity(cfg, s, p0) -> Outcome:
    ladder = default_ladder(cfg.n)
    if ladder[-1] != cfg.n:
        ladder.append(cfg.n)
    K = boxes_per_axis(cfg.transit_eps)
    rows = [[n, K ** (2 + s.r), transitivity_probe(s, p0, cfg.transit_eps, n)] for n in ladder]
    frac = rows[-1][2]
    return Outcome([Table("transitivity", ["N", "boxes", "visited_fraction"], rows)],
                   {"all_boxes_visited": frac == 1.0}, {"visited_fraction": frac, "boxes": rows[-1][1]})


def _simulate(cfg, s, p0) -> Outcome:
    kcols = [f"w{i + 1}" for i in range(s.r)]
    raw_cols = ["x_raw", "y_raw"] + [f"{c}_raw" for c in kcols]
    cols = ["index", "x", "y", *kcols] + (["z"] if s.has_center else []) + raw_cols
    rows = []
    last = None
    idx = 0
    for T, Z in orbit_chunks(s, p0, cfg.n, cfg.stride):
        F = T.astype(np.float64) * INV_SCALE
        for i in range(T.shape[0]):
            row = [idx * cfg.stride, *F[i].tolist()]
            if Z is not None:
                row.append(float(Z[i]))
            rows.append(row + [int(v) for v in T[i]])
            idx += 1
        last = T[-1]
    # exactness: stepping the torus factors back recovers the start
    back = next(orbit_chunks(s.torus_inverse(), SystemPoint.from_raw([int(v) for v in last]),
                             2, (cfg.n - 1) * cfg.stride if cfg.n > 1 else 1))[0]
    target = back[1] if cfg.n > 1 else last
    reversible = bool(np.array_equal(target, p0.torus_raw()))
    return Outcome([Table("orbit", cols, rows)], {"exactly_reversible": reversible},
                   {"samples": cfg.n, "stride": cfg.stride})


_KINDS = {"certify": _certify, "weyl": _weyl, "lyapunov": _lyapunov, "basins": _basins,
          "sandwich": _sandwich, "transitivity": _transitivity, "simulate": _simulate}


def run(cfg: ExperimentConfig) -> dict:
    """Validate, execute, write CSVs and ``manifest.json``; return the manifest."""
    s = cfg.validate()
    p0 = cfg.initial_point(s) if cfg.kind in ORBIT_KINDS else None
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    outcome = _KINDS[cfg.kind](cfg, s, p0)
    files = []
    for table in outcome.tables:
        name = f"{table.name}.csv"
        write_csv(out / name, cfg.kind, table)
        files.append(name)
    assertions = {k: bool(v) for k, v in outcome.assertions.items()}
    manifest = {
        "tool": "phlab",
        "version": __version__,
        "backend": kernels.BACKEND,
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "initial_point": None if p0 is None else list(p0.as_floats()),
        "outputs": files,
        "assertions": assertions,
        "passed": all(assertions.values()),
        "summary": outcome.summary,
        "started_utc": started,
        "wall_time_s": time.perf_counter() - t0,
    }
    _atomic_json(out / "manifest.json", manifest)
    return manifest


# ------------------------------------------------------------------ report

def load_manifest(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    try:
        m = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"missing manifest {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt manifest {p}: {exc}") from exc
    for key in ("kind", "summary", "assertions", "passed"):
        if key not in m:
            raise ConfigError(f"corrupt manifest {p}: no {key!r}")
    m["_path"] = str(p)
    return m


def report_tables(paths) -> dict:
    """Columnar summary per experiment kind: ``{kind: Table}``."""
    manifests = [load_manifest(p) for p in paths]
    groups: dict = {}
    for m in manifests:
        groups.setdefault(m["kind"], []).append(m)
    tables = {}
    for kind in sorted(groups):
        ms = groups[kind]
        if kind == "basins":
            t = Table(kind, ["run", "ell", "sinks_found", "max_abs_fraction_error", "unresolved", "passed"])
            for m in sorted(ms, key=lambda m: (m["summary"]["ell"], m["_path"])):
                sm = m["summary"]
                t.rows.append([m["_path"], sm["ell"], sm["sinks_found"], sm["max_fraction_error"],
                               sm["unresolved"], m["passed"]])
        else:
            keys = sorted({k for m in ms for k in m["summary"]})
            t = Table(kind, ["run", *keys, "passed"])
            for m in sorted(ms, key=lambda m: m["_path"]):
                t.rows.append([m["_path"], *[m["summary"].get(k) for k in keys], m["passed"]])
        tables[kind] = t
    return tables


def report(paths) -> str:
    """Human-readable summary of one or more runs, grouped by kind."""
    paths = list(paths)
    if len(paths) == 1:
        m = load_manifest(paths[0])
        lines = [f"{m['kind']}  ({m['_path']})  {'PASS' if m['passed'] else 'FAIL'}"]
        lines += [f"  {k}: {_fmt(v)}" for k, v in sorted(m["summary"].items())]
        lines += [f"  [{'ok' if v else 'FAIL'}] {k}" for k, v in sorted(m["assertions"].items())]
        return "\n".join(lines)
    out = []
    for kind, t in report_tables(paths).items():
        out.append(f"== {kind} ==")
        width = [max(len(c), *(len(_fmt(r[i])) for r in t.rows)) for i, c in enumerate(t.columns)]
        out.append("  ".join(c.ljust(w) for c, w in zip(t.columns, width)))
        for r in t.rows:
            out.append("  ".join(_fmt(v).ljust(w) for v, w in zip(r, width)))
    return "\n".join(out)
