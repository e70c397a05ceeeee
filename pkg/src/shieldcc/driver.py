"""Batch execution: sweeps, convergence studies, dataset emission.

Each sweep point is solved independently (worker-pool friendly) and
written to its own JSON file via temp-file-then-rename, so interrupted
sweeps resume by skipping completed points.  The final CSV is assembled
from the per-point files with fixed-precision formatting for
reproducible diffs.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import units
from .config import RunConfig
from .interaction import adiabats, build_coupling_model, export_adiabats_csv
from .monomer import DressedRotorBasis, export_stark_map
from .observables import cross_sections
from .pair_basis import build_pair_basis, monomer_table, partition_classes
from .propagator import solve_coupling_model


def _point_tag(field, e_coll, b_field):
    return (f"F{field * units.AU_TO_KVCM:.6f}"
            f"_E{e_coll * units.AU_TO_UK:.6f}"
            f"_B{b_field * units.AU_TO_GAUSS:.4f}")


def solve_point(cfg: RunConfig, field, e_coll, b_field) -> dict:
    """Solve all requested (M_tot, parity) blocks at one condition point.

    For B = 0 the blocks at +-M_tot give identical cross sections (time
    reversal), so only M_tot >= 0 is solved and positive blocks counted
    twice when the requested list is symmetric.
    """
    mtots = sorted(set(cfg.mtot_list))
    weights = {m: 1 for m in mtots}
    if b_field == 0.0 and all(-m in mtots for m in mtots):
        weights = {m: (2 if m > 0 else 1) for m in mtots if m >= 0}

    rotor_basis = DressedRotorBasis(cfg.molecule, field, cfg.n_max)
    table = monomer_table(rotor_basis, cfg.ntilde_max,
                          include_spin=cfg.include_spin, b_field=b_field)
    solutions = []
    for m_tot, weight in sorted(weights.items()):
        spec = cfg.basis_spec(m_tot)
        channels = build_pair_basis(spec, table)
        class1, class2, _ = partition_classes(
            channels, spec, table, cfg.incoming, margin=cfg.class_margin)
        model = build_coupling_model(
            class1, class2, table, cfg.incoming, c6_elec=cfg.c6_elec,
            denominator_floor=cfg.denominator_floor, b_field=b_field)
        sol = solve_coupling_model(model, e_coll, cfg.propagation,
                                   m_tot, spec.l_parity)
        solutions.extend([sol] * weight)
    obs = cross_sections(solutions)
    return _observables_to_dict(obs, cfg)


def _observables_to_dict(obs, cfg: RunConfig) -> dict:
    def lev_str(lev):
        return "+".join("(" + ",".join(str(x) for x in lab) + ")"
                        for lab in lev)

    point = {
        "field_kVcm": obs.field * units.AU_TO_KVCM,
        "B_G": obs.b_field * units.AU_TO_GAUSS,
        "Ecoll_uK": obs.e_coll * units.AU_TO_UK,
        "Mtot_list": list(cfg.mtot_list),
        "incoming": lev_str(obs.incoming_level),
        "sigma_a0sq": {
            "el": obs.sigma_el, "el_00": obs.sigma_el_00,
            "el_higherL": obs.sigma_el_higher,
            "inel": obs.sigma_inel_total, "short": obs.sigma_short,
            "loss": obs.sigma_loss,
        },
        "rates_cm3s": {
            "el": obs.k_el, "inel": obs.k_inel,
            "short": obs.k_short, "loss": obs.k_loss,
        },
        "state_to_state_a0sq": {lev_str(k): v
                                for k, v in sorted(obs.state_to_state.items())},
        "partial_a0sq": {str(l): d for l, d in sorted(obs.partial.items())},
    }
    if obs.a_complex is not None:
        point["alpha_a0"] = obs.a_complex.real
        point["beta_a0"] = -obs.a_complex.imag
    return point


def _solve_point_job(args):
    cfg, field, e_coll, b_field, path = args
    try:
        point = solve_point(cfg, field, e_coll, b_field)
    except Exception as exc:          # per-point failures must not kill sweeps
        return (path, None, f"{type(exc).__name__}: {exc}")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(point, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)
    return (path, point, None)


def run_sweep(cfg: RunConfig, points=None, jobs: int = 1,
              log=print) -> tuple:
    """Run (and/or resume) a sweep over condition points.

    ``points`` defaults to the cross product of the configured field,
    energy and B grids.  Returns (rows, failures): rows are the per-point
    dictionaries in deterministic order; failures a list of messages.
    """
    if points is None:
        points = [(f, e, b) for f in cfg.fields for e in cfg.energies
                  for b in cfg.b_fields]
    os.makedirs(os.path.join(cfg.out_dir, "points"), exist_ok=True)

    jobs_todo = []
    for field, e_coll, b_field in points:
        path = os.path.join(cfg.out_dir, "points",
                            _point_tag(field, e_coll, b_field) + ".json")
        if os.path.exists(path):
            continue
        jobs_todo.append((cfg, field, e_coll, b_field, path))

    failures = []
    if jobs_todo:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_solve_point_job, jobs_todo))
        else:
            results = [_solve_point_job(j) for j in jobs_todo]
        for path, _, err in results:
            if err is not None:
                failures.append(f"{os.path.basename(path)}: {err}")
                log(f"point failed: {os.path.basename(path)}: {err}")

    rows = []
    for field, e_coll, b_field in points:
        path = os.path.join(cfg.out_dir, "points",
                            _point_tag(field, e_coll, b_field) + ".json")
        if os.path.exists(path):
            with open(path) as fh:
                rows.append(json.load(fh))
    return rows, failures


CSV_HEADER = ["field_kVcm", "B_G", "Ecoll_uK", "Mtot_list", "quantity",
              "Lin", "value", "units"]


def write_results_csv(rows, path, digits: int = 12,
                      timestamp: bool = False) -> None:
    """Emit the long-format results table (one quantity per line)."""
    fmt = f"%.{digits}g"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if timestamp:
            fh.write(f"# written {datetime.now(timezone.utc).isoformat()}\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            base = [fmt % row["field_kVcm"], fmt % row["B_G"],
                    fmt % row["Ecoll_uK"],
                    ";".join(str(m) for m in row["Mtot_list"])]
            for key, val in row["sigma_a0sq"].items():
                writer.writerow(base + [f"sigma_{key}", "all",
                                        fmt % val, "a0^2"])
            for key, val in row["rates_cm3s"].items():
                writer.writerow(base + [f"k_{key}", "all",
                                        fmt % val, "cm^3/s"])
            for lin, part in row["partial_a0sq"].items():
                for key, val in part.items():
                    writer.writerow(base + [f"sigma_{key}", lin,
                                            fmt % val, "a0^2"])
            if "alpha_a0" in row:
                writer.writerow(base + ["alpha", "0", fmt % row["alpha_a0"],
                                        "a0"])
                writer.writerow(base + ["beta", "0", fmt % row["beta_a0"],
                                        "a0"])


def write_results_json(rows, path, timestamp: bool = False) -> None:
    doc = {"points": rows}
    if timestamp:
        doc["written"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def run_field_sweep(cfg: RunConfig, jobs: int = 1, log=print):
    e_coll = cfg.energies[0]
    b_field = cfg.b_fields[0]
    points = [(f, e_coll, b_field) for f in cfg.fields]
    rows, failures = run_sweep(cfg, points, jobs=jobs, log=log)
    _emit(cfg, rows, "field_sweep")
    return rows, failures


def run_energy_sweep(cfg: RunConfig, jobs: int = 1, log=print):
    field = cfg.fields[0]
    b_field = cfg.b_fields[0]
    points = [(field, e, b_field) for e in cfg.energies]
    rows, failures = run_sweep(cfg, points, jobs=jobs, log=log)
    _emit(cfg, rows, "energy_sweep")
    return rows, failures


def _emit(cfg: RunConfig, rows, stem: str) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, stem + ".csv")
    write_results_csv(rows, csv_path, cfg.digits, cfg.timestamp)
    json_path = os.path.join(cfg.out_dir, stem + ".json")
    write_results_json(rows, json_path, cfg.timestamp)


def run_convergence(cfg: RunConfig, axis: str, jobs: int = 1, log=print):
    """Repeat one condition point while varying a single convergence axis.

    Emits, per axis value, the observables and their relative change with
    respect to the last (largest / reference) setting.
    """
    conv = cfg.raw.get("convergence", {})
    field, e_coll, b_field = cfg.fields[0], cfg.energies[0], cfg.b_fields[0]
    variants = []
    if axis == "lmax":
        for val in conv.get("lmax_values", [4, 8, 12, 16, 20]):
            sub = json.loads(json.dumps(cfg.raw))
            sub["basis"]["l_max"] = int(val)
            if sub["basis"]["mtot"] == "auto":
                sub["basis"]["mtot"] = list(range(-int(val), int(val) + 1))
            variants.append((str(val), sub))
    elif axis == "rotor_basis":
        for val in conv.get("rotor_basis_values",
                            ["minimal", "small", "large"]):
            sub = json.loads(json.dumps(cfg.raw))
            sub["basis"]["preset"] = val
            variants.append((str(val), sub))
    elif axis == "r_absorb":
        for val in conv.get("r_absorb_values_a0", [10.0, 50.0, 80.0]):
            sub = json.loads(json.dumps(cfg.raw))
            sub["propagation"]["r_absorb_a0"] = float(val)
            variants.append((str(val), sub))
    else:
        raise ValueError(f"unknown convergence axis {axis!r}; "
                         "use lmax | rotor_basis | r_absorb")

    from .config import resolve_config
    rows = []
    for tag, sub in variants:
        sub["output"]["dir"] = os.path.join(cfg.out_dir, f"{axis}_{tag}")
        subcfg = resolve_config(sub)
        point = solve_point(subcfg, field, e_coll, b_field)
        point["axis_value"] = tag
        rows.append(point)
        log(f"{axis} = {tag}: k_el = {point['rates_cm3s']['el']:.4e}  "
            f"k_loss = {point['rates_cm3s']['loss']:.4e} cm^3/s")

    ref = rows[-1]
    table = []
    for point in rows:
        entry = {"axis_value": point["axis_value"]}
        for key in ("el", "inel", "short", "loss"):
            val, rv = point["rates_cm3s"][key], ref["rates_cm3s"][key]
            entry[f"k_{key}"] = val
            entry[f"rel_change_{key}"] = \
                abs(val - rv) / rv if rv else (0.0 if val == 0 else math.inf)
        table.append(entry)

    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"convergence_{axis}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(table[0].keys()))
        writer.writeheader()
        writer.writerows(table)
    return table


def export_adiabats_run(cfg: RunConfig, r_min=40.0, r_max=1000.0,
                        n_points=200, m_tot=None, log=print):
    """Adiabatic curves of W(R) for the configured basis at each field."""
    m_tot = cfg.mtot_list[0] if m_tot is None else m_tot
    os.makedirs(cfg.out_dir, exist_ok=True)
    b_field = cfg.b_fields[0]
    paths = []
    for field in cfg.fields:
        rotor_basis = DressedRotorBasis(cfg.molecule, field, cfg.n_max)
        table = monomer_table(rotor_basis, cfg.ntilde_max,
                              include_spin=cfg.include_spin, b_field=b_field)
        spec = cfg.basis_spec(m_tot)
        channels = build_pair_basis(spec, table)
        class1, class2, _ = partition_classes(
            channels, spec, table, cfg.incoming, margin=cfg.class_margin)
        model = build_coupling_model(
            class1, class2, table, cfg.incoming, c6_elec=cfg.c6_elec,
            denominator_floor=cfg.denominator_floor, b_field=b_field)
        adset = adiabats(model, np.geomspace(r_min, r_max, n_points))
        path = os.path.join(
            cfg.out_dir, f"adiabats_F{field * units.AU_TO_KVCM:.4f}.csv")
        export_adiabats_csv(adset, path)
        paths.append(path)
        log(f"wrote {path} ({model.n_channels} curves)")
    return paths


def run_stark_map(cfg: RunConfig, ntilde_max=None, log=print):
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "stark_map.csv")
    export_stark_map(cfg.molecule, cfg.fields, cfg.n_max, path,
                     include_spin=cfg.include_spin,
                     b_field=cfg.b_fields[0],
                     ntilde_max=ntilde_max if ntilde_max is not None
                     else cfg.ntilde_max)
    log(f"wrote {path}")
    return path
