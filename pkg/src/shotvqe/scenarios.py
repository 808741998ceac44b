"""Scenario registry: named experiment recipes writing CSV/JSONL artifacts.

Each scenario owns a default-config overlay (desk-scale grids) and a runner;
user config files and CLI overrides layer on top.  Grid points execute in a
worker pool; rows are written in grid order by a single writer so output
files are reproducible byte-for-byte (modulo the meta header line).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import analysis, ansatz, optimize, output, shots, spectrum, thermal
from .config import Config, ConfigError, default_config, parse_config
from .lattice import (LatticeSpec, build_lattice, checkerboard_layers,
                      default_dimer_pairing, symmetry_group)
from .spectrum import HamiltonianSpec


class ResourceGuardError(RuntimeError):
    """Raised when a scenario would exceed the configured qubit budget."""


class NumericalFailure(RuntimeError):
    pass


def _guard(spec: LatticeSpec, cfg: Config) -> None:
    limit = cfg["run"]["max_qubits"]
    if spec.n_sites > limit and not cfg["run"]["allow_large"]:
        raise ResourceGuardError(
            f"{spec.geometry} {spec.extents} needs {spec.n_sites} qubits, over "
            f"the {limit}-qubit budget; pass --allow-large to opt in"
        )


def _seed_for(base: int, index: int) -> int:
    return int(np.random.SeedSequence((base, index)).generate_state(1)[0])


def _run_point(args: dict) -> dict:
    """Worker: one optimization run for one grid point."""
    cfg = Config(args["config_values"])
    spec = cfg.lattice_spec(l1=args.get("l1"), l2=args.get("l2"))
    ham = cfg.hamiltonian(spec, j2=args.get("j2"))
    circuit = cfg.circuit(spec, depth=args.get("depth"))
    projector = cfg.projector(spec, symmetry=args.get("symmetry"))
    ocfg = cfg.optimizer_config(
        seed=args["seed"], ns=args.get("ns"), eta=args.get("eta"),
        method=args.get("method"), mode=args.get("mode"))
    ground = args.get("ground")
    if ground is None:
        sd = spectrum.lowest_k(ham, 2, sz_zero=spec.n_sites >= 10)
        ground = sd.ground_manifold(ham.j1)
    rec = optimize.run(ham, circuit, projector, ocfg, ground)
    fl = analysis.effective_temperature(
        max(rec.var_f, 1e-300), ocfg.eta, ocfg.shot_config.n_shots, rec.n_params)
    row = {
        "scenario": args.get("scenario", ""),
        "geometry": spec.geometry,
        "l1": spec.extents[0],
        "l2": spec.extents[1],
        "boundary": f"{spec.boundary[0]}-{spec.boundary[1]}",
        "j2": ham.j2 / ham.j1,
        "depth": circuit.depth,
        "n_params": circuit.n_params,
        "symmetry": args.get("symmetry") or cfg["circuit"]["symmetry"],
        "ns": ocfg.shot_config.n_shots,
        "eta": ocfg.eta,
        "method": ocfg.method,
        "fbar": rec.fbar,
        "fbar_sem": rec.fbar_sem,
        "infidelity": rec.infidelity,
        "energy": rec.energy_mean,
        "var_e": rec.var_energy,
        "cv": ocfg.shot_config.n_shots ** 2 * rec.var_energy,
        "var_f": rec.var_f,
        "t_eff": fl.t_eff,
        "epsilon": fl.epsilon,
        "n_sgd": rec.n_sgd,
        "n_sgd_sem": rec.n_sgd_sem,
        "seed": args["seed"],
        "flags": ";".join(rec.flags).replace(",", " ") if rec.flags else "",
    }
    steps = output.run_steps_jsonl(
        rec, {k: row[k] for k in ("scenario", "j2", "ns", "eta", "depth")},
        cfg["run"]["log_every"])
    return {"row": row, "steps": steps}


def _map_points(points: list[dict], workers: int) -> list[dict]:
    if workers <= 1 or len(points) <= 1:
        return [_run_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, points))


def _snapshot(cfg: Config, scenario: str) -> dict:
    return {"scenario": scenario, "config_hash": cfg.digest(), "config": cfg.values}


SUMMARY_HEADER = [
    "scenario", "geometry", "l1", "l2", "boundary", "j2", "depth", "n_params",
    "symmetry", "ns", "eta", "method", "fbar", "fbar_sem", "infidelity",
    "energy", "var_e", "cv", "var_f", "t_eff", "epsilon", "n_sgd", "n_sgd_sem",
    "seed", "flags",
]


def _sweep(cfg: Config, scenario: str, out_dir: Path, points: list[dict]):
    for i, p in enumerate(points):
        p.setdefault("seed", _seed_for(cfg["run"]["seed"], i))
        p["config_values"] = cfg.values
        p["scenario"] = scenario
    results = _map_points(points, cfg["run"]["workers"])
    rows = [r["row"] for r in results]
    steps = [s for r in results for s in r["steps"]]
    files = [
        output.write_csv(out_dir / "summary.csv", SUMMARY_HEADER, rows,
                         _snapshot(cfg, scenario)),
        output.write_jsonl(out_dir / "steps.jsonl", steps),
    ]
    return rows, files


def _transition_rows(rows: list[dict], group_keys: tuple[str, ...]):
    """Transition detection per group of a shot sweep."""
    out = []
    groups = sorted({tuple(r[k] for k in group_keys) for r in rows})
    for g in groups:
        sub = sorted((r for r in rows if tuple(r[k] for k in group_keys) == g),
                     key=lambda r: r["ns"])
        ns = [r["ns"] for r in sub]
        f = [r["fbar"] for r in sub]
        v = [r["var_e"] for r in sub]
        entry = dict(zip(group_keys, g))
        try:
            tr = analysis.detect_transition(ns, f, v)
            entry.update(ns_c=tr.ns_critical, ns_var_peak=tr.ns_var_peak,
                         ns_departure=tr.ns_fidelity_departure,
                         consistent=tr.consistent,
                         flags=";".join(tr.flags).replace(",", " "),
                         epsilon_c=sub[tr.peak_index]["epsilon"])
        except analysis.AnalysisError as exc:
            entry.update(ns_c="", ns_var_peak="", ns_departure="",
                         consistent=False, flags=str(exc).replace(",", " "),
                         epsilon_c="")
        out.append(entry)
    return out


# --------------------------------------------------------------------------
# scenario implementations
# --------------------------------------------------------------------------

def scenario_fig1a(cfg: Config, out_dir: Path):
    """Fidelity and energy variance across the shot-budget sweep (SGD)."""
    ns_grid = cfg["sweep"]["ns_grid"] or (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48)
    j2_grid = cfg["sweep"]["j2_grid"] or (0.0, 0.4)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    points = [{"ns": ns, "j2": j2, "method": "sgd", "symmetry": "none"}
              for j2 in j2_grid for ns in ns_grid]
    rows, files = _sweep(cfg, "fig1a", out_dir, points)
    trows = _transition_rows(rows, ("j2",))
    files.append(output.write_csv(
        out_dir / "transition.csv",
        ["j2", "ns_c", "ns_var_peak", "ns_departure", "consistent", "epsilon_c", "flags"],
        trows, _snapshot(cfg, "fig1a")))
    return rows, files


def scenario_fig1c(cfg: Config, out_dir: Path):
    """Thermal Boltzmann sampling over an inverse-temperature grid."""
    beta_grid = cfg["sweep"]["beta_grid"] or (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
    j2_grid = cfg["sweep"]["j2_grid"] or (0.0, 0.4)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    circuit = cfg.circuit(spec)
    projector = cfg.projector(spec, symmetry="none")
    rows = []
    for j2 in j2_grid:
        ham = cfg.hamiltonian(spec, j2=j2)
        sd = spectrum.lowest_k(ham, 2, sz_zero=spec.n_sites >= 10)
        ground = sd.ground_manifold(ham.j1)
        for i, beta in enumerate(beta_grid):
            tcfg = cfg.thermal_config(seed=_seed_for(cfg["run"]["seed"], i), beta=beta)
            obs = thermal.metropolis_chain(ham, circuit, projector, tcfg, ground)
            rows.append({
                "scenario": "fig1c", "j2": j2, "beta": beta,
                "mean_f": obs.mean_fidelity, "f_sem": obs.fidelity_sem,
                "mean_e": obs.mean_energy, "e_sem": obs.energy_sem,
                "var_e": obs.var_energy, "cv_beta": obs.cv_beta,
                "acceptance": obs.acceptance, "n_samples": obs.n_samples,
                "n_blocks": obs.n_blocks,
                "flags": ";".join(obs.flags).replace(",", " "),
            })
    files = [output.write_csv(
        out_dir / "thermal.csv",
        ["scenario", "j2", "beta", "mean_f", "f_sem", "mean_e", "e_sem",
         "var_e", "cv_beta", "acceptance", "n_samples", "n_blocks", "flags"],
        rows, _snapshot(cfg, "fig1c"))]
    return rows, files


def scenario_fig1d(cfg: Config, out_dir: Path):
    """Critical shot number versus learning rate (plus versus N_p inset)."""
    eta_grid = cfg["sweep"]["eta_grid"] or (0.06, 0.1, 0.16, 0.24)
    ns_grid = cfg["sweep"]["ns_grid"] or (1, 2, 3, 4, 5, 6, 8, 10, 13, 16, 20, 26, 34)
    depth_grid = cfg["sweep"]["depth_grid"] or (4, 6, 8, 10)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    j2 = cfg["hamiltonian"]["j2"]
    points = [{"ns": ns, "eta": eta, "j2": j2, "method": "sgd", "symmetry": "none"}
              for eta in eta_grid for ns in ns_grid]
    points += [{"ns": ns, "depth": d, "j2": j2, "method": "sgd", "symmetry": "none"}
               for d in depth_grid for ns in ns_grid]
    rows, files = _sweep(cfg, "fig1d", out_dir, points)
    eta_default = cfg["optimizer"]["eta"]
    depth_default = cfg["circuit"]["depth"]
    eta_rows = [r for r in rows if r["depth"] == depth_default]
    np_rows = [r for r in rows if r["eta"] == eta_default]
    t_eta = _transition_rows(eta_rows, ("eta",))
    t_np = _transition_rows(np_rows, ("depth", "n_params"))
    fit_rows = []
    try:
        xs = np.array([t["eta"] for t in t_eta if t["ns_c"] != ""], float)
        ys = np.array([t["ns_c"] for t in t_eta if t["ns_c"] != ""], float)
        coef = np.polyfit(xs, ys, 1)
        pred = np.polyval(coef, xs)
        ss_res = float(np.sum((ys - pred) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        fit_rows.append({"fit": "ns_c_vs_eta", "slope": coef[0], "intercept": coef[1],
                         "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")})
    except (TypeError, np.linalg.LinAlgError):
        pass
    try:
        xs = np.array([t["n_params"] for t in t_np if t["ns_c"] != ""], float)
        ys = np.array([t["ns_c"] for t in t_np if t["ns_c"] != ""], float)
        coef = np.polyfit(xs, ys, 1)
        pred = np.polyval(coef, xs)
        ss_res = float(np.sum((ys - pred) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        fit_rows.append({"fit": "ns_c_vs_np", "slope": coef[0], "intercept": coef[1],
                         "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")})
    except (TypeError, np.linalg.LinAlgError):
        pass
    files.append(output.write_csv(
        out_dir / "nsc_eta.csv",
        ["eta", "ns_c", "ns_var_peak", "ns_departure", "consistent", "epsilon_c", "flags"],
        t_eta, _snapshot(cfg, "fig1d")))
    files.append(output.write_csv(
        out_dir / "nsc_np.csv",
        ["depth", "n_params", "ns_c", "ns_var_peak", "ns_departure", "consistent",
         "epsilon_c", "flags"],
        t_np, _snapshot(cfg, "fig1d")))
    files.append(output.write_csv(
        out_dir / "fits.csv", ["fit", "slope", "intercept", "r2"],
        fit_rows, _snapshot(cfg, "fig1d")))
    return rows, files


def scenario_fig1ef(cfg: Config, out_dir: Path):
    """Fidelity against the fluctuation measure across lattice lengths."""
    l_grid = cfg["sweep"]["l_grid"] or (2, 3)
    ns_grid = cfg["sweep"]["ns_grid"] or (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48)
    for length in l_grid:
        _guard(cfg.lattice_spec(l1=length), cfg)
    j2 = cfg["hamiltonian"]["j2"]
    points = [{"ns": ns, "l1": length, "j2": j2, "method": "sgd", "symmetry": "none"}
              for length in l_grid for ns in ns_grid]
    rows, files = _sweep(cfg, "fig1ef", out_dir, points)
    by_length: dict[int, list] = {}
    for r in rows:
        rec_like = SimpleNamespace(
            var_f=r["var_f"], n_params=r["n_params"], fbar=r["fbar"],
            fbar_sem=r["fbar_sem"], var_energy=r["var_e"],
            n_sgd=r["n_sgd"], n_sgd_sem=r["n_sgd_sem"])
        by_length.setdefault(r["l1"], []).append((r["ns"], r["eta"], rec_like))
    scan = analysis.epsilon_scan_table(by_length)
    erows = [vars(s) for s in scan]
    files.append(output.write_csv(
        out_dir / "fig1e.csv",
        ["length", "n_params", "n_shots", "eta", "var_f", "t_eff", "epsilon",
         "fbar", "fbar_sem", "var_e", "n_sgd", "n_sgd_sem"],
        erows, _snapshot(cfg, "fig1ef")))
    crit_rows = []
    try:
        crit = analysis.critical_epsilon(scan)
        for length, info in crit.items():
            crit_rows.append({
                "length": length, "epsilon_c": info["epsilon_c"],
                "inv_epsilon_c": 1.0 / info["epsilon_c"] if info["epsilon_c"] else "",
                "ns_c": info["ns_c"], "n_sgd_at_c": info["n_sgd_at_c"],
                "n_tot": info["n_tot"],
            })
    except analysis.AnalysisError:
        pass
    files.append(output.write_csv(
        out_dir / "fig1f.csv",
        ["length", "epsilon_c", "inv_epsilon_c", "ns_c", "n_sgd_at_c", "n_tot"],
        crit_rows, _snapshot(cfg, "fig1ef")))
    return rows, files


def scenario_fig2a(cfg: Config, out_dir: Path):
    """Infidelity against the shot budget for several circuit depths (SR)."""
    ns_grid = cfg["sweep"]["ns_grid"] or (24, 48, 96, 192, 384)
    depth_grid = cfg["sweep"]["depth_grid"] or (4, 8)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    j2 = cfg["hamiltonian"]["j2"]
    sym = cfg["circuit"]["symmetry"]
    if sym == "none":
        sym = "translations"
    points = [{"ns": ns, "depth": d, "j2": j2, "method": "sr", "symmetry": sym}
              for d in depth_grid for ns in ns_grid]
    rows, files = _sweep(cfg, "fig2a", out_dir, points)
    fit_rows = []
    for d in depth_grid:
        sub = sorted((r for r in rows if r["depth"] == d), key=lambda r: r["ns"])
        ns = [r["ns"] for r in sub]
        inf = [r["infidelity"] for r in sub]
        for free in (False, True):
            try:
                fit = analysis.fit_infidelity(ns, inf, free_alpha=free)
                fit_rows.append({
                    "depth": d, "free_alpha": free, "A": fit.slope,
                    "A_err": fit.slope_err, "I0": fit.offset,
                    "I0_err": fit.offset_err, "alpha": fit.alpha,
                    "alpha_err": fit.alpha_err, "residual": fit.residual,
                })
            except analysis.AnalysisError:
                pass
    files.append(output.write_csv(
        out_dir / "fits.csv",
        ["depth", "free_alpha", "A", "A_err", "I0", "I0_err", "alpha",
         "alpha_err", "residual"],
        fit_rows, _snapshot(cfg, "fig2a")))
    return rows, files


def scenario_fig2b(cfg: Config, out_dir: Path):
    """Infidelity against the learning rate at fixed shot budget (SR)."""
    eta_grid = cfg["sweep"]["eta_grid"] or (0.02, 0.04, 0.08, 0.16)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    j2 = cfg["hamiltonian"]["j2"]
    sym = cfg["circuit"]["symmetry"]
    if sym == "none":
        sym = "translations"
    points = [{"eta": eta, "j2": j2, "method": "sr", "symmetry": sym}
              for eta in eta_grid]
    rows, files = _sweep(cfg, "fig2b", out_dir, points)
    xs = np.array([r["eta"] for r in rows])
    ys = np.array([r["infidelity"] for r in rows])
    coef, *_ = np.linalg.lstsq(np.column_stack([xs, np.ones_like(xs)]), ys, rcond=None)
    files.append(output.write_csv(
        out_dir / "fits.csv", ["fit", "slope", "intercept"],
        [{"fit": "infidelity_vs_eta", "slope": float(coef[0]),
          "intercept": float(coef[1])}],
        _snapshot(cfg, "fig2b")))
    return rows, files


# Sector-resolved systems with distinct gaps at 8 qubits; the two
# (Hamiltonian, sector) pairs probe the smaller-gap-larger-slope ordering.
GAP_SYSTEMS = (
    # (label, geometry, l1, l2, boundary1, boundary2, j2, symmetry)
    ("sq2x4-j00-tr", "square", 2, 4, "periodic", "periodic", 0.0, "translations"),
    ("sq2x4-j00-pg", "square", 2, 4, "periodic", "periodic", 0.0, "point_group"),
    ("tri2x4-j10-tr", "triangular", 2, 4, "periodic", "periodic", 1.0, "translations"),
    ("tri2x4-j10-pg", "triangular", 2, 4, "periodic", "periodic", 1.0, "point_group"),
    ("sq2x4-j05-tr", "square", 2, 4, "periodic", "periodic", 0.5, "translations"),
    ("sq2x4-j065-tr", "square", 2, 4, "periodic", "periodic", 0.65, "translations"),
)


def scenario_fig3a(cfg: Config, out_dir: Path):
    """Infidelity slope against the sector gap across systems and sectors."""
    ns_grid = cfg["sweep"]["ns_grid"] or (48, 96, 192, 384, 768)
    mode = cfg["shots"]["mode"]
    rows_all = []
    gap_rows = []
    files = []
    for idx, (label, geom, l1, l2, b1, b2, j2, sym) in enumerate(GAP_SYSTEMS):
        spec = LatticeSpec(geom, (l1, l2), (b1, b2))
        _guard(spec, cfg)
        ham = HamiltonianSpec(build_lattice(spec), j1=cfg["hamiltonian"]["j1"], j2=j2)
        projector = ansatz.SymmetryProjector(symmetry_group(spec, sym))
        gap = spectrum.sector_gap(ham, projector, sz_zero=spec.n_sites >= 10)
        points = [{"ns": ns, "l1": l1, "l2": l2, "j2": j2, "method": "sr",
                   "symmetry": sym, "mode": mode,
                   "seed": _seed_for(cfg["run"]["seed"], 1000 * idx + i)}
                  for i, ns in enumerate(ns_grid)]
        sub_cfg = parse_config(
            f"[lattice]\ngeometry = {geom}\nboundary1 = {b1}\nboundary2 = {b2}\n",
            base=cfg)
        rows, _ = _sweep(sub_cfg, "fig3a", out_dir / label, points)
        rows_all.extend(rows)
        fit = analysis.fit_infidelity([r["ns"] for r in rows],
                                      [r["infidelity"] for r in rows])
        gap_rows.append({
            "label": label, "geometry": geom, "l1": l1, "l2": l2, "j2": j2,
            "symmetry": sym, "gap": gap, "A": fit.slope, "A_err": fit.slope_err,
            "I0": fit.offset,
        })
    usable = [g for g in gap_rows if g["A"] > 0]
    fit_rows = []
    if len(usable) >= 3:
        gf = analysis.fit_gap_scaling([g["gap"] for g in usable],
                                      [g["A"] for g in usable])
        fit_rows.append({"fit": "log_A_vs_log_gap", "exponent": gf.alpha,
                         "exponent_err": gf.alpha_err, "log_a0": gf.offset,
                         "n_points": gf.n_points})
    files.append(output.write_csv(
        out_dir / "gaps.csv",
        ["label", "geometry", "l1", "l2", "j2", "symmetry", "gap", "A",
         "A_err", "I0"],
        gap_rows, _snapshot(cfg, "fig3a")))
    files.append(output.write_csv(
        out_dir / "fits.csv",
        ["fit", "exponent", "exponent_err", "log_a0", "n_points"],
        fit_rows, _snapshot(cfg, "fig3a")))
    return gap_rows, files


def scenario_fig3bc(cfg: Config, out_dir: Path):
    """Sector gap and infidelity slope against j2/j1 for two projectors."""
    j2_grid = cfg["sweep"]["j2_grid"] or (0.0, 0.2, 0.4, 0.6)
    ns_grid = cfg["sweep"]["ns_grid"] or (32, 64, 128, 256)
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    rows = []
    for si, sym in enumerate(("point_group", "translations")):
        projector = ansatz.SymmetryProjector(symmetry_group(spec, sym))
        for ji, j2 in enumerate(j2_grid):
            ham = cfg.hamiltonian(spec, j2=j2)
            gap = spectrum.sector_gap(ham, projector, sz_zero=spec.n_sites >= 10)
            points = [{"ns": ns, "j2": j2, "method": "sr", "symmetry": sym,
                       "seed": _seed_for(cfg["run"]["seed"], 7000 * si + 100 * ji + i)}
                      for i, ns in enumerate(ns_grid)]
            sub, _ = _sweep(cfg, "fig3bc", out_dir / f"{sym}-j{j2}", points)
            fit = analysis.fit_infidelity([r["ns"] for r in sub],
                                          [r["infidelity"] for r in sub])
            rows.append({
                "symmetry": sym, "j2": j2, "gap": gap,
                "inv_gap_sq": (cfg["hamiltonian"]["j1"] / gap) ** 2,
                "A": fit.slope, "A_err": fit.slope_err, "I0": fit.offset,
            })
    files = [output.write_csv(
        out_dir / "fig3bc.csv",
        ["symmetry", "j2", "gap", "inv_gap_sq", "A", "A_err", "I0"],
        rows, _snapshot(cfg, "fig3bc"))]
    return rows, files


def scenario_appc(cfg: Config, out_dir: Path):
    """Depth dependence of the fitted exponent and residual offset (SR)."""
    depth_grid = cfg["sweep"]["depth_grid"] or (2, 4, 6, 8)
    cfg2 = parse_config("[sweep]\ndepth_grid = " +
                        ",".join(str(d) for d in depth_grid) + "\n", base=cfg)
    rows, files = scenario_fig2a(cfg2, out_dir)
    return rows, files


def scenario_appd(cfg: Config, out_dir: Path):
    """Random-angle gradient-norm scan: N_p sweep and length sweep."""
    depth_grid = cfg["sweep"]["depth_grid"] or (1, 2, 4, 8, 12, 16)
    l_grid = cfg["sweep"]["l_grid"] or (2, 3, 4)
    trials = 100
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    ham = cfg.hamiltonian(spec)
    np_rows = []
    for i, d in enumerate(depth_grid):
        circ = cfg.circuit(spec, depth=d)
        pt = analysis.barren_scan(ham, circ, trials=trials,
                                  seed=_seed_for(cfg["run"]["seed"], i),
                                  label=f"depth{d}")
        np_rows.append({"depth": d, "n_params": pt.n_params, "n_sites": pt.n_sites,
                        "norm_mean": pt.norm_mean, "norm_sem": pt.norm_sem})
    l_rows = []
    for i, length in enumerate(l_grid):
        lspec = cfg.lattice_spec(l1=length)
        _guard(lspec, cfg)
        lham = cfg.hamiltonian(lspec)
        circ = cfg.circuit(lspec)
        pt = analysis.barren_scan(lham, circ, trials=trials,
                                  seed=_seed_for(cfg["run"]["seed"], 100 + i),
                                  label=f"L{length}")
        l_rows.append({"length": length, "n_params": pt.n_params,
                       "n_sites": pt.n_sites, "norm_mean": pt.norm_mean,
                       "norm_sem": pt.norm_sem})
    cmp_rows = []
    if len(l_rows) >= 3:
        cmp = analysis.compare_decay_models([r["length"] for r in l_rows],
                                            [r["norm_mean"] for r in l_rows])
        cmp_rows.append({"comparison": "decay_vs_length", **cmp})
    files = [
        output.write_csv(out_dir / "barren_np.csv",
                         ["depth", "n_params", "n_sites", "norm_mean", "norm_sem"],
                         np_rows, _snapshot(cfg, "appD")),
        output.write_csv(out_dir / "barren_l.csv",
                         ["length", "n_params", "n_sites", "norm_mean", "norm_sem"],
                         l_rows, _snapshot(cfg, "appD")),
        output.write_csv(out_dir / "barren_aic.csv",
                         ["comparison", "aic_exponential", "aic_power_law",
                          "prefer_power_law"],
                         cmp_rows, _snapshot(cfg, "appD")),
    ]
    return np_rows + l_rows, files


def low_singlet_states(ham: HamiltonianSpec, count: int):
    """Lowest `count` eigenstates with <S^2> ~ 0, via the half-filling block."""
    from math import comb

    n = ham.n_sites
    cap = comb(n, n // 2) - 2
    ask = count + count // 2
    singlet = None
    for _ in range(4):
        data = spectrum.lowest_k(ham, min(ask, cap), sz_zero=True)
        singlet = data.eigenstates[data.spin_sq < 1e-6]
        if len(singlet) >= count or ask >= cap:
            return singlet[:count], data
        ask = int(ask * 1.7)
    return singlet, data


def scenario_appe(cfg: Config, out_dir: Path):
    """Shot budgets straddling the transition, with eigenstate-overlap
    histograms against the low-lying spin-singlet spectrum (opt-in scale)."""
    ns_grid = cfg["sweep"]["ns_grid"] or (6, 8)
    n_hist = 100
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    ham = cfg.hamiltonian(spec)
    states, data = low_singlet_states(ham, n_hist)
    ground = data.ground_manifold(ham.j1)
    circuit = cfg.circuit(spec)
    projector = ansatz.SymmetryProjector.identity(spec.n_sites)
    rows, hist_rows = [], []
    for i, ns in enumerate(ns_grid):
        ocfg = cfg.optimizer_config(seed=_seed_for(cfg["run"]["seed"], i), ns=ns,
                                    method="sgd")
        rec = optimize.run(ham, circuit, projector, ocfg, ground)
        overlap_rows = [
            ansatz.overlaps(circuit, t.final_theta, projector, states)
            for t in rec.traces
        ]
        stats = analysis.overlap_histogram(overlap_rows, n_requested=n_hist * len(rec.traces))
        rows.append({
            "scenario": "appE", "ns": ns, "fbar": rec.fbar,
            "fbar_sem": rec.fbar_sem, "var_e": rec.var_energy,
            "overlap_mean": stats.mean, "overlap_sigma": stats.sigma,
            "n_overlaps": stats.n_states, "n_singlet_states": len(states),
            "seed": ocfg.seed,
            "flags": ";".join(rec.flags + stats.flags).replace(",", " "),
        })
        for lo, hi, count in zip(stats.edges[:-1], stats.edges[1:], stats.counts):
            hist_rows.append({"ns": ns, "bin_lo": float(lo), "bin_hi": float(hi),
                              "count": int(count)})
    files = [
        output.write_csv(out_dir / "appe_summary.csv",
                         ["scenario", "ns", "fbar", "fbar_sem", "var_e",
                          "overlap_mean", "overlap_sigma", "n_overlaps",
                          "n_singlet_states", "seed", "flags"],
                         rows, _snapshot(cfg, "appE")),
        output.write_csv(out_dir / "appe_histogram.csv",
                         ["ns", "bin_lo", "bin_hi", "count"],
                         hist_rows, _snapshot(cfg, "appE")),
    ]
    return rows, files


def scenario_ed(cfg: Config, out_dir: Path):
    """Eigenvalue/gap dump, optionally caching eigenvectors."""
    spec = cfg.lattice_spec()
    _guard(spec, cfg)
    ham = cfg.hamiltonian(spec)
    k = max(4, 2)
    rows = []
    data = spectrum.lowest_k(ham, k, sz_zero=spec.n_sites >= 10)
    for i, (e, s2, res) in enumerate(zip(data.eigenvalues, data.spin_sq,
                                         data.residuals)):
        rows.append({"index": i, "energy": float(e), "spin_sq": float(s2),
                     "residual": float(res)})
    gap = data.gap(ham.j1)
    files = [
        output.write_csv(out_dir / "spectrum.csv",
                         ["index", "energy", "spin_sq", "residual"],
                         rows, _snapshot(cfg, "ed")),
        output.write_csv(out_dir / "gaps.csv", ["sector", "gap"],
                         [{"sector": "unrestricted", "gap": gap}],
                         _snapshot(cfg, "ed")),
        output.eigenvector_cache_write(out_dir / "eigenvectors.bin",
                                       spec.n_sites, data.eigenstates),
    ]
    return rows, files


def scenario_lattice(cfg: Config, out_dir: Path):
    """Debug dump of bonds, checkerboard layers, and the symmetry group."""
    spec = cfg.lattice_spec()
    bonds = build_lattice(spec)
    decomp = checkerboard_layers(spec)
    bond_rows = [{"kind": "j1", "a": a, "b": b} for a, b in bonds.j1_bonds]
    bond_rows += [{"kind": "j2", "a": a, "b": b} for a, b in bonds.j2_bonds]
    layer_rows = [{"layer": li, "a": a, "b": b}
                  for li, layer in enumerate(decomp.layers) for a, b in layer]
    sym = cfg["circuit"]["symmetry"]
    group_rows = []
    if sym != "none":
        g = symmetry_group(spec, sym, cfg["circuit"]["irrep"])
        for i, (el, chi) in enumerate(zip(g.elements, g.characters)):
            group_rows.append({"element": i, "character_re": chi.real,
                               "character_im": chi.imag,
                               "permutation": " ".join(map(str, el))})
    files = [
        output.write_csv(out_dir / "bonds.csv", ["kind", "a", "b"], bond_rows,
                         _snapshot(cfg, "lattice")),
        output.write_csv(out_dir / "layers.csv", ["layer", "a", "b"], layer_rows,
                         _snapshot(cfg, "lattice")),
        output.write_csv(out_dir / "group.csv",
                         ["element", "character_re", "character_im", "permutation"],
                         group_rows, _snapshot(cfg, "lattice")),
    ]
    return bond_rows, files


SCENARIO_DEFAULTS: dict[str, str] = {
    "fig1a": """
[optimizer]
max_steps = 2600
window = 200
tail = 600
restarts = 6
eta = 0.1
""",
    "fig1b": """
[optimizer]
max_steps = 2600
window = 200
tail = 600
restarts = 6
eta = 0.1
""",
    "fig1c": """
[circuit]
depth = 4
[thermal]
chain_length = 16000
burn_in_fraction = 0.25
thinning = 5
""",
    "fig1d": """
[optimizer]
max_steps = 2200
window = 200
tail = 500
restarts = 4
""",
    "fig1ef": """
[optimizer]
max_steps = 2600
window = 200
tail = 600
restarts = 4
""",
    "fig2a": """
[lattice]
l1 = 3
l2 = 4
boundary1 = periodic
boundary2 = periodic
[optimizer]
method = sr
eta = 0.15
max_steps = 3000
window = 150
tail = 500
stab_tol = 0.003
restarts = 3
sr_beta = 0.1
[shots]
mode = gaussian_surrogate
[circuit]
symmetry = translations
""",
    "fig2b": """
[lattice]
l1 = 3
l2 = 4
boundary1 = periodic
boundary2 = periodic
[optimizer]
method = sr
eta = 0.15
max_steps = 3000
window = 150
tail = 500
stab_tol = 0.003
restarts = 3
sr_beta = 0.1
[shots]
mode = gaussian_surrogate
ns = 256
[circuit]
symmetry = translations
""",
    "fig3a": """
[optimizer]
method = sr
eta = 0.15
max_steps = 2600
window = 150
tail = 450
stab_tol = 0.003
restarts = 3
sr_beta = 0.1
[shots]
mode = gaussian_surrogate
""",
    "fig3bc": """
[lattice]
l1 = 2
l2 = 4
boundary1 = periodic
boundary2 = periodic
[optimizer]
method = sr
eta = 0.15
max_steps = 2600
window = 150
tail = 450
stab_tol = 0.003
restarts = 3
sr_beta = 0.1
[shots]
mode = gaussian_surrogate
""",
    "appC": """
[lattice]
l1 = 3
l2 = 4
boundary1 = periodic
boundary2 = periodic
[optimizer]
method = sr
eta = 0.15
max_steps = 3000
window = 150
tail = 500
stab_tol = 0.003
restarts = 3
sr_beta = 0.1
[shots]
mode = gaussian_surrogate
[circuit]
symmetry = translations
""",
    "appD": """
[lattice]
l1 = 4
l2 = 4
boundary1 = periodic
boundary2 = periodic
""",
    "appE": """
[lattice]
l1 = 4
l2 = 4
boundary1 = periodic
boundary2 = periodic
[optimizer]
max_steps = 3500
window = 300
tail = 1000
restarts = 3
[run]
max_qubits = 16
""",
    "appF": """
[optimizer]
max_steps = 2600
window = 200
tail = 600
restarts = 4
""",
    "ed": "",
    "lattice": "",
}

SCENARIOS = {
    "fig1a": scenario_fig1a,
    "fig1b": scenario_fig1a,   # same sweep; the variance panel reads the same CSV
    "fig1c": scenario_fig1c,
    "fig1d": scenario_fig1d,
    "fig1ef": scenario_fig1ef,
    "fig1e": scenario_fig1ef,
    "fig1f": scenario_fig1ef,
    "fig2a": scenario_fig2a,
    "fig2b": scenario_fig2b,
    "fig3a": scenario_fig3a,
    "fig3bc": scenario_fig3bc,
    "appC": scenario_appc,
    "appD": scenario_appd,
    "appE": scenario_appe,
    "appF": scenario_fig1ef,
    "ed": scenario_ed,
    "lattice": scenario_lattice,
}


def scenario_config(name: str, user_text: str = "",
                    overrides: list[tuple[str, str, str]] | None = None) -> Config:
    """Layer scenario defaults, then user config text, then CLI overrides."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    cfg = default_config()
    overlay = SCENARIO_DEFAULTS.get(name, "")
    if overlay:
        cfg = parse_config(overlay, base=cfg)
    if user_text:
        cfg = parse_config(user_text, base=cfg)
    for section, key, raw in overrides or ():
        cfg = cfg.replace(section, key, raw)
    return cfg


def run_scenario(name: str, cfg: Config, out_root) -> tuple[list[dict], list]:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    out_dir = Path(out_root) / name
    return SCENARIOS[name](cfg, out_dir)
