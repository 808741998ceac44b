"""Derived quantities and fits over persisted run results.

Covers the effective-temperature bookkeeping T = Var f * eta / N_s and the
fluctuation measure eps = N_p T / 2, shot-budget transition detection from
the energy-variance peak, the infidelity law  I = A / N_s^alpha + I0  (alpha
frozen to 1 unless freed), gap-scaling regression, the random-angle gradient
scan, and overlap histograms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import ansatz
from .ansatz import Circuit, SymmetryProjector
from .spectrum import HamiltonianSpec


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class FluctuationRecord:
    t_eff: float
    epsilon: float
    var_f: float
    eta: float
    n_shots: float
    n_params: int


def effective_temperature(var_f: float, eta: float, n_shots: float,
                          n_params: int = 1) -> FluctuationRecord:
    """T = var_f * eta / n_shots and the fluctuation measure eps = N_p T / 2."""
    if var_f < 0 or eta <= 0 or n_shots <= 0:
        raise AnalysisError("var_f must be >= 0 and eta, n_shots positive")
    t_eff = var_f * eta / n_shots
    return FluctuationRecord(
        t_eff=t_eff,
        epsilon=0.5 * n_params * t_eff,
        var_f=var_f,
        eta=eta,
        n_shots=n_shots,
        n_params=n_params,
    )


@dataclass
class TransitionResult:
    ns_critical: float
    ns_var_peak: float
    ns_fidelity_departure: float
    peak_index: int
    departure_index: int
    consistent: bool
    flags: list[str] = field(default_factory=list)


def detect_transition(ns_grid, fbar, var_e, fidelity_floor: float = 0.01,
                      departure_factor: float = 3.0) -> TransitionResult:
    """Locate the shot-budget transition from the energy-variance peak.

    The peak of Var E over the grid marks the transition; as a cross-check,
    the departure point is the first grid value whose fidelity exceeds
    max(fidelity_floor, departure_factor * smallest-grid fidelity).  The two
    are flagged as inconsistent when more than one grid step apart.
    """
    ns = np.asarray(ns_grid, dtype=float)
    f = np.asarray(fbar, dtype=float)
    v = np.asarray(var_e, dtype=float)
    if len(ns) < 4:
        raise AnalysisError("need at least 4 grid points to bracket a transition")
    order = np.argsort(ns)
    ns, f, v = ns[order], f[order], v[order]
    peak = int(np.argmax(v))
    if peak == 0 or peak == len(ns) - 1:
        raise AnalysisError("transition not bracketed: Var E has no interior maximum")
    threshold = max(fidelity_floor, departure_factor * f[0])
    above = np.nonzero(f > threshold)[0]
    if len(above) == 0:
        raise AnalysisError("transition not bracketed: fidelity never departs")
    departure = int(above[0])
    flags = []
    consistent = abs(departure - peak) <= 1
    if not consistent:
        flags.append(
            f"Var E peak at grid index {peak} vs fidelity departure at {departure}"
        )
    return TransitionResult(
        ns_critical=float(ns[peak]),
        ns_var_peak=float(ns[peak]),
        ns_fidelity_departure=float(ns[departure]),
        peak_index=peak,
        departure_index=departure,
        consistent=consistent,
        flags=flags,
    )


@dataclass
class FitResult:
    slope: float          # A
    offset: float         # I0 (or log A0 for the gap fit)
    alpha: float
    slope_err: float
    offset_err: float
    alpha_err: float
    residual: float
    n_points: int
    model: str


def _linear_subfit(x: np.ndarray, y: np.ndarray):
    design = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sum((design @ coef - y) ** 2))
    return coef, residual, design


def fit_infidelity(x, infidelity, free_alpha: bool = False,
                   axis: str = "shots") -> FitResult:
    """Least squares of I = A / x^alpha + I0 (axis="shots") or I = A x + I0.

    With free_alpha the exponent is profiled: for each alpha the (A, I0)
    sub-problem is solved linearly, and the scalar residual is minimized.
    Uncertainties come from the Jacobian at the optimum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(infidelity, dtype=float)
    if len(x) < 3:
        raise AnalysisError("need at least 3 points to fit the infidelity law")
    if np.any(x <= 0):
        raise AnalysisError("fit abscissae must be positive")
    if axis == "fluctuation":
        coef, residual, design = _linear_subfit(x, y)
        dof = max(1, len(x) - 2)
        sigma2 = residual / dof
        cov = sigma2 * np.linalg.inv(design.T @ design)
        return FitResult(coef[0], coef[1], 1.0, np.sqrt(cov[0, 0]),
                         np.sqrt(cov[1, 1]), 0.0, residual, len(x), "A*eps + I0")
    if axis != "shots":
        raise AnalysisError(f"unknown fit axis {axis!r}")

    def residual_at(alpha):
        _, res, _ = _linear_subfit(x ** (-alpha), y)
        return res

    if free_alpha:
        opt = minimize_scalar(residual_at, bounds=(0.05, 4.0), method="bounded")
        alpha = float(opt.x)
    else:
        alpha = 1.0
    coef, residual, design = _linear_subfit(x ** (-alpha), y)
    a_fit, i0 = float(coef[0]), float(coef[1])
    # Jacobian of the model wrt (A, I0, alpha) at the optimum.
    cols = [x ** (-alpha), np.ones_like(x)]
    if free_alpha:
        cols.append(-a_fit * np.log(x) * x ** (-alpha))
    jac = np.column_stack(cols)
    dof = max(1, len(x) - jac.shape[1])
    sigma2 = residual / dof
    try:
        cov = sigma2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError as exc:
        raise AnalysisError("singular design matrix in infidelity fit") from exc
    alpha_err = float(np.sqrt(cov[2, 2])) if free_alpha else 0.0
    return FitResult(a_fit, i0, alpha, float(np.sqrt(cov[0, 0])),
                     float(np.sqrt(cov[1, 1])), alpha_err, residual, len(x),
                     "A/x^alpha + I0")


def fit_gap_scaling(gaps, amplitudes) -> FitResult:
    """Log-log regression of the infidelity slope A against the gap Delta."""
    d = np.asarray(gaps, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if len(d) < 3:
        raise AnalysisError("need at least 3 systems for the gap-scaling fit")
    if np.any(d <= 0) or np.any(a <= 0):
        raise AnalysisError("gap-scaling fit needs positive gaps and amplitudes")
    coef, residual, design = _linear_subfit(np.log(d), np.log(a))
    dof = max(1, len(d) - 2)
    sigma2 = residual / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return FitResult(float(coef[0]), float(coef[1]), float(coef[0]),
                     float(np.sqrt(cov[0, 0])), float(np.sqrt(cov[1, 1])),
                     float(np.sqrt(cov[0, 0])), residual, len(d),
                     "log A = alpha log Delta + log A0")


@dataclass
class BarrenPoint:
    label: str
    n_params: int
    n_sites: int
    norm_mean: float
    norm_sem: float


def barren_scan(h: HamiltonianSpec, circuit: Circuit, trials: int = 100,
                angle_width: float = 0.1, seed: int = 0,
                label: str = "") -> BarrenPoint:
    """Mean normalized gradient norm over random small-angle draws.

    Angles are uniform on [0, angle_width] from the fully dimerized start;
    the norm is scaled by j1 * N_p * N_q.
    """
    if trials < 1:
        raise AnalysisError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    projector = SymmetryProjector.identity(circuit.n_sites)
    norms = []
    for _ in range(trials):
        theta = rng.uniform(0.0, angle_width, circuit.n_params)
        est = ansatz.exact_gradient(h, circuit, theta, projector)
        norms.append(np.linalg.norm(est.forces))
    norms = np.asarray(norms) / (abs(h.j1) * circuit.n_params * circuit.n_sites)
    sem = float(norms.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return BarrenPoint(label, circuit.n_params, circuit.n_sites,
                       float(norms.mean()), sem)


def compare_decay_models(sizes, means) -> dict:
    """AIC comparison of exponential vs power-law decay of positive data."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(means, dtype=float)
    if np.any(y <= 0):
        raise AnalysisError("decay comparison needs positive means")
    logy = np.log(y)
    n = len(x)

    def aic(design):
        coef, res, *_ = np.linalg.lstsq(design, logy, rcond=None)
        rss = float(np.sum((design @ coef - logy) ** 2))
        return n * np.log(max(rss, 1e-300) / n) + 2 * design.shape[1]

    aic_exp = aic(np.column_stack([x, np.ones(n)]))
    aic_pow = aic(np.column_stack([np.log(x), np.ones(n)]))
    return {
        "aic_exponential": aic_exp,
        "aic_power_law": aic_pow,
        "prefer_power_law": aic_pow < aic_exp,
    }


@dataclass
class HistogramStats:
    mean: float
    sigma: float
    counts: np.ndarray
    edges: np.ndarray
    n_states: int
    flags: list[str] = field(default_factory=list)


def overlap_histogram(overlap_rows, n_requested: int | None = None,
                      bins: int = 40) -> HistogramStats:
    """Pooled statistics of eigenstate overlaps O_k across sampled states."""
    pooled = np.concatenate([np.asarray(row, dtype=float).ravel()
                             for row in overlap_rows])
    flags = []
    if n_requested is not None and len(pooled) < n_requested:
        flags.append(f"only {len(pooled)} overlaps available of {n_requested} requested")
    counts, edges = np.histogram(pooled, bins=bins)
    return HistogramStats(float(pooled.mean()), float(pooled.std()),
                          counts, edges, len(pooled), flags)


@dataclass
class EpsilonScanRow:
    length: int
    n_params: int
    n_shots: float
    eta: float
    var_f: float
    t_eff: float
    epsilon: float
    fbar: float
    fbar_sem: float
    var_e: float
    n_sgd: float
    n_sgd_sem: float


def epsilon_scan_table(records_by_length: dict) -> list[EpsilonScanRow]:
    """Fidelity-vs-fluctuation rows from per-length, per-shot run records.

    records_by_length maps L -> list of (n_shots, eta, RunRecord); Var f is
    the tail-averaged single-shot force variance measured along the run.
    """
    rows = []
    for length, entries in sorted(records_by_length.items()):
        for n_shots, eta, rec in entries:
            fl = effective_temperature(rec.var_f, eta, n_shots, rec.n_params)
            rows.append(EpsilonScanRow(
                length=length,
                n_params=rec.n_params,
                n_shots=n_shots,
                eta=eta,
                var_f=rec.var_f,
                t_eff=fl.t_eff,
                epsilon=fl.epsilon,
                fbar=rec.fbar,
                fbar_sem=rec.fbar_sem,
                var_e=rec.var_energy,
                n_sgd=rec.n_sgd,
                n_sgd_sem=rec.n_sgd_sem,
            ))
    return rows


def critical_epsilon(rows: list[EpsilonScanRow]) -> dict:
    """Per-length eps_c from the Var E peak, plus the total-sample identity
    N_tot = N_SGD(N_s^c) * N_s^c."""
    out = {}
    for length in sorted({r.length for r in rows}):
        sub = sorted((r for r in rows if r.length == length), key=lambda r: r.n_shots)
        ns = [r.n_shots for r in sub]
        f = [r.fbar for r in sub]
        v = [r.var_e for r in sub]
        tr = detect_transition(ns, f, v)
        at_peak = sub[tr.peak_index]
        out[length] = {
            "epsilon_c": at_peak.epsilon,
            "ns_c": tr.ns_critical,
            "n_sgd_at_c": at_peak.n_sgd,
            "n_tot": at_peak.n_sgd * tr.ns_critical,
            "transition": tr,
        }
    return out
