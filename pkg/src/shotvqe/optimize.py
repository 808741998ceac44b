"""SGD and stochastic-reconfiguration loops with the convergence protocol.

A run starts from small random angles and iterates until the sliding mean of
the exact fidelity stabilizes (successive window means closer than a set
tolerance), then keeps going for a fixed tail whose averages define the run's
fidelity and energy-variance figures.  Restarts give error bars; all
randomness flows from one seed through numpy SeedSequence spawning, so a run
is bitwise reproducible.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import ansatz, shots
from .ansatz import AnsatzError, Circuit, SymmetryProjector
from .shots import ShotConfig, ShotsError
from .spectrum import HamiltonianSpec


class OptimizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "sgd"  # "sgd" | "sr"
    eta: float = 0.1
    max_steps: int = 4000
    shot_config: ShotConfig = field(default_factory=ShotConfig)
    sr_beta: float = 0.01
    restarts: int = 10
    window: int = 300
    stab_tol: float = 0.005
    tail: int = 1000
    init_scale: float = 0.1
    seed: int = 0
    fidelity_mode: str = "auto"  # "raw" | "projected" | "auto"

    def __post_init__(self):
        if self.method not in ("sgd", "sr"):
            raise OptimizeError(f"unknown method {self.method!r}")
        if self.eta <= 0:
            raise OptimizeError("learning rate eta must be positive")
        if self.window < 1:
            raise OptimizeError("window must be >= 1")
        if self.fidelity_mode not in ("raw", "projected", "auto"):
            raise OptimizeError(f"unknown fidelity_mode {self.fidelity_mode!r}")

    @property
    def resolved_fidelity_mode(self) -> str:
        if self.fidelity_mode != "auto":
            return self.fidelity_mode
        return "projected" if self.method == "sr" else "raw"


def sgd_step(theta: np.ndarray, grad_est, eta: float) -> np.ndarray:
    forces = np.asarray(grad_est.forces if hasattr(grad_est, "forces") else grad_est)
    if forces.shape != np.shape(theta):
        raise OptimizeError(f"gradient shape {forces.shape} != theta shape {np.shape(theta)}")
    if not np.all(np.isfinite(forces)):
        raise OptimizeError("non-finite gradient")
    return theta - eta * forces


def sr_step(theta: np.ndarray, grad_est, metric_tensor, eta: float, beta: float) -> np.ndarray:
    """Natural-gradient update theta - eta * (|Re G| + beta I)^{-1} f.

    Falls back to a plain SGD step if the regularized solve fails.
    """
    forces = np.asarray(grad_est.forces if hasattr(grad_est, "forces") else grad_est)
    if not np.all(np.isfinite(forces)):
        raise OptimizeError("non-finite gradient")
    reg = metric_tensor.regularized(beta)
    try:
        delta = np.linalg.solve(reg, forces)
        if not np.all(np.isfinite(delta)):
            raise np.linalg.LinAlgError("non-finite solution")
    except np.linalg.LinAlgError:
        return sgd_step(theta, forces, eta)
    return theta - eta * delta


@dataclass
class RestartTrace:
    energy: np.ndarray
    fidelity: np.ndarray
    grad_norm: np.ndarray
    var_f_mean: np.ndarray
    norm: np.ndarray
    tail_start: int
    stabilized: bool
    seed: int
    final_theta: np.ndarray | None = None
    skipped_steps: int = 0

    @property
    def tail_fidelity(self) -> float:
        return float(self.fidelity[self.tail_start:].mean())

    @property
    def tail_energy(self) -> float:
        return float(self.energy[self.tail_start:].mean())

    @property
    def tail_var_energy(self) -> float:
        return float(self.energy[self.tail_start:].var())

    @property
    def tail_var_f(self) -> float:
        return float(self.var_f_mean[self.tail_start:].mean())

    def steps_to_fidelity(self, target: float, window: int) -> int:
        """First step whose trailing `window` mean reaches `target`."""
        f = self.fidelity
        if len(f) == 0:
            return len(f)
        c = np.cumsum(np.insert(f, 0, 0.0))
        n = np.minimum(np.arange(1, len(f) + 1), window)
        start = np.maximum(np.arange(1, len(f) + 1) - window, 0)
        sliding = (c[1:] - c[start]) / n
        hits = np.nonzero(sliding >= target)[0]
        return int(hits[0]) if len(hits) else len(f)


@dataclass
class RunRecord:
    traces: list[RestartTrace]
    fbar: float
    fbar_sem: float
    energy_mean: float
    var_energy: float
    var_f: float
    n_sgd: float
    n_sgd_sem: float
    n_params: int
    seed: int
    wall_time: float
    flags: list[str] = field(default_factory=list)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fbar


def _stabilized(fid: list[float], window: int, tol: float) -> bool:
    if len(fid) < 2 * window:
        return False
    recent = np.mean(fid[-window:])
    previous = np.mean(fid[-2 * window:-window])
    return abs(recent - previous) < tol


def run(h: HamiltonianSpec, circuit: Circuit, projector: SymmetryProjector,
        cfg: OptimizerConfig, ground) -> RunRecord:
    """Full optimization protocol over cfg.restarts independent restarts."""
    t0 = time.perf_counter()
    grounds = np.atleast_2d(np.asarray(ground))
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.restarts)
    traces = []
    flags: list[str] = []
    raw_projector = SymmetryProjector.identity(circuit.n_sites)
    fid_projector = projector if cfg.resolved_fidelity_mode == "projected" else raw_projector

    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        theta = rng.uniform(0.0, cfg.init_scale, circuit.n_params)
        energies, fids, gnorms, varfs, norms = [], [], [], [], []
        stabilized_at = None
        skipped = 0
        surrogate_var = None
        scfg = cfg.shot_config
        for step in range(cfg.max_steps):
            try:
                if scfg.mode == "exact" and cfg.method == "sgd":
                    est = ansatz.exact_gradient(h, circuit, theta, projector)
                    psi, table, derivs = None, None, None
                elif scfg.mode == "gaussian_surrogate" and surrogate_var is not None:
                    derivs = ansatz.derivative_stack(circuit, theta)
                    est = shots.sampled_gradient(
                        h, circuit, theta, projector, scfg, rng,
                        surrogate_var=surrogate_var, derivatives=derivs)
                    psi, table = derivs[0], None
                else:
                    table = shots.measurement_table(h, circuit, theta, projector)
                    est = shots.sampled_gradient(
                        h, circuit, theta, projector, scfg, rng, table=table)
                    if scfg.mode == "gaussian_surrogate":
                        surrogate_var = est.var_single_shot
                    psi = table.psi
                    derivs = (table.psi, table.stack)
                if cfg.method == "sr":
                    if table is not None:
                        mt = shots.sampled_metric(circuit, theta, projector,
                                                  scfg, rng, table=table, h=h)
                    else:
                        mt = ansatz.metric(circuit, theta, projector,
                                           derivatives=derivs)
            except ShotsError:
                skipped += 1
                energies.append(energies[-1] if energies else 0.0)
                fids.append(fids[-1] if fids else 0.0)
                gnorms.append(np.nan)
                varfs.append(np.nan)
                norms.append(np.nan)
                continue

            energies.append(est.energy)
            fids.append(ansatz.fidelity(circuit, theta, fid_projector, grounds, psi=psi))
            gnorms.append(float(np.linalg.norm(est.forces)))
            varfs.append(float(est.var_single_shot.mean()))
            norms.append(est.norm)

            if cfg.method == "sr":
                theta = sr_step(theta, est, mt, cfg.eta, cfg.sr_beta)
            else:
                theta = sgd_step(theta, est, cfg.eta)

            if stabilized_at is None and (step + 1) % cfg.window == 0:
                if _stabilized(fids, cfg.window, cfg.stab_tol):
                    stabilized_at = step + 1
            if stabilized_at is not None and step + 1 >= stabilized_at + cfg.tail:
                break

        converged = stabilized_at is not None
        if not converged:
            # Tail taken from the final window when max_steps ran out.
            stabilized_at = max(0, len(fids) - cfg.tail)
            flags.append(f"restart {r}: not stabilized at max_steps, tail from final window")
        else:
            # Stabilization near max_steps can truncate the tail; fall back
            # to the final window so tail statistics never go empty.
            stabilized_at = min(stabilized_at, max(0, len(fids) - cfg.tail))
        traces.append(RestartTrace(
            energy=np.asarray(energies),
            fidelity=np.asarray(fids),
            grad_norm=np.asarray(gnorms),
            var_f_mean=np.asarray(varfs),
            norm=np.asarray(norms),
            tail_start=stabilized_at,
            stabilized=converged,
            seed=int(child.generate_state(1)[0]),
            final_theta=theta.copy(),
            skipped_steps=skipped,
        ))

    tail_f = np.array([t.tail_fidelity for t in traces])
    tail_e = np.array([t.tail_energy for t in traces])
    tail_ve = np.array([t.tail_var_energy for t in traces])
    tail_vf = np.array([np.nan_to_num(t.tail_var_f) for t in traces])
    n_sgd = np.array([
        t.steps_to_fidelity(0.9 * t.tail_fidelity, cfg.window) for t in traces
    ], dtype=float)
    sem = float(tail_f.std(ddof=1) / np.sqrt(len(traces))) if len(traces) > 1 else 0.0
    nsem = float(n_sgd.std(ddof=1) / np.sqrt(len(n_sgd))) if len(n_sgd) > 1 else 0.0
    return RunRecord(
        traces=traces,
        fbar=float(tail_f.mean()),
        fbar_sem=sem,
        energy_mean=float(tail_e.mean()),
        var_energy=float(tail_ve.mean()),
        var_f=float(tail_vf.mean()),
        n_sgd=float(n_sgd.mean()),
        n_sgd_sem=nsem,
        n_params=circuit.n_params,
        seed=cfg.seed,
        wall_time=time.perf_counter() - t0,
        flags=flags,
    )
