"""Metropolis sampling of the Boltzmann weight exp(-E(theta)/T) over angles.

The walker proposes Gaussian all-component moves; the step scale is tuned
during burn-in toward a 30-60% acceptance window.  Observables are averaged
post burn-in with thinning, with blocking error bars.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ansatz
from .ansatz import Circuit, SymmetryProjector
from .spectrum import HamiltonianSpec


class ThermalError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalConfig:
    beta: float
    proposal_scale: float = 0.2
    chain_length: int = 100_000
    burn_in: int = 20_000
    thinning: int = 10
    seed: int = 0
    tune: bool = True
    init_scale: float = 0.1

    def __post_init__(self):
        if self.beta <= 0:
            raise ThermalError("inverse temperature beta must be positive")
        if not 0 <= self.burn_in < self.chain_length:
            raise ThermalError("burn-in must be shorter than the chain")


@dataclass
class ThermalObservables:
    mean_fidelity: float
    mean_energy: float
    var_energy: float
    cv_beta: float
    acceptance: float
    n_samples: int
    n_blocks: int
    fidelity_sem: float
    energy_sem: float
    proposal_scale: float
    flags: list[str] = field(default_factory=list)


def metropolis_accept(delta_e: float, beta: float, u: float) -> bool:
    """Standard Metropolis rule: accept with probability min(1, exp(-beta dE))."""
    if delta_e <= 0:
        return True
    return u < math.exp(-beta * delta_e)


def _blocked_sem(x: np.ndarray, n_blocks: int = 20) -> float:
    n_blocks = min(n_blocks, max(1, len(x) // 2))
    if n_blocks < 2:
        return float("nan")
    usable = (len(x) // n_blocks) * n_blocks
    means = x[:usable].reshape(n_blocks, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_blocks))


def metropolis_chain(h: HamiltonianSpec, circuit: Circuit,
                     projector: SymmetryProjector, cfg: ThermalConfig,
                     ground) -> ThermalObservables:
    """Random walk in parameter space with stationary density exp(-beta E)."""
    rng = np.random.default_rng(cfg.seed)
    grounds = np.atleast_2d(np.asarray(ground))
    theta = rng.uniform(0.0, cfg.init_scale, circuit.n_params)

    def exact_energy(th):
        e, _ = ansatz.projected_energy(h, circuit, th, projector)
        return e

    energy = exact_energy(theta)
    scale = cfg.proposal_scale
    accepted = 0
    tune_accepted = 0
    tune_window = 200
    energies, fidelities = [], []
    flags: list[str] = []

    for step in range(cfg.chain_length):
        proposal = theta + rng.normal(0.0, scale, circuit.n_params)
        e_new = exact_energy(proposal)
        if metropolis_accept(e_new - energy, cfg.beta, rng.uniform()):
            theta, energy = proposal, e_new
            accepted += 1
            tune_accepted += 1
        in_burn = step < cfg.burn_in
        if cfg.tune and in_burn and (step + 1) % tune_window == 0:
            rate = tune_accepted / tune_window
            if rate < 0.30:
                scale /= 1.3
            elif rate > 0.60:
                scale *= 1.3
            tune_accepted = 0
        if not in_burn and (step - cfg.burn_in) % cfg.thinning == 0:
            energies.append(energy)
            fidelities.append(
                ansatz.fidelity(circuit, theta, projector, grounds))

    rate = accepted / cfg.chain_length
    if rate < 0.01 or rate > 0.99:
        flags.append(f"acceptance rate {rate:.3f} suggests a mis-tuned proposal scale")
    e_arr = np.asarray(energies)
    f_arr = np.asarray(fidelities)
    var_e = float(e_arr.var())
    return ThermalObservables(
        mean_fidelity=float(f_arr.mean()),
        mean_energy=float(e_arr.mean()),
        var_energy=var_e,
        cv_beta=cfg.beta**2 * var_e,
        acceptance=rate,
        n_samples=len(e_arr),
        n_blocks=min(20, max(1, len(e_arr) // 2)),
        fidelity_sem=_blocked_sem(f_arr),
        energy_sem=_blocked_sem(e_arr),
        proposal_scale=scale,
        flags=flags,
    )
