"""Finite-shot estimators for gradient, energy, norm, and metric entries.

Every expectation entering the projected formulas decomposes into matrix
elements <psi| U g |phi> of unitaries between unit vectors, so each real (or
phase-shifted imaginary) part is a mean of +-1 ancilla outcomes.  That is
modeled exactly: an element with true value x is estimated by drawing
m ~ Binomial(N_s, (1+x)/2) and returning 2m/N_s - 1, which is unbiased with
variance (1 - x^2)/N_s.

Shots are allocated per (parameter, Hamiltonian term, group element) triple;
the step log records the total drawn.  Estimates are combined exactly as in
the exact formulas, including the division by the sampled normalization
(the resulting O(1/N_s) ratio bias is the physical estimator's bias).
The gaussian_surrogate mode instead perturbs the exact force with
N(0, sqrt(Var f_k / N_s)) for idealized effective-temperature studies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .ansatz import (AnsatzError, Circuit, GradientEstimate, MetricTensor,
                     SymmetryProjector, derivative_stack, exact_gradient,
                     metric as exact_metric)
from .spectrum import HamiltonianSpec

MODES = ("exact", "gaussian_surrogate", "hadamard_bernoulli")
_SAMPLED_NORM_FLOOR = 1e-6


class ShotsError(RuntimeError):
    """Raised on inconsistent element values or unrecoverable normalization."""


@dataclass(frozen=True)
class ShotConfig:
    n_shots: int = 16
    mode: str = "hadamard_bernoulli"
    sample_metric: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ShotsError(f"unknown shot mode {self.mode!r}; expected one of {MODES}")
        if self.mode != "exact" and self.n_shots < 1:
            raise ShotsError("sampled modes need n_shots >= 1")


def estimate_matrix_element(x: float, n_shots: int, rng: np.random.Generator) -> float:
    """Unbiased Bernoulli estimate of a real matrix element x in [-1, 1]."""
    return float(_bernoulli(np.asarray([x]), n_shots, rng)[0])


def _bernoulli(x: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    over = np.abs(x) - 1.0
    if np.any(over > 1e-6):
        raise ShotsError(f"matrix element magnitude {np.abs(x).max():.8f} exceeds 1")
    p = np.clip((1.0 + x) / 2.0, 0.0, 1.0)
    m = rng.binomial(n_shots, p)
    return 2.0 * m / n_shots - 1.0


@dataclass
class MeasurementTable:
    """Exact matrix elements feeding one optimization step.

    Row 0 of each (B+1, ...) block is the bare (identity Hamiltonian-term)
    element; rows 1..B follow h.terms.  z[g][b, k] = <psi| P_b g |d_k psi>,
    y[g][b] = <psi| P_b g |psi>.
    """

    h: HamiltonianSpec
    circuit: Circuit
    projector: SymmetryProjector
    psi: np.ndarray
    stack: np.ndarray
    z: list[np.ndarray]
    y: list[np.ndarray]

    @property
    def couplings(self) -> np.ndarray:
        return np.array([0.5 * c for _, _, c in self.h.terms])

    @property
    def diag_shift(self) -> float:
        return -0.25 * sum(c for _, _, c in self.h.terms)


def measurement_table(h: HamiltonianSpec, circuit: Circuit, theta,
                      projector: SymmetryProjector) -> MeasurementTable:
    psi, stack = derivative_stack(circuit, theta)
    rows = [psi]
    for i, j, _ in h.terms:
        rows.append(engine.apply_swap(psi, i, j))
    bmat = np.array(rows)
    z, y = [], []
    for k in range(projector.order):
        gather = projector.gather_map(k)
        z.append(bmat.conj() @ stack[:, gather].T)
        y.append(bmat.conj() @ psi[gather])
    return MeasurementTable(h, circuit, projector, psi, stack, z, y)


def _combine(table: MeasurementTable, z: list[np.ndarray], y: list[np.ndarray]):
    """Norm, energy, connection, forces from (possibly sampled) elements."""
    proj = table.projector
    chi = proj.characters
    order = proj.order
    coup = table.couplings
    c0 = table.diag_shift
    norm = sum(chi[g] * y[g][0] for g in range(order)).real / order
    e_num = sum(chi[g] * (coup @ y[g][1:] + c0 * y[g][0]) for g in range(order)).real / order
    f_num = sum(chi[g] * (coup @ z[g][1:] + c0 * z[g][0]) for g in range(order)) / order
    a_num = sum(chi[g] * z[g][0] for g in range(order)) / order
    return norm, e_num, f_num, a_num


def _single_shot_variance(table: MeasurementTable, energy: float, norm: float) -> np.ndarray:
    """Exact single-shot variance of each force component's element combination.

    The bare element enters both the Hamiltonian sum and the connection term,
    so its effective weight is (c0 - E); the sampled-normalization noise is
    not included (it is the O(1/N_s) ratio bias, not leading variance).
    """
    proj = table.projector
    coup = table.couplings
    c0 = table.diag_shift
    var = np.zeros(table.circuit.n_params)
    pref = (2.0 / (norm * proj.order)) ** 2
    for g in range(proj.order):
        chi = proj.characters[g]
        w_re, w_im = chi.real, chi.imag
        zg = table.z[g]
        weights = np.concatenate(([c0 - energy], coup))
        var_re = 1.0 - np.minimum(1.0, zg.real**2)
        contrib = (weights**2)[:, None] * var_re * w_re**2
        if abs(w_im) > 1e-15:
            var_im = 1.0 - np.minimum(1.0, zg.imag**2)
            contrib = contrib + (weights**2)[:, None] * var_im * w_im**2
        var += pref * contrib.sum(axis=0)
    return var


def _sample_elements(table: MeasurementTable, n_shots: int, rng: np.random.Generator):
    """Bernoulli-sampled copies of the z/y element lists, plus the draw count."""
    proj = table.projector
    z_s, y_s = [], []
    n_elements = 0
    for g in range(proj.order):
        complex_chi = abs(proj.characters[g].imag) > 1e-15
        zg = table.z[g]
        yg = table.y[g]
        z_re = _bernoulli(zg.real, n_shots, rng)
        # The bare row feeds the complex connection, so its imaginary part is
        # always measured; other rows need it only under complex characters.
        z_im = np.zeros_like(z_re)
        z_im[0] = _bernoulli(zg.imag[0], n_shots, rng)
        n_elements += zg.size + zg.shape[1]
        if complex_chi:
            z_im[1:] = _bernoulli(zg.imag[1:], n_shots, rng)
            n_elements += zg.size - zg.shape[1]
        y_re = _bernoulli(yg.real, n_shots, rng)
        y_im = np.zeros_like(y_re)
        n_elements += yg.size
        if complex_chi:
            y_im = _bernoulli(yg.imag, n_shots, rng)
            n_elements += yg.size
        z_s.append(z_re + 1j * z_im)
        y_s.append(y_re + 1j * y_im)
    return z_s, y_s, n_elements * n_shots


def stack_gradient(h: HamiltonianSpec, circuit: Circuit, theta,
                   projector: SymmetryProjector,
                   derivatives: tuple[np.ndarray, np.ndarray] | None = None):
    """Exact gradient from a derivative stack: (estimate, psi, stack).

    Equivalent to exact_gradient but shares the stack with the metric, which
    is what the surrogate-mode optimizer loop wants.
    """
    from . import engine
    from .spectrum import apply_hamiltonian

    if derivatives is None:
        psi, stack = derivative_stack(circuit, theta)
    else:
        psi, stack = derivatives
    p_psi = projector.apply(psi)
    norm = engine.inner(psi, p_psi).real
    if norm < 1e-12:
        raise AnsatzError(f"state annihilated by projector (norm {norm:.3e})")
    hp = projector.apply(apply_hamiltonian(h, psi))
    energy = engine.inner(psi, hp).real / norm
    s_h = stack @ hp.conj()
    s_n = stack @ p_psi.conj()
    connection = s_n / norm
    forces = 2.0 * (s_h / norm - connection * energy).real
    est = GradientEstimate(
        forces=forces,
        connection=connection,
        var_single_shot=np.zeros_like(forces),
        energy=energy,
        norm=norm,
        mode="exact",
    )
    return est, psi, stack


def sampled_gradient(h: HamiltonianSpec, circuit: Circuit, theta,
                     projector: SymmetryProjector, cfg: ShotConfig,
                     rng: np.random.Generator,
                     table: MeasurementTable | None = None,
                     surrogate_var: np.ndarray | None = None,
                     derivatives: tuple[np.ndarray, np.ndarray] | None = None) -> GradientEstimate:
    """Finite-shot gradient estimate; exact mode reproduces exact_gradient.

    A sampled normalization below 1e-6 triggers one full redraw, then an
    error; the redraw is recorded in the estimate flags.  In surrogate mode
    with a cached variance vector the element tables are skipped entirely.
    """
    if cfg.mode == "exact":
        return exact_gradient(h, circuit, theta, projector)

    if cfg.mode == "gaussian_surrogate" and surrogate_var is not None:
        est, _, _ = stack_gradient(h, circuit, theta, projector,
                                   derivatives=derivatives)
        noisy = est.forces + rng.normal(
            0.0, np.sqrt(surrogate_var / cfg.n_shots))
        return GradientEstimate(
            forces=noisy,
            connection=est.connection,
            var_single_shot=surrogate_var,
            energy=est.energy,
            norm=est.norm,
            mode=cfg.mode,
            n_shots=cfg.n_shots,
            shots_used=circuit.n_params * cfg.n_shots,
        )

    if table is None:
        table = measurement_table(h, circuit, theta, projector)
    norm_x, e_num_x, f_num_x, a_num_x = _combine(table, table.z, table.y)
    if norm_x < 1e-12:
        raise AnsatzError(f"state annihilated by projector (norm {norm_x:.3e})")
    energy_x = e_num_x / norm_x
    var1 = _single_shot_variance(table, energy_x, norm_x)

    if cfg.mode == "gaussian_surrogate":
        forces_x = 2.0 * (f_num_x / norm_x - (a_num_x / norm_x) * energy_x).real
        noisy = forces_x + rng.normal(0.0, np.sqrt(var1 / cfg.n_shots))
        return GradientEstimate(
            forces=noisy,
            connection=a_num_x / norm_x,
            var_single_shot=var1,
            energy=energy_x,
            norm=norm_x,
            mode=cfg.mode,
            n_shots=cfg.n_shots,
            shots_used=circuit.n_params * cfg.n_shots,
        )

    flags: list[str] = []
    for attempt in range(2):
        z_s, y_s, used = _sample_elements(table, cfg.n_shots, rng)
        norm_s, e_num_s, f_num_s, a_num_s = _combine(table, z_s, y_s)
        if norm_s >= _SAMPLED_NORM_FLOOR:
            break
        flags.append("unreliable normalization, estimator redrawn")
    else:
        raise ShotsError(
            f"sampled normalization {norm_s:.3e} below floor after redraw"
        )
    energy_s = e_num_s / norm_s
    conn_s = a_num_s / norm_s
    forces = 2.0 * (f_num_s / norm_s - conn_s * energy_s).real
    return GradientEstimate(
        forces=forces,
        connection=conn_s,
        var_single_shot=var1,
        energy=energy_x,
        norm=norm_x,
        mode=cfg.mode,
        n_shots=cfg.n_shots,
        shots_used=used,
        flags=flags,
    )


def sampled_metric(circuit: Circuit, theta, projector: SymmetryProjector,
                   cfg: ShotConfig, rng: np.random.Generator,
                   table: MeasurementTable | None = None,
                   h: HamiltonianSpec | None = None) -> MetricTensor:
    """Metric tensor with each Gram element Bernoulli-sampled (Re and Im).

    Only the upper triangle is measured; the lower is its conjugate, so the
    sampled tensor stays Hermitian by construction.  The gaussian surrogate
    models force noise only, so it keeps the exact metric.
    """
    if cfg.mode in ("exact", "gaussian_surrogate") or not cfg.sample_metric:
        derivs = None if table is None else (table.psi, table.stack)
        return exact_metric(circuit, theta, projector, derivatives=derivs)
    if table is None:
        if h is None:
            raise ShotsError("sampled_metric needs a measurement table or HamiltonianSpec")
        table = measurement_table(h, circuit, theta, projector)
    n_p = circuit.n_params
    proj = table.projector
    stack = table.stack
    gram = np.zeros((n_p, n_p), dtype=np.complex128)
    iu = np.triu_indices(n_p, k=1)
    complex_chi = bool(np.any(np.abs(np.asarray(proj.characters).imag) > 1e-15))
    for g in range(proj.order):
        gather = proj.gather_map(g)
        m_g = stack.conj() @ stack[:, gather].T
        if complex_chi:
            # Mirroring one triangle is only unbiased for real characters;
            # with complex ones every entry is measured.
            samp = (_bernoulli(m_g.real, cfg.n_shots, rng)
                    + 1j * _bernoulli(m_g.imag, cfg.n_shots, rng))
        else:
            samp = np.zeros_like(m_g)
            samp[iu] = (_bernoulli(m_g.real[iu], cfg.n_shots, rng)
                        + 1j * _bernoulli(m_g.imag[iu], cfg.n_shots, rng))
            samp = samp + samp.conj().T
            samp[np.diag_indices(n_p)] = _bernoulli(
                np.diag(m_g).real, cfg.n_shots, rng
            ).astype(np.complex128)
        gram += proj.characters[g] * samp
    gram /= proj.order

    chi = proj.characters
    for attempt in range(2):
        y_s = []
        z0_s = []
        for g in range(proj.order):
            y_re = _bernoulli(table.y[g].real[:1], cfg.n_shots, rng)
            y_s.append(complex(y_re[0]))
            z_re = _bernoulli(table.z[g].real[0], cfg.n_shots, rng)
            z_im = _bernoulli(table.z[g].imag[0], cfg.n_shots, rng)
            z0_s.append(z_re + 1j * z_im)
        norm_s = float(sum(chi[g].real * y_s[g].real - chi[g].imag * y_s[g].imag
                           for g in range(proj.order)) / proj.order)
        if norm_s >= _SAMPLED_NORM_FLOOR:
            break
    else:
        raise ShotsError(f"sampled normalization {norm_s:.3e} below floor in metric")
    conn = sum(chi[g] * z0_s[g] for g in range(proj.order)) / (proj.order * norm_s)
    g_mat = gram / norm_s - np.outer(np.conj(conn), conn)
    g_mat = 0.5 * (g_mat + g_mat.conj().T)
    return MetricTensor(matrix=g_mat)
