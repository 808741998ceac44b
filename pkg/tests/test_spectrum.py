import numpy as np
import pytest

from shotvqe import engine
from shotvqe.ansatz import SymmetryProjector
from shotvqe.lattice import BondSet, LatticeSpec, build_lattice, symmetry_group
from shotvqe.spectrum import (HamiltonianSpec, SpectrumError, apply_hamiltonian,
                              lowest_k, sector_gap, total_spin_sq)

from conftest import dense_heisenberg, random_state


def two_site():
    return HamiltonianSpec(BondSet(2, ((0, 1),), ()), j1=1.0)


class TestApplyHamiltonian:
    def test_singlet_eigenvalue(self):
        h = two_site()
        singlet = engine.dimer_state([(0, 1)], 2)
        hv = apply_hamiltonian(h, singlet)
        np.testing.assert_allclose(hv, -0.75 * singlet, atol=1e-14)

    def test_triplet_eigenvalue(self):
        h = two_site()
        up_up = np.zeros(4, dtype=complex)
        up_up[0] = 1.0
        hv = apply_hamiltonian(h, up_up)
        np.testing.assert_allclose(hv, 0.25 * up_up, atol=1e-14)

    def test_four_site_ring_ground_energy(self):
        h = HamiltonianSpec(BondSet(4, ((0, 1), (1, 2), (2, 3), (0, 3)), ()))
        evals = np.linalg.eigvalsh(dense_heisenberg(h))
        assert abs(evals[0] - (-2.0)) < 1e-12
        data = lowest_k(h, 2)
        assert abs(data.ground_energy - (-2.0)) < 1e-9

    def test_matches_dense_oracle(self, rng):
        spec = LatticeSpec("square", (2, 3), ("open", "periodic"))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.35)
        dense = dense_heisenberg(h)
        v = random_state(6, rng)
        np.testing.assert_allclose(apply_hamiltonian(h, v), dense @ v, atol=1e-12)

    def test_hermiticity(self, rng):
        spec = LatticeSpec("square", (2, 4), ("open", "periodic"))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.4)
        u, v = random_state(8, rng), random_state(8, rng)
        lhs = engine.inner(u, apply_hamiltonian(h, v))
        rhs = np.conj(engine.inner(v, apply_hamiltonian(h, u)))
        assert abs(lhs - rhs) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(SpectrumError, match="sites"):
            apply_hamiltonian(two_site(), np.zeros(8, dtype=complex))

    def test_commutes_with_symmetries(self, rng):
        spec = LatticeSpec("square", (2, 4))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.4)
        v = random_state(8, rng)
        for sel in ("translations", "point_group", "full"):
            group = symmetry_group(spec, sel)
            for g in group.elements:
                gv = engine.apply_permutation(v, g)
                diff = apply_hamiltonian(h, gv) - engine.apply_permutation(
                    apply_hamiltonian(h, v), g)
                assert np.abs(diff).max() < 1e-10


class TestTotalSpin:
    def test_dimer_product_is_singlet(self):
        v = engine.dimer_state([(0, 2), (1, 3)], 4)
        assert abs(total_spin_sq(v)) < 1e-10

    def test_two_up_is_triplet(self):
        v = np.zeros(4, dtype=complex)
        v[0] = 1.0
        assert abs(total_spin_sq(v) - 2.0) < 1e-12

    def test_circuit_output_stays_singlet(self, rng):
        v = engine.dimer_state([(0, 1), (2, 3), (4, 5)], 6)
        for _ in range(40):
            i, j = rng.choice(6, size=2, replace=False)
            engine.apply_eswap(v, int(i), int(j), rng.uniform(-2, 2))
        assert abs(total_spin_sq(v)) < 1e-10


class TestLowestK:
    @pytest.mark.parametrize("extents,boundary,j2", [
        ((2, 2), ("periodic", "periodic"), 0.0),
        ((2, 3), ("open", "periodic"), 0.2),
        ((2, 4), ("open", "periodic"), 0.4),
        ((3, 4), ("periodic", "periodic"), 0.5),
    ])
    def test_matches_dense_oracle(self, extents, boundary, j2):
        spec = LatticeSpec("square", extents, boundary)
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=j2)
        dense_vals = np.linalg.eigvalsh(dense_heisenberg(h))
        k = 4
        data = lowest_k(h, k)
        np.testing.assert_allclose(data.eigenvalues, dense_vals[:k], atol=1e-9)
        assert data.residuals.max() < 1e-8

    def test_eigenstates_orthonormal(self):
        spec = LatticeSpec("square", (2, 4), ("open", "periodic"))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.4)
        data = lowest_k(h, 5)
        overlaps = data.eigenstates.conj() @ data.eigenstates.T
        np.testing.assert_allclose(overlaps, np.eye(5), atol=1e-10)

    def test_identity_sector_equals_unrestricted(self):
        spec = LatticeSpec("square", (2, 3), ("open", "periodic"))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.2)
        plain = lowest_k(h, 3)
        proj = SymmetryProjector.identity(6)
        sector = lowest_k(h, 3, sector=proj)
        np.testing.assert_allclose(sector.eigenvalues, plain.eigenvalues, atol=1e-9)

    def test_sz_zero_block_matches(self):
        spec = LatticeSpec("square", (2, 4), ("open", "periodic"))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.4)
        full = lowest_k(h, 2)
        block = lowest_k(h, 2, sz_zero=True)
        # The ground state lives at half filling for these antiferromagnets.
        assert abs(full.ground_energy - block.ground_energy) < 1e-9

    def test_sector_gap_against_dense_classification(self):
        spec = LatticeSpec("square", (2, 4))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.5)
        group = symmetry_group(spec, "translations")
        projector = SymmetryProjector(group)
        dense = dense_heisenberg(h)
        vals, vecs = np.linalg.eigh(dense)
        sector_vals = []
        for e, v in zip(vals, vecs.T):
            pv = projector.apply(v.astype(complex))
            if np.linalg.norm(pv) > 1e-8:
                sector_vals.append(e)
        sector_vals = np.asarray(sector_vals)
        distinct = sector_vals[sector_vals > sector_vals[0] + 1e-8]
        expected_gap = distinct[0] - sector_vals[0]
        assert abs(sector_gap(h, projector) - expected_gap) < 1e-8

    def test_gap_examples(self):
        spec = LatticeSpec("square", (2, 2))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.0)
        dense_vals = np.linalg.eigvalsh(dense_heisenberg(h))
        distinct = dense_vals[dense_vals > dense_vals[0] + 1e-8]
        data = lowest_k(h, 4)
        assert abs(data.gap() - (distinct[0] - dense_vals[0])) < 1e-10

    def test_spin_labels(self):
        spec = LatticeSpec("square", (2, 2))
        h = HamiltonianSpec(build_lattice(spec), j1=1.0, j2=0.0)
        data = lowest_k(h, 4)
        assert data.spin_sq[0] < 1e-8
        assert np.all(data.spin_sq[1:] > 1.9)

    def test_k_validation(self):
        with pytest.raises(SpectrumError, match="k"):
            lowest_k(two_site(), 0)

    def test_j1_zero_rejected(self):
        with pytest.raises(SpectrumError, match="j1"):
            HamiltonianSpec(BondSet(2, ((0, 1),), ()), j1=0.0)


@pytest.mark.slow
class TestSectorGapCollapse:
    def test_translation_sector_gap_collapses_toward_j2_06(self):
        # Frustration closes the translation-sector gap while the point-group
        # sector stays gapped on the 4x4 periodic square lattice.
        spec = LatticeSpec("square", (4, 4))
        bonds = build_lattice(spec)
        proj_t = SymmetryProjector(symmetry_group(spec, "translations"))
        proj_p = SymmetryProjector(symmetry_group(spec, "point_group"))
        h0 = HamiltonianSpec(bonds, 1.0, 0.0)
        h6 = HamiltonianSpec(bonds, 1.0, 0.6)
        gap_t0 = sector_gap(h0, proj_t, sz_zero=True)
        gap_t6 = sector_gap(h6, proj_t, sz_zero=True)
        gap_p6 = sector_gap(h6, proj_p, sz_zero=True)
        assert gap_t6 < 0.25 * gap_t0
        assert gap_t6 < 0.5 * gap_p6
