import numpy as np
import pytest
from scipy.linalg import expm

from conftest import SX, SY, SZ, bell_state, random_hermitian
from nlqd.errors import ValidationError
from nlqd.generators import GammaFamily, GeneratorSpec, TFamily, random_density_matrix
from nlqd.entanglement import (
    BipartiteDynamics,
    BipartiteState,
    check_environment_stationarity,
    check_local_equivalence,
    evolve_bipartite,
    joint_hamiltonian,
    polchinski_generator,
    random_entangled_state,
    trivial_extension,
    verify_cp_extension,
)
from nlqd.linalg import (
    dagger,
    max_abs,
    mutual_information,
    partial_trace,
    tensor_product,
    von_neumann_entropy,
)
from nlqd.propagation import IntegratorConfig, evolve


def bell():
    return BipartiteState(d_H=2, d_K=2, matrix=bell_state())


class TestBipartiteState:
    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            BipartiteState(d_H=2, d_K=3, matrix=np.eye(4) / 4)

    def test_marginals(self):
        b = bell()
        assert max_abs(b.marginal_H() - np.eye(2) / 2) < 1e-12
        assert max_abs(b.marginal_K() - np.eye(2) / 2) < 1e-12


class TestPolchinskiGenerator:
    def test_von_neumann_one_sided(self, rng):
        dyn = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ))
        g = polchinski_generator(dyn, bell())
        assert max_abs(g - tensor_product(SZ, np.eye(2))) < 1e-12

    def test_two_sided_sum(self, rng):
        dyn = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ), spec_K=GeneratorSpec(H=SX))
        g = polchinski_generator(dyn, bell())
        expected = tensor_product(SZ, np.eye(2)) + tensor_product(np.eye(2), SX)
        assert max_abs(g - expected) < 1e-12

    def test_dims_required_for_bare_matrix(self):
        dyn = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ))
        with pytest.raises(ValidationError):
            polchinski_generator(dyn, bell_state())

    def test_nonlinear_local_marginal(self, rng):
        spec = GeneratorSpec(H=SZ, t_family=TFamily("powerLaw", q=1.0))
        dyn = BipartiteDynamics(spec_H=spec)
        w = random_entangled_state(2, 2, rng)
        from nlqd.generators import generator_matrix

        expected = tensor_product(generator_matrix(spec, w.marginal_H()), np.eye(2))
        assert max_abs(polchinski_generator(dyn, w) - expected) < 1e-12


class TestEvolveBipartite:
    CFG = IntegratorConfig(dt=1e-3, t_final=0.5)

    def test_product_state_stays_product(self, rng):
        a = random_density_matrix(2, rng)
        b = random_density_matrix(2, rng)
        w = BipartiteState(d_H=2, d_K=2, matrix=tensor_product(a, b))
        spec = GeneratorSpec(
            H=SZ + 0.3 * SX,
            t_family=TFamily("powerLaw", q=1.5),
            gamma_family=GammaFamily("nonEssential", r=2.0, A=SY),
        )
        traj = evolve_bipartite(w, BipartiteDynamics(spec_H=spec), self.CFG)
        final = traj.final_state()
        local = evolve(a, spec, self.CFG).final_state()
        assert max_abs(final - tensor_product(local, b)) < 1e-8
        assert np.max(traj.monitors["mutual_info"]) < 1e-8

    def test_bell_unitary_marginal_frozen(self):
        # maximally mixed marginal is stationary for powerLaw T, so the
        # joint evolution is driven by a constant local generator
        q = 1.0
        spec = GeneratorSpec(H=SZ, t_family=TFamily("powerLaw", q=q))
        traj = evolve_bipartite(bell(), BipartiteDynamics(spec_H=spec), self.CFG)
        t_eff = 2.0 * 2.0 ** (-q) * SZ  # H rho^q + rho^q H at rho = I/2
        u = tensor_product(expm(-1j * t_eff * self.CFG.t_final), np.eye(2))
        expected = u @ bell_state() @ dagger(u)
        assert max_abs(traj.final_state() - expected) < 1e-9

    def test_global_spectrum_and_entropies_preserved(self, rng):
        w = random_entangled_state(2, 2, rng, mixture_terms=2)
        spec = GeneratorSpec(
            H=random_hermitian(2, rng),
            t_family=TFamily("powerLaw", q=1.3),
            gamma_family=GammaFamily("nonEssential", r=2.0, A=SX),
        )
        traj = evolve_bipartite(w, BipartiteDynamics(spec_H=spec), self.CFG)
        eig0 = np.sort(np.linalg.eigvalsh(w.matrix))
        for s in traj.states:
            assert max_abs(np.sort(np.linalg.eigvalsh(s)) - eig0) < 1e-7
        ent = traj.monitors["entropy"]
        assert np.max(np.abs(ent - ent[0])) < 1e-7

    def test_remote_marginal_immobile(self, rng):
        w = random_entangled_state(2, 3, rng)
        spec = GeneratorSpec(H=SZ + 0.2 * SX, t_family=TFamily("powerLaw", q=2.0))
        traj = evolve_bipartite(w, BipartiteDynamics(spec_H=spec), self.CFG)
        rho_k0 = w.marginal_K()
        for s in traj.states:
            assert max_abs(partial_trace(s, (2, 3), "H") - rho_k0) < 1e-9

    def test_schmidt_rank_two_on_three_by_two(self, rng):
        # rank-2 H marginal on a qutrit leaves room for nonEssential Gamma
        v = np.zeros(6, dtype=complex)
        v[0] = v[4] = 1 / np.sqrt(2)  # |0>|0> + |1>|1> embedded in 3x2
        w = BipartiteState(d_H=3, d_K=2, matrix=np.outer(v, v.conj()))
        a = np.zeros((3, 3), dtype=complex)
        a[0, 2] = a[2, 0] = 1.0
        spec = GeneratorSpec(
            H=np.diag([1.0, -1.0, 0.0]).astype(complex),
            gamma_family=GammaFamily("nonEssential", r=2.0, A=a),
        )
        gam = polchinski_generator(BipartiteDynamics(spec_H=spec), w) - tensor_product(
            spec.H, np.eye(2)
        )
        assert max_abs(gam) > 1e-3  # the dissipative part is actually active
        traj = evolve_bipartite(w, BipartiteDynamics(spec_H=spec), self.CFG)
        eig0 = np.sort(np.linalg.eigvalsh(w.matrix))
        assert max_abs(np.sort(np.linalg.eigvalsh(traj.final_state())) - eig0) < 1e-7
        assert max_abs(partial_trace(traj.final_state(), (3, 2), "H") - w.marginal_K()) < 1e-8


class TestEnvironmentStationarity:
    def test_non_essential_witnessless(self, rng):
        a = np.zeros((3, 3), dtype=complex)
        a[0, 2] = a[2, 0] = 1.0
        spec = GeneratorSpec(H=np.zeros((3, 3)), gamma_family=GammaFamily("nonEssential", r=2.0, A=a))
        v = np.zeros(6, dtype=complex)
        v[0] = v[4] = 1 / np.sqrt(2)
        w = BipartiteState(d_H=3, d_K=2, matrix=np.outer(v, v.conj()))
        assert check_environment_stationarity(BipartiteDynamics(spec_H=spec), w) < 1e-10

    def test_zero_mean_moves_environment(self, rng):
        spec = GeneratorSpec(H=SZ, gamma_family=GammaFamily("zeroMean", sigma=1.0, r=2.0))
        w = random_entangled_state(2, 2, rng, mixture_terms=2)
        assert check_environment_stationarity(BipartiteDynamics(spec_H=spec), w) > 1e-4


class TestTrivialExtension:
    def test_identity_map_destroys_correlations(self):
        out = trivial_extension(lambda r: r, bell())
        assert mutual_information(bell_state(), (2, 2)) == pytest.approx(2 * np.log(2), abs=1e-8)
        assert mutual_information(out.matrix, (2, 2)) == pytest.approx(0.0, abs=1e-8)
        assert max_abs(out.matrix - np.eye(4) / 4) < 1e-10

    def test_transpose_map_local(self, rng):
        # transpose is positive but not CP; the trivial extension swallows it
        w = random_entangled_state(2, 2, rng)
        out = trivial_extension(lambda r: r.T, w)
        assert max_abs(out.marginal_H() - w.marginal_H().T) < 1e-10
        assert max_abs(out.marginal_K() - w.marginal_K()) < 1e-10
        assert np.min(np.linalg.eigvalsh(out.matrix)) >= -1e-12


class TestLocalEquivalence:
    def test_product_state(self, rng):
        a = random_density_matrix(2, rng)
        b = random_density_matrix(3, rng)
        assert check_local_equivalence(tensor_product(a, b), a, b)

    def test_bell_vs_mixed_product(self):
        assert check_local_equivalence(bell_state(), np.eye(2) / 2, np.eye(2) / 2)

    def test_mismatch_detected(self, rng):
        a = random_density_matrix(2, rng)
        assert not check_local_equivalence(bell_state(), a, np.eye(2) / 2) or max_abs(
            a - np.eye(2) / 2
        ) < 1e-9


class TestCpExtensionAudit:
    def test_requires_passive_environment(self, rng):
        dyn = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ), spec_K=GeneratorSpec(H=SX))
        with pytest.raises(ValidationError):
            verify_cp_extension(dyn, [bell()], IntegratorConfig(dt=1e-2, t_final=0.1))

    def test_non_essential_passes(self, rng):
        spec = GeneratorSpec(
            H=SZ + 0.2 * SX,
            t_family=TFamily("powerLaw", q=1.5),
            gamma_family=GammaFamily("nonEssential", r=2.0, A=SY),
        )
        samples = [random_entangled_state(2, 2, rng) for _ in range(3)]
        rep = verify_cp_extension(
            BipartiteDynamics(spec_H=spec), samples, IntegratorConfig(dt=1e-3, t_final=0.3)
        )
        assert rep.passed
        for r in rep.samples:
            assert r.min_eigenvalue > -1e-10

    def test_zero_mean_fails_remote_condition(self, rng):
        spec = GeneratorSpec(H=SZ, gamma_family=GammaFamily("zeroMean", sigma=1.0, r=2.0))
        samples = [random_entangled_state(2, 2, rng, mixture_terms=2)]
        cfg = IntegratorConfig(dt=1e-3, t_final=0.3, max_step_drift=1e-2)
        rep = verify_cp_extension(BipartiteDynamics(spec_H=spec), samples, cfg)
        assert not rep.passed
        assert rep.samples[0].remote_residual > 1e-4


class TestJointHamiltonian:
    def test_one_and_two_sided(self):
        dyn1 = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ))
        assert max_abs(joint_hamiltonian(dyn1, (2, 2)) - tensor_product(SZ, np.eye(2))) < 1e-12
        dyn2 = BipartiteDynamics(spec_H=GeneratorSpec(H=SZ), spec_K=GeneratorSpec(H=SX))
        expected = tensor_product(SZ, np.eye(2)) + tensor_product(np.eye(2), SX)
        assert max_abs(joint_hamiltonian(dyn2, (2, 2)) - expected) < 1e-12
