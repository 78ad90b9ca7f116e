import numpy as np
import pytest
from conftest import (
    dissipator_by_definition,
    liouvillian_superoperator,
    random_density,
    random_hermitian,
    steady_state_from_superoperator,
    vectorize_map,
)

from lindblad_sdp.bath import BathSpec, jn_plus_product, jn_product
from lindblad_sdp.chain import ChainSpec, build_hamiltonian, diagonalize, gibbs_populations
from lindblad_sdp.errors import (
    DegenerateSpectrumError,
    NonUniqueSteadyStateError,
    ValidationError,
)
from lindblad_sdp.redfield import (
    apply_dissipator,
    build_dissipator,
    population_matrix,
    second_order_coherences,
    solve_ness,
    solve_zeroth_ness,
)


def make_dissipator(n, g, betas_by_site, n_left=1, n_right=1, omega=1.0, bias=0.0, gamma=1.0):
    chain = ChainSpec(
        n_qubits=n, onsite_energy=omega, energy_bias=bias, coupling=g,
        n_left=n_left, n_right=n_right,
    )
    eigs = diagonalize(build_hamiltonian(chain))
    baths = [
        BathSpec(site=s, inv_temperature=betas_by_site[s], coupling=gamma, cutoff=10.0)
        for s in chain.attached_sites()
    ]
    return chain, eigs, build_dissipator(chain, eigs, baths)


class TestBuildDissipator:
    def test_site_mismatch_rejected(self):
        chain = ChainSpec(n_qubits=2, n_left=1, n_right=1)
        eigs = diagonalize(build_hamiltonian(chain))
        with pytest.raises(ValidationError):
            build_dissipator(chain, eigs, [BathSpec(site=1, inv_temperature=1.0)])

    def test_tables_are_finite(self):
        _, _, dis = make_dissipator(2, 0.07, {1: 0.5, 2: 7.0})
        for t in dis.coeff_c + dis.coeff_d:
            assert np.all(np.isfinite(t.view(float)))


class TestApplyDissipator:
    def test_equilibrium_single_qubit_gibbs_is_stationary_on_diagonal(self):
        chain, eigs, dis = make_dissipator(1, 0.0, {1: 1.0}, n_left=1, n_right=0)
        rho = np.diag(gibbs_populations(eigs.energies, 1.0)).astype(complex)
        out = apply_dissipator(dis, rho)
        assert np.abs(np.diagonal(out)).max() < 1e-10

    def test_trace_annihilation_random_inputs(self):
        rng = np.random.default_rng(0)
        _, _, dis = make_dissipator(2, 0.2, {1: 1.0, 2: 2.0})
        for _ in range(100):
            rho = random_hermitian(rng, 4)
            out = apply_dissipator(dis, rho)
            assert abs(np.trace(out)) < 1e-10 * np.linalg.norm(rho)

    def test_hermiticity_preservation(self):
        rng = np.random.default_rng(1)
        _, _, dis = make_dissipator(3, 0.15, {1: 0.7, 3: 3.0})
        for _ in range(20):
            rho = random_hermitian(rng, 8)
            out = apply_dissipator(dis, rho)
            assert np.linalg.norm(out - out.conj().T) < 1e-10

    @pytest.mark.parametrize("n,g", [(2, 0.2), (3, 0.05)])
    def test_matches_projector_sum_definition(self, n, g):
        rng = np.random.default_rng(2)
        betas = {1: 1.0, n: 4.0}
        _, _, dis = make_dissipator(n, g, betas)
        d = 2**n
        for _ in range(5):
            rho = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            fast = apply_dissipator(dis, rho)
            slow = dissipator_by_definition(dis, rho)
            assert np.abs(fast - slow).max() < 1e-12 * max(1.0, np.abs(slow).max())

    def test_dense_superoperator_equivalence(self):
        # column-by-column vectorization of both routes must agree entrywise
        _, _, dis = make_dissipator(2, 0.3, {1: 1.0, 2: 0.5})
        fast = vectorize_map(lambda m: apply_dissipator(dis, m), 4)
        slow = vectorize_map(lambda m: dissipator_by_definition(dis, m), 4)
        assert np.abs(fast - slow).max() < 1e-12

    def test_shape_mismatch(self):
        _, _, dis = make_dissipator(2, 0.1, {1: 1.0, 2: 1.0})
        with pytest.raises(ValidationError):
            apply_dissipator(dis, np.eye(3))


class TestPopulationMatrix:
    def test_two_level_rates(self):
        chain, eigs, dis = make_dissipator(1, 0.0, {1: 1.0}, n_left=1, n_right=0)
        a = population_matrix(dis)
        bath = dis.baths[0]
        r_up = jn_product(2.0, bath)       # J(2) n(2)
        r_down = jn_plus_product(2.0, bath)  # J(2) (n(2) + 1)
        want = np.array([[-r_up, r_down], [r_up, -r_down]])
        assert np.abs(a - want).max() < 1e-12
        assert r_up / r_down == pytest.approx(np.exp(-2.0), rel=1e-12)

    def test_column_sums_vanish(self):
        _, _, dis = make_dissipator(3, 0.23, {1: 0.9, 3: 2.5})
        a = population_matrix(dis)
        assert np.abs(a.sum(axis=0)).max() < 1e-10 * np.abs(a).max()

    def test_gibbs_is_nullvector_in_equilibrium(self):
        _, eigs, dis = make_dissipator(3, 0.08, {1: 1.0, 3: 1.0})
        a = population_matrix(dis)
        gibbs = gibbs_populations(eigs.energies, 1.0)
        assert np.abs(a @ gibbs).max() < 1e-9

    def test_degenerate_refusal(self):
        chain = ChainSpec(n_qubits=2, onsite_energy=1.0, coupling=0.5, n_left=1, n_right=1)
        eigs = diagonalize(build_hamiltonian(chain))
        baths = [BathSpec(site=1, inv_temperature=1.0), BathSpec(site=2, inv_temperature=1.0)]
        dis = build_dissipator(chain, eigs, baths)
        with pytest.raises(DegenerateSpectrumError):
            population_matrix(dis)


class TestSolveZerothNess:
    def test_two_level_closed_form(self):
        chain, eigs, dis = make_dissipator(1, 0.0, {1: 1.0}, n_left=1, n_right=0)
        p = solve_zeroth_ness(population_matrix(dis)).populations
        z = 1.0 + np.exp(-2.0)
        assert p == pytest.approx([1.0 / z, np.exp(-2.0) / z], rel=1e-10)

    def test_equilibrium_matches_gibbs(self):
        _, eigs, dis = make_dissipator(3, 0.05, {1: 1.0, 3: 1.0})
        sol = solve_ness(dis, with_coherences=False)
        gibbs = gibbs_populations(eigs.energies, 1.0)
        assert np.abs(sol.populations - gibbs).max() < 1e-8
        assert sol.gibbs_distance < 1e-8

    def test_nonequilibrium_against_vectorized_restriction(self):
        _, _, dis = make_dissipator(4, 0.01, {1: 1.0, 4: 5.0})
        p = solve_zeroth_ness(population_matrix(dis)).populations
        sup = vectorize_map(lambda m: apply_dissipator(dis, m), 16)
        diag_idx = [i + 16 * i for i in range(16)]
        restricted = sup[np.ix_(diag_idx, diag_idx)].real
        p_oracle = solve_zeroth_ness(restricted).populations
        assert np.abs(p - p_oracle).max() < 1e-10

    def test_lstsq_route_agrees(self):
        _, _, dis = make_dissipator(3, 0.12, {1: 0.5, 3: 2.0})
        a = population_matrix(dis)
        p_svd = solve_zeroth_ness(a, method="svd").populations
        p_lsq = solve_zeroth_ness(a, method="lstsq").populations
        assert np.abs(p_svd - p_lsq).max() < 1e-10

    def test_non_unique_nullspace_rejected(self):
        # block-diagonal rate matrix with two disconnected sectors
        a = np.array(
            [
                [-1.0, 2.0, 0.0, 0.0],
                [1.0, -2.0, 0.0, 0.0],
                [0.0, 0.0, -3.0, 1.0],
                [0.0, 0.0, 3.0, -1.0],
            ]
        )
        with pytest.raises(NonUniqueSteadyStateError):
            solve_zeroth_ness(a)

    def test_residual_and_sum(self):
        _, _, dis = make_dissipator(3, 0.03, {1: 1.0, 3: 0.3})
        sol = solve_ness(dis, with_coherences=False)
        assert sol.populations.sum() == pytest.approx(1.0, abs=1e-12)
        assert sol.residual < 1e-12
        assert np.all(sol.populations >= 0.0)


class TestSecondOrderCoherences:
    def test_diagonal_generator_gives_zero(self):
        chain, eigs, dis = make_dissipator(1, 0.0, {1: 1.0}, n_left=1, n_right=0)
        p = solve_zeroth_ness(population_matrix(dis)).populations
        coh = second_order_coherences(dis, p)
        assert np.abs(coh).max() < 1e-12

    def test_hermiticity(self):
        _, _, dis = make_dissipator(3, 0.11, {1: 0.8, 3: 2.2})
        p = solve_zeroth_ness(population_matrix(dis)).populations
        coh = second_order_coherences(dis, p)
        assert np.abs(coh - coh.conj().T).max() < 1e-12
        assert np.abs(np.diagonal(coh)).max() == 0.0

    def test_against_full_ness_extrapolation(self):
        # two-point Richardson extrapolation of the dense full-equation NESS
        _, eigs, dis = make_dissipator(3, 0.05, {1: 1.0, 3: 1.0})
        sol = solve_ness(dis)
        d = 8
        sup = vectorize_map(lambda m: apply_dissipator(dis, m), d)
        off = ~np.eye(d, dtype=bool)

        def coherence_ratio(eps):
            gen = liouvillian_superoperator(eigs.energies, sup, eps)
            rho = steady_state_from_superoperator(gen, d)
            out = np.zeros((d, d), dtype=complex)
            out[off] = rho[off] / eps**2
            return out

        e1, e2 = 1e-3, 1e-4
        c1, c2 = coherence_ratio(e1), coherence_ratio(e2)
        extrapolated = c2 + (c2 - c1) * e2**2 / (e1**2 - e2**2)
        assert np.abs(extrapolated - sol.coherences2).max() < 1e-6

    def test_consistency_rate_matrix_vs_direct_application(self):
        _, _, dis = make_dissipator(3, 0.07, {1: 1.0, 3: 4.0})
        a = population_matrix(dis)
        p = solve_zeroth_ness(a).populations
        direct = np.diagonal(apply_dissipator(dis, np.diag(p).astype(complex))).real
        assert np.abs(a @ p - direct).max() < 1e-12
