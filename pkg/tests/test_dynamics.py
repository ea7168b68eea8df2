"""State preparation, unitary propagation and the Lindblad stepper."""

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from starkchain import (
    ANGULAR_PER_MHZ,
    DeviceParams,
    DomainError,
    OperatorMatrix,
    PotentialSpec,
    QuantumState,
    StateSpecError,
    build_observable,
    build_sector_basis,
    build_xy_hamiltonian,
    embed_in_full,
    evolve_lindblad,
    evolve_unitary,
    full_index,
    make_collapse_ops,
    paper_device,
    prepare_initial_state,
)


def _random_hermitian_op(dim, rng, tag):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    return OperatorMatrix(matrix=sp.csr_matrix(h), basis_tag=tag)


def _random_state(dim, rng, tag):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState(v / np.linalg.norm(v), tag)


class TestStatePrep:
    def test_computational_state(self):
        st = prepare_initial_state("10000", 5)
        vec = np.zeros(32)
        vec[full_index((1, 0, 0, 0, 0))] = 1.0
        np.testing.assert_allclose(st.data, vec)
        assert st.basis_tag == "full:n=5"

    def test_superposition_tokens(self):
        st = prepare_initial_state("X+X-", 2)
        # kron of (1,1)/sqrt2 and (1,-1)/sqrt2
        np.testing.assert_allclose(st.data, np.array([1, -1, 1, -1]) / 2.0)

    def test_sector_state(self):
        b = build_sector_basis(5, 1)
        st = prepare_initial_state("00100", 5, basis=b)
        assert st.dim == 5
        np.testing.assert_allclose(st.data, [0, 0, 1, 0, 0])

    def test_spec_errors(self):
        with pytest.raises(StateSpecError):
            prepare_initial_state("10X", 3)  # dangling X
        with pytest.raises(StateSpecError):
            prepare_initial_state("1002", 4)
        with pytest.raises(StateSpecError):
            prepare_initial_state("10", 3)
        b = build_sector_basis(3, 1)
        with pytest.raises(StateSpecError):
            prepare_initial_state("X+00", 3, basis=b)
        with pytest.raises(StateSpecError):
            prepare_initial_state("110", 3, basis=b)  # sector holds 1 excitation

    def test_embed_in_full(self):
        b = build_sector_basis(4, 2)
        rng = np.random.default_rng(3)
        st = _random_state(b.dim, rng, b.tag)
        full = embed_in_full(st, b)
        assert full.dim == 16
        for i, occ in enumerate(b.states):
            assert full.data[full_index(occ)] == st.data[i]
        assert np.linalg.norm(full.data) == pytest.approx(1.0)


class TestQuantumState:
    def test_norm_validation(self):
        with pytest.raises(DomainError):
            QuantumState(np.array([1.0, 1.0]), "full:n=1")

    def test_density_validation(self):
        with pytest.raises(DomainError):
            QuantumState(np.eye(2), "full:n=1")  # trace 2
        bad = np.array([[0.5, 0.5j], [0.5j, 0.5]])
        with pytest.raises(DomainError):
            QuantumState(bad, "full:n=1")  # not Hermitian

    def test_to_density(self):
        st = prepare_initial_state("X+0", 2)
        rho = st.to_density()
        assert rho.is_density
        np.testing.assert_allclose(rho.data, np.outer(st.data, st.data.conj()))
        assert np.trace(rho.data) == pytest.approx(1.0)


class TestUnitaryEvolution:
    def test_matches_expm_oracle(self):
        """Seeded random Hamiltonians against scipy's expm."""
        rng = np.random.default_rng(7)
        for dim in (2, 5, 8, 16):
            h = _random_hermitian_op(dim, rng, "full:n=4")
            st = _random_state(dim, rng, "full:n=4")
            times = np.sort(rng.uniform(0, 20, size=6))
            amps = evolve_unitary(h, st, times)
            hd = h.todense()
            for k, t in enumerate(times):
                ref = scipy.linalg.expm(-1j * hd * t) @ st.data
                np.testing.assert_allclose(amps[k], ref, atol=1e-10)

    def test_paper_device_against_expm(self):
        # the documented reference point: F = 0, |10000>, t = 100 ns
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("10000", 5)
        got = evolve_unitary(h, st, [100.0])[0]
        ref = scipy.linalg.expm(-1j * h.todense() * 100.0) @ st.data
        assert np.linalg.norm(got - ref) < 1e-8

    def test_krylov_matches_eigh(self):
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(-15.0))
        st = prepare_initial_state("10000", 5)
        times = np.linspace(0, 120, 13)
        a_eigh = evolve_unitary(h, st, times, method="eigh")
        a_kry = evolve_unitary(h, st, times, method="krylov")
        np.testing.assert_allclose(a_kry, a_eigh, atol=1e-9)

    def test_two_site_swap(self):
        # P2(t) = sin^2(g t), full population transfer at t = pi / 2g
        g_mhz = 14.60
        dev = DeviceParams.uniform(2, coupling_mhz=g_mhz)
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("10", 2)
        g = g_mhz * ANGULAR_PER_MHZ
        t_swap = np.pi / (2 * g)
        times = np.linspace(0, 2 * t_swap, 41)
        amps = evolve_unitary(h, st, times)
        p2 = np.abs(amps[:, full_index((0, 1))]) ** 2
        np.testing.assert_allclose(p2, np.sin(g * times) ** 2, atol=1e-10)

    def test_norm_conserved(self):
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(-15.0))
        st = prepare_initial_state("X+X+000", 5)
        amps = evolve_unitary(h, st, np.linspace(0, 300, 151))
        norms = np.linalg.norm(amps, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)

    def test_argument_validation(self):
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("10000", 5)
        with pytest.raises(DomainError):
            evolve_unitary(h, st.to_density(), [0.0])
        with pytest.raises(DomainError):
            evolve_unitary(h, st, [0.0], method="magic")
        b = build_sector_basis(5, 1)
        st_sec = prepare_initial_state("10000", 5, basis=b)
        with pytest.raises(DomainError):
            evolve_unitary(h, st_sec, [0.0])  # tag mismatch
        with pytest.raises(DomainError):
            evolve_unitary(h, st, [-1.0], method="krylov")


class TestCollapseOps:
    def test_as_given_counts(self):
        ops = make_collapse_ops(paper_device())
        # one relaxation and one dephasing operator per qubit
        assert len(ops.operators) == 10
        assert ops.basis_tag == "full:n=5"

    def test_pure_dephasing_drops_zero_rates(self):
        # T2* = 2 T1 is the relaxation-limited line: pure rate is exactly 0
        dev = DeviceParams.uniform(3, coupling_mhz=5.0, t1_us=10.0, t2star_us=20.0)
        ops = make_collapse_ops(dev, dephasing="pure")
        assert len(ops.operators) == 3
        with pytest.raises(DomainError):
            make_collapse_ops(dev, dephasing="partial")

    def test_rates(self):
        dev = DeviceParams.uniform(2, coupling_mhz=5.0, t1_us=17.0, t2star_us=2.0)
        ops = make_collapse_ops(dev)
        relax = ops.operators[0].todense()
        # sqrt(1/T1) in 1/ns on the site-1 sigma-minus block
        gamma = np.sqrt(1.0 / 17000.0)
        assert abs(relax).max() == pytest.approx(gamma)


class TestLindblad:
    def test_amplitude_damping_closed_form(self):
        # decoupled chain: <n_1>(t) = exp(-t / T1); coarse step is plenty for
        # RK4 here (dt/T1 ~ 6e-4)
        dev = DeviceParams.uniform(2, coupling_mhz=0.0, t1_us=17.0, t2star_us=1e6)
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("10", 2)
        col = make_collapse_ops(dev)
        times = np.array([0.0, 1000.0, 5000.0, 17000.0])
        rhos = evolve_lindblad(h, st, times, col, step=10.0)
        n1 = build_observable("density", 1, dev).todense()
        got = [np.trace(r @ n1).real for r in rhos]
        np.testing.assert_allclose(got, np.exp(-times / 17000.0), atol=1e-8)

    def test_coherence_decay_rate(self):
        # as-given dephasing: rho_01 decays at 1/(2 T1) + 1/(2 T2*)
        dev = DeviceParams.uniform(2, coupling_mhz=0.0, t1_us=17.0, t2star_us=2.0)
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("X+0", 2)
        col = make_collapse_ops(dev)
        t = 800.0
        rho = evolve_lindblad(h, st, [t], col, step=0.5)[0]
        # read the coherence entry rho_{10,00} directly
        i10, i00 = full_index((1, 0)), full_index((0, 0))
        rate = 0.5 / 17000.0 + 0.5 / 2000.0
        assert rho[i10, i00].real == pytest.approx(0.5 * np.exp(-rate * t), rel=1e-5)

    def test_trace_and_hermiticity(self):
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(-15.0))
        st = prepare_initial_state("10000", 5)
        col = make_collapse_ops(dev)
        times = np.linspace(0, 300, 7)
        rhos = evolve_lindblad(h, st, times, col, step=0.05)
        for r in rhos:
            assert abs(np.trace(r).real - 1.0) < 1e-8
            assert np.max(np.abs(r - r.conj().T)) < 1e-10
            assert np.linalg.eigvalsh(r)[0] > -1e-6

    def test_reduces_to_unitary_without_noise(self):
        dev = paper_device().replace(t1_us=np.full(5, 1e12), t2star_us=np.full(5, 1e12))
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(-15.0))
        st = prepare_initial_state("10000", 5)
        col = make_collapse_ops(dev)
        times = np.array([0.0, 40.0, 80.0])
        rhos = evolve_lindblad(h, st, times, col, step=0.05)
        amps = evolve_unitary(h, st, times)
        for r, v in zip(rhos, amps):
            np.testing.assert_allclose(r, np.outer(v, v.conj()), atol=1e-7)

    def test_argument_validation(self):
        dev = paper_device()
        h = build_xy_hamiltonian(dev, PotentialSpec.linear(0.0))
        st = prepare_initial_state("10000", 5)
        col = make_collapse_ops(dev)
        with pytest.raises(DomainError):
            evolve_lindblad(h, st, [0.0], col, step=0.0)
        with pytest.raises(DomainError):
            evolve_lindblad(h, st, [-5.0], col)
