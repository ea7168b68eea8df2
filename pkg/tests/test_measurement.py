"""Confusion matrices, shot sampling and grouped statistics."""

import numpy as np
import pytest

from starkchain import (
    ConfusionMatrix,
    DomainError,
    ShotRecord,
    StateSpecError,
    confusion_from_device,
    group_means,
    grouped_statistics,
    load_shots,
    paper_device,
    prepare_initial_state,
    readout_correct,
    sample_shots,
    save_shots,
)

PERFECT = [ConfusionMatrix.perfect()] * 5


class TestConfusionMatrix:
    def test_matrix_layout(self):
        c = ConfusionMatrix(f0=0.981, f1=0.853)
        m = c.matrix
        np.testing.assert_allclose(m, [[0.981, 0.147], [0.019, 0.853]])
        # column stochastic
        np.testing.assert_allclose(m.sum(axis=0), 1.0)

    def test_inverse_identity(self):
        c = ConfusionMatrix(f0=0.92, f1=0.87)
        np.testing.assert_allclose(c.inverse() @ c.matrix, np.eye(2), atol=1e-12)

    def test_singular(self):
        c = ConfusionMatrix(f0=0.3, f1=0.7)
        assert c.is_singular
        with pytest.raises(DomainError):
            c.inverse()

    def test_validation(self):
        with pytest.raises(DomainError):
            ConfusionMatrix(f0=1.2, f1=0.9)
        with pytest.raises(DomainError):
            ConfusionMatrix(f0=0.9, f1=-0.1)

    def test_from_device(self):
        cs = confusion_from_device(paper_device())
        assert len(cs) == 5
        assert cs[0].f0 == pytest.approx(0.981)
        assert cs[3].f1 == pytest.approx(0.859)


class TestShotRecord:
    def test_validation(self):
        with pytest.raises(DomainError):
            ShotRecord(bitstrings=("00", "01"), n_groups=1, seed=0, basis="ZQ")
        with pytest.raises(DomainError):
            ShotRecord(bitstrings=("001",), n_groups=1, seed=0, basis="ZZ")
        with pytest.raises(DomainError):
            ShotRecord(bitstrings=("0x",), n_groups=1, seed=0, basis="ZZ")
        with pytest.raises(DomainError):
            ShotRecord(bitstrings=("00",) * 5, n_groups=2, seed=0, basis="ZZ")

    def test_properties(self):
        r = ShotRecord(bitstrings=("010", "110", "000", "111"), n_groups=2,
                       seed=7, basis="ZXY")
        assert r.n_shots == 4
        assert r.n_qubits == 3
        np.testing.assert_array_equal(
            r.bit_array(), [[0, 1, 0], [1, 1, 0], [0, 0, 0], [1, 1, 1]])

    def test_save_load_roundtrip(self, tmp_path):
        r = ShotRecord(bitstrings=("01", "10", "11", "00"), n_groups=2,
                       seed=3, basis="XY")
        p = tmp_path / "shots.txt"
        save_shots(r, p)
        r2 = load_shots(p, n_groups=2, seed=3)
        assert r2.bitstrings == r.bitstrings
        assert r2.basis == "XY"
        assert r2.n_groups == 2

    def test_load_empty(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        with pytest.raises(DomainError):
            load_shots(p)


class TestSampling:
    def test_bit_exact_reproducibility(self):
        st = prepare_initial_state("X+10X-", 4)
        conf = confusion_from_device(paper_device())[:4]
        a = sample_shots(st, conf, "ZXZY", 200, seed=42, n_groups=2)
        b = sample_shots(st, conf, "ZXZY", 200, seed=42, n_groups=2)
        assert a.bitstrings == b.bitstrings
        c = sample_shots(st, conf, "ZXZY", 200, seed=43, n_groups=2)
        assert c.bitstrings != a.bitstrings

    def test_eigenstate_is_noiseless(self):
        # X+ measured along X reports the +1 outcome, bit 0, every shot
        st = prepare_initial_state("X+X+", 2)
        rec = sample_shots(st, [ConfusionMatrix.perfect()] * 2, "XX", 500, seed=1)
        assert set(rec.bitstrings) == {"00"}

    def test_computational_state(self):
        st = prepare_initial_state("10011", 5)
        rec = sample_shots(st, PERFECT, "ZZZZZ", 300, seed=5)
        assert set(rec.bitstrings) == {"10011"}

    def test_readout_infidelity_rate(self):
        # all-ones state: P(report 1 on qubit 1) = F1 = 0.853
        st = prepare_initial_state("11111", 5)
        conf = confusion_from_device(paper_device())
        n = 100_000
        rec = sample_shots(st, conf, "ZZZZZ", n, seed=11)
        bits = rec.bit_array()
        f1 = paper_device().readout_f1
        for q in range(5):
            p_hat = bits[:, q].mean()
            sigma = np.sqrt(f1[q] * (1 - f1[q]) / n)
            assert abs(p_hat - f1[q]) < 3 * sigma

    def test_born_rule_marginal(self):
        st = prepare_initial_state("X+0", 2)
        rec = sample_shots(st, [ConfusionMatrix.perfect()] * 2, "ZZ", 50_000, seed=9)
        p1 = rec.bit_array()[:, 0].mean()
        assert abs(p1 - 0.5) < 3 * np.sqrt(0.25 / 50_000)

    def test_state_tag_check(self):
        from starkchain import build_sector_basis
        b = build_sector_basis(3, 1)
        st = prepare_initial_state("100", 3, basis=b)
        with pytest.raises(StateSpecError):
            sample_shots(st, [ConfusionMatrix.perfect()] * 3, "ZZZ", 10, seed=0)

    def test_argument_checks(self):
        st = prepare_initial_state("00", 2)
        with pytest.raises(DomainError):
            sample_shots(st, [ConfusionMatrix.perfect()] * 2, "ZW", 10, seed=0)
        with pytest.raises(DomainError):
            sample_shots(st, [ConfusionMatrix.perfect()], "ZZ", 10, seed=0)
        with pytest.raises(DomainError):
            sample_shots(st, [ConfusionMatrix.perfect()] * 2, "ZZ", 0, seed=0)


class TestEstimators:
    def test_site_density(self):
        r = ShotRecord(bitstrings=("10", "10", "00", "10"), n_groups=2,
                       seed=0, basis="ZZ")
        means = group_means(r, "P1")
        np.testing.assert_allclose(means, [1.0, 0.5])
        grand, spread = grouped_statistics(r, "P1")
        assert grand == pytest.approx(0.75)
        assert spread == pytest.approx(np.std([1.0, 0.5], ddof=1))

    def test_pauli_pair_values(self):
        # (1-2b_i)(1-2b_j) per shot
        r = ShotRecord(bitstrings=("10", "01", "00", "11"), n_groups=1,
                       seed=0, basis="XX")
        means = group_means(r, "XX1")
        np.testing.assert_allclose(means, [(-1 - 1 + 1 + 1) / 4.0])

    def test_basis_mismatch(self):
        r = ShotRecord(bitstrings=("00",), n_groups=1, seed=0, basis="XY")
        with pytest.raises(DomainError):
            group_means(r, "XX1")
        # matching mixed-basis estimator works
        assert group_means(r, "XY1")[0] == pytest.approx(1.0)

    def test_unknown_estimator(self):
        r = ShotRecord(bitstrings=("00",), n_groups=1, seed=0, basis="ZZ")
        with pytest.raises(DomainError):
            group_means(r, "Q1")
        with pytest.raises(DomainError):
            group_means(r, "P3")
        with pytest.raises(DomainError):
            group_means(r, "ZZ2")

    def test_single_group_spread_is_zero(self):
        r = ShotRecord(bitstrings=("10", "00"), n_groups=1, seed=0, basis="ZZ")
        _, spread = grouped_statistics(r, "P1")
        assert spread == 0.0

    def test_group_spread_binomial_scale(self):
        """6 groups x 100 shots of a fair coin: the group spread statistic
        averages to sqrt(p(1-p)/100) ~ 0.05 over many seeds."""
        st = prepare_initial_state("X+0", 2)
        conf = [ConfusionMatrix.perfect()] * 2
        spreads = []
        for seed in range(100):
            rec = sample_shots(st, conf, "ZZ", 600, seed=seed, n_groups=6)
            spreads.append(grouped_statistics(rec, "P1")[1])
        mean_spread = np.mean(spreads)
        assert 0.025 < mean_spread < 0.1


class TestReadoutCorrection:
    def test_marginal_roundtrip(self):
        conf = confusion_from_device(paper_device())
        rng = np.random.default_rng(31)
        p_true = rng.uniform(0, 1, size=5)
        p_rep = np.array([
            (1 - c.f0) * (1 - p) + c.f1 * p for c, p in zip(conf, p_true)
        ])
        np.testing.assert_allclose(readout_correct(p_rep, conf), p_true, atol=1e-12)

    def test_histogram_roundtrip(self):
        conf = confusion_from_device(paper_device())[:2]
        rng = np.random.default_rng(37)
        h_true = rng.uniform(0, 1, size=4)
        h_true /= h_true.sum()
        fwd = np.kron(conf[0].matrix, conf[1].matrix)
        h_rep = fwd @ h_true
        np.testing.assert_allclose(readout_correct(h_rep, conf), h_true, atol=1e-12)

    def test_clamping(self):
        conf = [ConfusionMatrix(f0=0.9, f1=0.9)]
        # reported marginal below the achievable floor maps to a clamped 0
        assert readout_correct(np.array([0.0]), conf)[0] == 0.0

    def test_shape_error(self):
        conf = confusion_from_device(paper_device())
        with pytest.raises(DomainError):
            readout_correct(np.zeros(7), conf)

    def test_corrected_group_means(self):
        # noisy sampling + histogram inversion recovers the ideal density
        st = prepare_initial_state("11111", 5)
        conf = confusion_from_device(paper_device())
        rec = sample_shots(st, conf, "ZZZZZ", 60_000, seed=13, n_groups=6)
        grand, _ = grouped_statistics(rec, "P4", confusion=conf)
        assert abs(grand - 1.0) < 0.01
