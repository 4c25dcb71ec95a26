import numpy as np
import pytest

from depthnorm import (
    ALL_METHODS,
    METHOD_FDN_BW,
    METHOD_FDN_MP,
    METHOD_RMA,
    DimensionError,
    DomainError,
    SimulationConfig,
    StudyReport,
    generate_dataset,
    run_grid,
    run_study,
)

TINY = SimulationConfig(
    n_samples=8, n_genes=40, probes_per_gene=3, affected_genes=8,
    delta=2.0, n_datasets=3, seed=5,
)


class TestConfigValidation:
    def test_odd_sample_count_rejected(self):
        with pytest.raises(DimensionError):
            SimulationConfig(n_samples=11)

    def test_affected_bounded_by_genes(self):
        with pytest.raises(DomainError):
            SimulationConfig(n_genes=10, affected_genes=11)

    def test_floor_positive(self):
        with pytest.raises(DomainError):
            SimulationConfig(negative_floor=0.0)


class TestGenerateDataset:
    def test_truth_marks_exactly_the_affected_genes(self):
        pm, truth = generate_dataset(TINY, 0)
        assert truth.sum() == TINY.affected_genes
        assert truth[: TINY.affected_genes].all()
        assert pm.values.shape == (TINY.n_genes * TINY.probes_per_gene, TINY.n_samples)

    def test_values_stay_positive(self):
        pm, _ = generate_dataset(TINY, 1)
        assert (pm.values > 0).all()

    def test_deterministic_per_dataset_seed(self):
        a, _ = generate_dataset(TINY, 2)
        b, _ = generate_dataset(TINY, 2)
        c, _ = generate_dataset(TINY, 3)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_deltas_share_their_noise(self):
        from dataclasses import replace

        base, _ = generate_dataset(replace(TINY, delta=0.0), 4)
        shifted, _ = generate_dataset(replace(TINY, delta=1.0), 4)
        untouched = slice(TINY.affected_genes * TINY.probes_per_gene, None)
        assert np.array_equal(base.values[untouched], shifted.values[untouched])

    def test_zero_distortion_keeps_samples_on_one_scale(self):
        from dataclasses import replace

        cfg = replace(TINY, distortion_range=(0.0, 0.0), delta=0.0, n_genes=400, affected_genes=0)
        pm, _ = generate_dataset(cfg, 0)
        medians = np.median(pm.values, axis=0)
        assert medians.max() / medians.min() < 1.2

    def test_heavy_tail_moments_before_distortion(self):
        from dataclasses import replace

        cfg = replace(
            TINY, n_genes=1000, probes_per_gene=11, n_samples=12,
            df=10.0, delta=0.0, affected_genes=0,
            base_power=1.0, distortion_range=(0.0, 0.0),
        )
        pm, _ = generate_dataset(cfg, 0)
        assert pm.values.mean() == pytest.approx(3.0, abs=0.02)
        assert pm.values.var() == pytest.approx(10.0 / 8.0, abs=0.08)


class TestRunStudy:
    def test_report_shape_single_method(self):
        report = run_study(TINY, methods=[METHOD_RMA])
        assert [r.method for r in report.rows] == [METHOD_RMA]
        row = report.rows[0]
        assert row.df == TINY.df and row.delta == TINY.delta
        assert 0.0 <= row.power <= 100.0
        assert 0.0 <= row.false_discoveries <= TINY.n_genes - TINY.affected_genes

    def test_all_methods_present(self):
        report = run_study(TINY)
        assert [r.method for r in report.rows] == list(ALL_METHODS)

    def test_threaded_run_matches_sequential(self):
        seq = run_study(TINY)
        par = run_study(TINY, threads=4)
        assert seq == par

    def test_empty_or_unknown_methods_rejected(self):
        with pytest.raises(DomainError):
            run_study(TINY, methods=[])
        with pytest.raises(DomainError):
            run_study(TINY, methods=["fdn"])

    def test_power_grows_with_the_shift(self):
        from dataclasses import replace

        weak = run_study(replace(TINY, delta=0.0), methods=[METHOD_RMA, METHOD_FDN_MP])
        strong = run_study(replace(TINY, delta=4.0), methods=[METHOD_RMA, METHOD_FDN_MP])
        for method in (METHOD_RMA, METHOD_FDN_MP):
            lo = weak.cell(TINY.df, 0.0, method).power
            hi = strong.cell(TINY.df, 4.0, method).power
            assert hi > 60.0 > lo + 40.0


class TestStudyReport:
    def test_grid_and_csv_roundtrip(self, tmp_path):
        report = run_grid(TINY, dfs=[10.0], deltas=[0.0, 2.0], methods=[METHOD_RMA, METHOD_FDN_BW])
        assert len(report.rows) == 4
        path = tmp_path / "study.csv"
        report.to_csv(path)
        back = StudyReport.from_csv(path)
        assert back == report

    def test_cell_lookup(self):
        report = run_study(TINY, methods=[METHOD_FDN_MP])
        row = report.cell(TINY.df, TINY.delta, METHOD_FDN_MP)
        assert row.method == METHOD_FDN_MP
        with pytest.raises(KeyError):
            report.cell(1.0, 9.9, METHOD_FDN_MP)

    def test_table_rendering(self):
        report = run_study(TINY)
        text = report.format_table()
        assert "Power" in text and "False Discovery" in text
        assert "M-Estimator FDN" in text and "Median Polish FDN" in text

    def test_bitwise_reproducibility(self):
        a = run_study(TINY).to_csv()
        b = run_study(TINY, threads=3).to_csv()
        assert a == b
