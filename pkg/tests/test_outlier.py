import numpy as np
import pytest

from depthnorm import (
    ClassPartition,
    DegenerateScaleError,
    DomainError,
    ExpressionMatrix,
    TukeyCalibration,
    calibrate_g,
    column_sort,
    detect_outliers,
    extract_borders,
    pairwise_distances,
    robust_covariance,
    robust_iqr,
)
from depthnorm.outlier import format_report_table, reports_to_json, save_report_csv

from oracles import hinge_iqr, tukey_fence_flags_extremes

TEN_POINT_SAMPLE = [1.3, 2.1, 2.8, 2.9, 3.2, 3.9, 4.1, 4.8, 4.9, 5.3]


def scalar_matrix(points):
    return ExpressionMatrix(np.array([points], dtype=float), sorted_flag=True)


def borders_of(points):
    return extract_borders(pairwise_distances(scalar_matrix(points)))


class TestRobustIqr:
    def test_worked_sample_equals_two(self):
        assert robust_iqr(borders_of(TEN_POINT_SAMPLE)) == 2.0

    def test_two_columns(self):
        assert robust_iqr(borders_of([1.0, 4.5])) == 3.5

    def test_odd_sample_includes_singleton_zero(self):
        assert robust_iqr(borders_of([0.0, 1.0, 10.0])) == 5.0

    def test_matches_fourth_spread_on_scalar_samples(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            x = rng.normal(size=int(rng.integers(2, 40)))
            assert robust_iqr(borders_of(list(x))) == pytest.approx(hinge_iqr(x), rel=1e-12)


class TestCalibration:
    def test_single_replicate_is_its_own_median(self):
        cal = calibrate_g(6, 40, np.eye(6), target_rate=0.01, replicates=1, seed=4)
        assert cal.g_factor == cal.per_replicate_quantiles[0]

    def test_target_rate_near_one_flags_everything(self):
        cal = calibrate_g(12, 60, np.eye(12), target_rate=0.999999, replicates=5, seed=4)
        assert cal.g_factor <= 1.0

    def test_deterministic_and_thread_invariant(self):
        kw = dict(target_rate=1e-4, replicates=12, seed=11)
        a = calibrate_g(8, 100, np.eye(8), **kw)
        b = calibrate_g(8, 100, np.eye(8), **kw)
        c = calibrate_g(8, 100, np.eye(8), threads=4, **kw)
        assert a == b == c
        assert a != calibrate_g(8, 100, np.eye(8), target_rate=1e-4, replicates=12, seed=12)

    def test_json_roundtrip(self):
        cal = calibrate_g(6, 30, np.eye(6), replicates=3, seed=1)
        assert TukeyCalibration.from_json(cal.to_json()) == cal

    def test_validates_inputs(self):
        with pytest.raises(DomainError):
            calibrate_g(6, 30, np.eye(6), target_rate=0.0)
        with pytest.raises(DomainError):
            calibrate_g(6, 30, np.eye(6), replicates=0)

    def test_non_psd_covariance_is_repaired(self):
        cov = np.eye(5)
        cov[0, 1] = cov[1, 0] = 0.999
        cov[1, 2] = cov[2, 1] = 0.999
        cov[0, 2] = cov[2, 0] = -0.9  # jointly infeasible: repair kicks in
        cal = calibrate_g(5, 50, cov, replicates=2, seed=0)
        assert np.isfinite(cal.g_factor)


class TestRobustCovariance:
    def test_identical_columns_have_unit_correlation(self):
        rng = np.random.default_rng(2)
        col = rng.normal(size=50)
        m = ExpressionMatrix(np.column_stack([col, col, rng.normal(size=50)]))
        cov = robust_covariance(m)
        corr = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
        assert corr == pytest.approx(1.0, abs=1e-9)

    def test_negated_column_has_minus_one_correlation(self):
        rng = np.random.default_rng(3)
        col = rng.normal(size=50)
        m = ExpressionMatrix(np.column_stack([col, -col, rng.normal(size=50)]))
        cov = robust_covariance(m)
        corr = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
        # PSD repair may nudge the assembled matrix slightly
        assert corr == pytest.approx(-1.0, abs=1e-6)

    def test_independent_standard_normals(self):
        rng = np.random.default_rng(4)
        m = ExpressionMatrix(rng.standard_normal((10_000, 4)))
        cov = robust_covariance(m)
        off = cov[~np.eye(4, dtype=bool)]
        assert (np.abs(off) < 0.05).all()
        assert np.allclose(np.diag(cov), 1.0, atol=0.1)

    def test_constant_column_rejected(self):
        m = ExpressionMatrix(np.column_stack([np.ones(10), np.arange(10.0)]))
        with pytest.raises(DegenerateScaleError, match="1"):
            robust_covariance(m)

    def test_result_is_psd(self):
        rng = np.random.default_rng(5)
        m = ExpressionMatrix(rng.normal(size=(30, 6)))
        w = np.linalg.eigvalsh(robust_covariance(m))
        assert w.min() >= -1e-10


class TestDetectOutliers:
    def test_benchmark_above_max_distance_flags_nothing(self):
        m = scalar_matrix(TEN_POINT_SAMPLE)
        cal = TukeyCalibration.fixed(2.05)  # benchmark 4.1 vs max distance 4
        (report,) = detect_outliers(m, cal)
        assert report.benchmark == pytest.approx(4.1)
        assert report.flagged_pairs == ()
        assert report.flagged_samples == ()

    def test_extreme_pair_flagged_and_farther_member_chosen(self):
        m = scalar_matrix(TEN_POINT_SAMPLE)
        cal = TukeyCalibration.fixed(1.95)  # benchmark 3.9 < 4
        (report,) = detect_outliers(m, cal)
        assert len(report.flagged_pairs) == 1
        assert report.flagged_pairs[0].members == (0, 9)
        # deepest border is (3.2, 3.9); its average 3.55 sits closer to 5.3
        (flag,) = report.flagged_samples
        assert flag.sample_id == "1"
        assert flag.rule == "farther-from-deepest"

    def test_huge_factor_flags_nothing(self):
        m = scalar_matrix(TEN_POINT_SAMPLE)
        (report,) = detect_outliers(m, TukeyCalibration.fixed(1e9))
        assert report.flagged_samples == ()

    def test_flag_both_members(self):
        m = scalar_matrix(TEN_POINT_SAMPLE)
        (report,) = detect_outliers(m, TukeyCalibration.fixed(1.95), flag_both=True)
        assert [f.sample_id for f in report.flagged_samples] == ["1", "10"]

    def test_requires_sorted_columns(self):
        m = ExpressionMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        with pytest.raises(DomainError):
            detect_outliers(m, TukeyCalibration.fixed(1.5))

    def test_flagged_pairs_form_a_prefix_and_shrink_with_g(self):
        rng = np.random.default_rng(10)
        m = column_sort(ExpressionMatrix(rng.normal(size=(30, 11))))
        flagged_counts = []
        for g in (0.5, 1.0, 1.5, 2.5):
            (report,) = detect_outliers(m, TukeyCalibration.fixed(g))
            k = len(report.flagged_pairs)
            flagged_counts.append(k)
            assert report.flagged_pairs == report.pairs[:k]
            if k < len(report.pairs):
                assert not report.pairs[k].distance > report.benchmark
        assert flagged_counts == sorted(flagged_counts, reverse=True)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(12)
        m = column_sort(ExpressionMatrix(rng.normal(size=(25, 9))))
        cal = TukeyCalibration.fixed(1.2)
        (base,) = detect_outliers(m, cal)
        scaled_m = column_sort(ExpressionMatrix(7.5 * m.values))
        (scaled,) = detect_outliers(scaled_m, cal)
        assert scaled.iqr_estimate == pytest.approx(7.5 * base.iqr_estimate, rel=1e-12)
        assert [f.sample_id for f in scaled.flagged_samples] == [
            f.sample_id for f in base.flagged_samples
        ]

    def test_per_class_scope(self):
        rng = np.random.default_rng(14)
        vals = rng.normal(size=(20, 8))
        vals[:, 7] += 40.0  # forced far-out column in class 2
        m = column_sort(ExpressionMatrix(vals))
        labels = ClassPartition((1, 1, 1, 1, 2, 2, 2, 2))
        reports = detect_outliers(m, TukeyCalibration.fixed(1.2), scope="per_class", labels=labels)
        assert [r.scope for r in reports] == ["class 1", "class 2"]
        assert all(r.g_factor == 1.2 for r in reports)
        class2 = reports[1]
        assert "8" in [f.sample_id for f in class2.flagged_samples]

    def test_per_class_requires_labels(self):
        m = column_sort(ExpressionMatrix(np.random.default_rng(0).normal(size=(5, 4))))
        with pytest.raises(DomainError):
            detect_outliers(m, TukeyCalibration.fixed(1.0), scope="per_class")


class TestFenceReduction:
    def test_pair_rule_matches_classic_fences_on_symmetric_samples(self):
        rng = np.random.default_rng(18)
        for g_factor in (1.2, 1.5, 2.0, 3.0):
            for _ in range(40):
                half = rng.uniform(0.1, 5.0, size=int(rng.integers(2, 12)))
                points = np.concatenate([-half, half])  # exactly symmetric about 0
                m = scalar_matrix(list(points))
                (report,) = detect_outliers(m, TukeyCalibration.fixed(g_factor))
                ours = len(report.flagged_pairs) >= 1
                oracle = tukey_fence_flags_extremes(points, (g_factor - 1) / 2)
                assert ours == oracle


class TestReportOutputs:
    def _report(self):
        (report,) = detect_outliers(scalar_matrix(TEN_POINT_SAMPLE), TukeyCalibration.fixed(1.95))
        return report

    def test_table_has_published_row_labels(self):
        text = format_report_table(self._report(), title="toy")
        for label in ("pairs of gene", "expressions", "distance intra-pair",
                      "outlier's benchmark", "Tukey's constant"):
            assert label in text

    def test_json_lists_flagged_samples(self):
        import json

        payload = json.loads(reports_to_json([self._report()]))
        assert payload["reports"][0]["flagged_samples"] == ["1"]
        assert payload["reports"][0]["scope"] == "global"

    def test_csv_has_one_row_per_pair(self, tmp_path):
        import csv

        path = tmp_path / "out.csv"
        save_report_csv([self._report()], path)
        rows = list(csv.DictReader(open(path)))
        assert len(rows) == 5
        assert rows[0]["flagged"] == "1" and rows[1]["flagged"] == "0"
        assert rows[0]["flagged_member"] == "1"
