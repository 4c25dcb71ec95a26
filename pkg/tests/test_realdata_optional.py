"""Optional integration check against published outlier-screen tables.

The reference datasets (Airway RNA-seq counts; the two Sialin microarray
sets; the Khan training set; the Tissue set) are not shipped.  Point
``DEPTHNORM_REALDATA_DIR`` at a directory containing any of

    airway.csv  sialin_6h.csv  sialin_18d.csv  khan.csv  tissue.csv

(features x samples, optional header row) and this module checks that
the computed "distance intra-pair" rows match the published values to 4
significant figures.  Distances are computed on the raw sorted columns;
the airway counts are first filtered to rows with at most one zero.
Benchmarks are Monte-Carlo quantities and are not asserted here.
"""

import os
from pathlib import Path

import pytest

from depthnorm import (
    TukeyCalibration,
    column_sort,
    detect_outliers,
    filter_zero_rows,
    load_matrix,
)

DATA_DIR = os.environ.get("DEPTHNORM_REALDATA_DIR")

# filename -> (published leading intra-pair distances, zero-row budget)
PUBLISHED = {
    "airway.csv": ([484974.7, 471420.6, 346877.9, 242326.0], 1),
    "sialin_6h.csv": ([68.1, 58.1, 54.5, 51.1], None),
    "sialin_18d.csv": ([69.3, 66.5, 66.0, 61.1], None),
    "khan.csv": ([55.3, 54.3, 53.9, 52.1, 50.7, 50.2, 49.6, 48.4], None),
    "tissue.csv": ([38.7, 34.6, 32.3, 31.7, 30.5, 30.4, 29.6, 29.5], None),
}

pytestmark = pytest.mark.skipif(
    DATA_DIR is None, reason="set DEPTHNORM_REALDATA_DIR to run the real-data checks"
)


@pytest.mark.parametrize("filename", sorted(PUBLISHED))
def test_published_intra_pair_distances(filename):
    path = Path(DATA_DIR) / filename
    if not path.exists():
        pytest.skip(f"{filename} not provided")
    expected, max_zeros = PUBLISHED[filename]
    m = load_matrix(path)
    if max_zeros is not None:
        m = filter_zero_rows(m, max_zeros)
    (report,) = detect_outliers(column_sort(m), TukeyCalibration.fixed(1.0))
    got = [b.distance for b in report.pairs[: len(expected)]]
    assert got == pytest.approx(expected, rel=5e-4)
