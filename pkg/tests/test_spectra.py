"""Tests for determinant and permanent spectra.

CRITICAL: TEST INTEGRITY DIRECTIVE
NEVER remove, disable, or work around a failing test without explicit user review and approval.
When a test fails:
1. STOP - Do not proceed with implementation
2. ANALYZE - Understand why the test is failing
3. DISCUSS - Present the failure to the user
4. WAIT - Get explicit user approval before modifying tests
"""

from io import StringIO

import pytest
from fp_spectra.config import get_settings
from fp_spectra.errors import DimensionOutOfRangeError, EmptySetError
from fp_spectra.field import make_field
from fp_spectra.fset import FpSet, set_dilate
from fp_spectra.oracles import (
    brute_force_counts,
    brute_force_diff_values,
    permutation_det,
    permutation_per,
)
from fp_spectra.rng import Xorshift64Star
from fp_spectra.setexpr import evaluate
from fp_spectra.spectra import (
    MatrixView,
    det_mod,
    det_spectrum,
    det_value,
    diff_det_spectrum_f2,
    diff_per_spectrum_g2,
    distribution_report,
    per_ryser,
    per_spectrum,
    per_value,
)
from loguru import logger


@pytest.fixture(autouse=True)
def clear_settings_cache(monkeypatch, tmp_path):
    """Run with default settings regardless of the caller's environment."""
    for name in ("SPECTRA_WORKERS", "SPECTRA_BUDGET", "SPECTRA_SEED", "SPECTRA_SAMPLE_PREFIX_CAP"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def fset(p, xs):
    return FpSet.from_residues(make_field(p), xs)


def random_matrix(rng, d, p):
    return [[rng.below(p) for _ in range(d)] for _ in range(d)]


class TestMatrixValues:
    """Tests for det_value() and per_value()."""

    def test_det_identity(self):
        """Test that the 3 x 3 identity has determinant 1."""
        m = MatrixView.from_rows(make_field(7), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert det_value(m) == 1

    def test_det_equal_rows(self):
        """Test that a matrix with equal rows has determinant 0."""
        assert det_value(MatrixView.from_rows(make_field(5), [[1, 1], [1, 1]])) == 0

    def test_det_two_by_two(self):
        """Test det [[1,2],[3,4]] = -2 = 5 over F_7."""
        assert det_value(MatrixView.from_rows(make_field(7), [[1, 2], [3, 4]])) == 5

    def test_per_all_ones(self):
        """Test per [[1,1],[1,1]] = 2 over F_5."""
        assert per_value(MatrixView.from_rows(make_field(5), [[1, 1], [1, 1]])) == 2

    def test_per_two_by_two(self):
        """Test per [[1,2],[3,4]] = 10 over F_11."""
        assert per_value(MatrixView.from_rows(make_field(11), [[1, 2], [3, 4]])) == 10

    def test_per_identity(self):
        """Test that the 4 x 4 identity has permanent 1."""
        rows = [[int(i == j) for j in range(4)] for i in range(4)]
        assert per_value(MatrixView.from_rows(make_field(7), rows)) == 1

    def test_kernels_match_permutation_sums(self):
        """Test elimination and Ryser against permutation sums on random matrices."""
        rng = Xorshift64Star(11)
        for d in range(2, 6):
            for _ in range(20):
                rows = random_matrix(rng, d, 13)
                assert det_mod(rows, 13) == permutation_det(rows, 13)
                assert per_ryser(rows, 13) == permutation_per(rows, 13)

    def test_matrix_view_validation(self):
        """Test that bad shapes, entries and dimensions are rejected."""
        F = make_field(7)
        with pytest.raises(ValueError, match="needs 4 entries"):
            MatrixView(2, (1, 2, 3), F)
        with pytest.raises(ValueError, match="must be residues"):
            MatrixView(2, (1, 2, 3, 7), F)
        with pytest.raises(DimensionOutOfRangeError):
            MatrixView(1, (1,), F)
        with pytest.raises(DimensionOutOfRangeError):
            MatrixView(9, tuple([0] * 81), F)

    def test_rows_property(self):
        """Test that from_rows reduces entries and rows reproduces them."""
        m = MatrixView.from_rows(make_field(7), [[8, 2], [-1, 4]])
        assert m.rows == [[1, 2], [6, 4]]


class TestDetSpectrum:
    """Tests for det_spectrum()."""

    def test_zero_one_two_by_two(self):
        """Test X_2({0,1}) in F_5 is {0,1,4} with counts 10, 3, 3."""
        result = det_spectrum(fset(5, [0, 1]), 2, want_counts=True)

        assert result.values.elements == (0, 1, 4)
        assert result.cardinality == 3
        assert result.counts == {0: 10, 1: 3, 4: 3}
        assert result.exact
        assert result.matrices_enumerated == 16
        assert not result.saturated

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_singleton_spectrum_is_zero(self, d):
        """Test that matrices with all entries equal have determinant 0."""
        assert det_spectrum(fset(11, [3]), d).values.elements == (0,)

    def test_zero_one_three_by_three(self):
        """Test X_3({0,1}) in F_5 is all of F_5 (0/1 determinants span -2..2)."""
        result = det_spectrum(fset(5, [0, 1]), 3, want_counts=True)
        assert result.values.elements == (0, 1, 2, 3, 4)
        assert result.matrices_enumerated == 512
        assert sum(result.counts.values()) == 512

    def test_two_by_two_matches_product_difference_set(self):
        """Test X_2(A) = AA - AA for A = {1,2} in F_7."""
        A = fset(7, [1, 2])
        result = det_spectrum(A, 2)
        assert result.cardinality == 7
        assert result.values == evaluate("A*A - A*A", {"A": A})

    @pytest.mark.parametrize(
        ("p", "elements", "d"),
        [(7, [1, 2, 3], 2), (5, [0, 1], 3), (7, [0, 3], 3), (11, [2, 5, 9], 2)],
    )
    def test_counts_match_brute_force(self, p, elements, d):
        """Test D_d(A, t) against direct enumeration of every matrix."""
        result = det_spectrum(fset(p, elements), d, want_counts=True)
        expected = brute_force_counts(elements, d, p, "det")
        assert result.counts == dict(expected)
        assert set(result.values) == set(expected)

    def test_transpose_invariance(self):
        """Test that counting transposed matrices gives the same distribution."""
        result = det_spectrum(fset(7, [0, 3]), 3, want_counts=True)
        assert result.counts == dict(brute_force_counts([0, 3], 3, 7, "det", transpose=True))

    def test_worker_count_does_not_change_result(self):
        """Test that values and counts are identical for 1 and 2 workers."""
        A = fset(13, [1, 4, 6])
        serial = det_spectrum(A, 3, want_counts=True, workers=1)
        parallel = det_spectrum(A, 3, want_counts=True, workers=2)
        assert serial.values == parallel.values
        assert serial.counts == parallel.counts

    @pytest.mark.parametrize("d", [1, 9])
    def test_dimension_out_of_range(self, d):
        """Test that d outside [2, 8] raises DimensionOutOfRangeError."""
        with pytest.raises(DimensionOutOfRangeError):
            det_spectrum(fset(5, [1]), d)

    def test_empty_set_raises(self):
        """Test that the empty entry set raises EmptySetError."""
        with pytest.raises(EmptySetError):
            det_spectrum(FpSet.empty(make_field(5)), 2)

    def test_to_dict(self):
        """Test the JSON-ready summary."""
        data = det_spectrum(fset(5, [0, 1]), 2, want_counts=True).to_dict()
        assert data["kind"] == "det"
        assert data["p"] == 5
        assert data["values"] == [0, 1, 4]
        assert data["counts"] == {"0": 10, "1": 3, "4": 3}
        assert data["exact"] is True


class TestSampling:
    """Tests for the over-budget sampling mode."""

    def test_over_budget_is_lower_bound(self):
        """Test that sampled values are a subset of the exact spectrum."""
        A = fset(7, [0, 1, 2])
        exact = det_spectrum(A, 3)
        sampled = det_spectrum(A, 3, budget=1000, seed=5)

        assert exact.exact
        assert not sampled.exact
        assert sampled.values.issubset(exact.values)
        # 1000 // 3**3 prefixes, each with all 27 last rows
        assert sampled.matrices_enumerated == 37 * 27

    def test_sampling_is_reproducible(self):
        """Test that the same seed gives the same sampled counts."""
        A = fset(11, [1, 2, 5])
        first = det_spectrum(A, 3, want_counts=True, budget=2000, seed=9)
        second = det_spectrum(A, 3, want_counts=True, budget=2000, seed=9)
        assert first.values == second.values
        assert first.counts == second.counts

    def test_sampling_logs_warning(self):
        """Test that switching to sampling is logged as a warning."""
        log_output = StringIO()
        handler_id = logger.add(log_output, format="{message}", level="WARNING")
        try:
            det_spectrum(fset(7, [0, 1, 2]), 3, budget=1000, seed=5)
        finally:
            logger.remove(handler_id)

        assert "over budget" in log_output.getvalue()

    def test_budget_from_settings(self, monkeypatch):
        """Test that SPECTRA_BUDGET applies when no budget is passed."""
        monkeypatch.setenv("SPECTRA_BUDGET", "1000")
        get_settings.cache_clear()
        assert not det_spectrum(fset(7, [0, 1, 2]), 3).exact


class TestPerSpectrum:
    """Tests for per_spectrum()."""

    def test_zero_one_two_by_two(self):
        """Test g_2({0,1}) in F_5 is {0,1,2}, the same as AA + AA."""
        A = fset(5, [0, 1])
        result = per_spectrum(A, 2)
        assert result.values.elements == (0, 1, 2)
        assert result.values == evaluate("A*A + A*A", {"A": A})

    def test_singleton_two_by_two(self):
        """Test that {1} in F_7 gives only ad + bc = 2."""
        assert per_spectrum(fset(7, [1]), 2).values.elements == (2,)

    def test_singleton_three_by_three(self):
        """Test that the all-ones 3 x 3 matrix has permanent 3! = 6."""
        assert per_spectrum(fset(7, [1]), 3).values.elements == (6,)

    @pytest.mark.parametrize(("p", "elements", "d"), [(7, [1, 2, 3], 2), (5, [0, 1, 2], 3)])
    def test_counts_match_brute_force(self, p, elements, d):
        """Test P_d(A, t) against direct enumeration."""
        result = per_spectrum(fset(p, elements), d, want_counts=True)
        assert result.counts == dict(brute_force_counts(elements, d, p, "per"))
        assert result.kind == "per"

    @pytest.mark.parametrize(("lam", "d"), [(3, 2), (5, 2), (2, 3), (6, 3)])
    def test_dilation_scales_values_and_keeps_counts(self, lam, d):
        """Test that Per over lambda A is lambda^d times Per over A, count for count."""
        A = fset(7, [0, 1, 3])
        base = per_spectrum(A, d, want_counts=True)
        scaled = per_spectrum(set_dilate(A, lam), d, want_counts=True)
        mu = pow(lam, d, 7)

        assert scaled.values == set_dilate(base.values, mu)
        assert scaled.counts == {mu * t % 7: c for t, c in base.counts.items()}


class TestDifferenceSpectra:
    """Tests for F_2(A) and G_2(A)."""

    def test_singleton_zero(self):
        """Test that X - Y is the zero matrix when A = {0}."""
        assert diff_det_spectrum_f2(fset(5, [0])).elements == (0,)

    def test_zero_one_covers_field(self):
        """Test F_2({0,1}) = G_2({0,1}) = F_5."""
        A = fset(5, [0, 1])
        full = FpSet.full(make_field(5))
        assert diff_det_spectrum_f2(A) == full
        assert diff_per_spectrum_g2(A) == full

    @pytest.mark.parametrize(("p", "elements"), [(7, [1, 3]), (11, [0, 2, 7]), (13, [1, 5])])
    def test_matches_pair_enumeration(self, p, elements):
        """Test both difference spectra against enumeration of all (X, Y) pairs."""
        A = fset(p, elements)
        assert set(diff_det_spectrum_f2(A)) == brute_force_diff_values(elements, p, "det")
        assert set(diff_per_spectrum_g2(A)) == brute_force_diff_values(elements, p, "per")

    def test_over_budget_uses_identity(self):
        """Test that the closed form agrees with enumeration when the budget is tiny."""
        A = fset(11, [0, 2, 7])
        assert diff_det_spectrum_f2(A, budget=1) == diff_det_spectrum_f2(A)
        assert diff_per_spectrum_g2(A, budget=1) == diff_per_spectrum_g2(A)

    def test_empty_set_raises(self):
        """Test that the empty set raises EmptySetError."""
        with pytest.raises(EmptySetError):
            diff_det_spectrum_f2(FpSet.empty(make_field(5)))


class TestDistributionReport:
    """Tests for distribution_report()."""

    def test_zero_one_two_by_two(self):
        """Test the summary of D_2({0,1}, t) in F_5."""
        report = distribution_report(det_spectrum(fset(5, [0, 1]), 2, want_counts=True))

        assert report.expected == pytest.approx(16 / 5)
        assert report.zero_count == 10
        assert report.nonzero_min == 0
        assert report.nonzero_max == 3
        assert report.max_count == 10
        assert report.max_relative_deviation == pytest.approx(1.0)

    def test_requires_counts(self):
        """Test that a result without counts raises ValueError."""
        with pytest.raises(ValueError, match="want_counts"):
            distribution_report(det_spectrum(fset(5, [0, 1]), 2))
