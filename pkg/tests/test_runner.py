"""Tests for scans, exponent fits and record output.

CRITICAL: TEST INTEGRITY DIRECTIVE
NEVER remove, disable, or work around a failing test without explicit user review and approval.
When a test fails:
1. STOP - Do not proceed with implementation
2. ANALYZE - Understand why the test is failing
3. DISCUSS - Present the failure to the user
4. WAIT - Get explicit user approval before modifying tests
"""

import json
from io import StringIO

import pytest
from fp_spectra.config import get_settings
from fp_spectra.errors import ConfigInvalidError, InsufficientDataError
from fp_spectra.rng import derive_seed
from fp_spectra.runner import (
    CSV_COLUMNS,
    ExperimentRecord,
    estimate_exponent,
    make_config,
    record_row,
    records_to_csv,
    records_to_json,
    render_records,
    run_scan,
    write_records,
)
from loguru import logger

EXPLICIT_01 = {"kind": "explicit", "elements": [0, 1]}


@pytest.fixture(autouse=True)
def clear_settings_cache(monkeypatch, tmp_path):
    """Run with default settings regardless of the caller's environment."""
    for name in ("SPECTRA_WORKERS", "SPECTRA_BUDGET", "SPECTRA_SEED"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def record(card, measured, exact=True, **overrides):
    values = {
        "preset": "thm1i",
        "p": 101,
        "card_A": card,
        "d": 2,
        "trial": 0,
        "seed": 0,
        "measured": measured,
        "bound": card**1.5,
        "ratio": measured / card**1.5,
        "exact": exact,
        "hypothesis_ok": True,
    }
    values.update(overrides)
    return ExperimentRecord(**values)


class TestMakeConfig:
    """Tests for ExperimentConfig validation."""

    def test_valid_config(self):
        """Test a random-family scan with the preset's default dimension."""
        cfg = make_config(preset="thm2i", p=101, family={"kind": "random", "size": 1}, sizes=[8, 4, 8])
        assert cfg.dim == 3
        assert cfg.cell_sizes == [4, 8]
        assert cfg.trials == 1

    def test_explicit_family_uses_its_own_size(self):
        """Test that an explicit set needs no sizes."""
        cfg = make_config(preset="thm3", p=5, family=EXPLICIT_01)
        assert cfg.cell_sizes == [2]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"preset": "thm9"},
            {"p": 9},
            {"p": 2},
            {"p": 2**31 + 11},
            {"d": 3},
            {"sizes": []},
            {"sizes": [0]},
            {"sizes": [102]},
            {"trials": 0},
            {"seed": -1},
            {"colour": "red"},
        ],
    )
    def test_invalid_configs_raise(self, overrides):
        """Test that each inconsistent field raises ConfigInvalidError."""
        values = {
            "preset": "thm1i",
            "p": 101,
            "family": {"kind": "interval", "size": 1},
            "sizes": [4],
        }
        values.update(overrides)
        with pytest.raises(ConfigInvalidError):
            make_config(**values)

    def test_explicit_family_rejects_other_sizes(self):
        """Test that sizes other than the explicit set's own size are rejected."""
        with pytest.raises(ConfigInvalidError):
            make_config(preset="thm3", p=5, family=EXPLICIT_01, sizes=[3])


class TestRunScan:
    """Tests for run_scan()."""

    def test_thm3_explicit(self):
        """Test g_2({0,1}) = 3 against 2^(3/2) in F_5."""
        records = run_scan(make_config(preset="thm3", p=5, family=EXPLICIT_01))

        assert len(records) == 1
        r = records[0]
        assert (r.preset, r.p, r.card_A, r.d, r.trial) == ("thm3", 5, 2, 2, 0)
        assert r.measured == 3
        assert r.bound == pytest.approx(2.828427, rel=1e-5)
        assert r.ratio == pytest.approx(1.06066, rel=1e-5)
        assert r.exact
        assert r.hypothesis_ok
        assert r.seed == derive_seed(0, 2, 0)
        assert r.elapsed_s == 0.0

    def test_thm1i_grid(self):
        """Test that sizes x trials gives records in (size, trial) order."""
        cfg = make_config(
            preset="thm1i",
            p=101,
            family={"kind": "interval", "size": 1, "start": 1},
            sizes=[4, 8, 16],
            trials=2,
        )
        records = run_scan(cfg)

        assert [(r.card_A, r.trial) for r in records] == [
            (4, 0),
            (4, 1),
            (8, 0),
            (8, 1),
            (16, 0),
            (16, 1),
        ]
        for r in records:
            assert r.ratio == pytest.approx(r.measured / r.card_A**1.5)
            assert r.exact

    def test_conj1_singleton(self):
        """Test that size 1 gives measured 1, bound 1, ratio 1."""
        cfg = make_config(preset="conj1", p=7, family={"kind": "random", "size": 1}, sizes=[1])
        r = run_scan(cfg)[0]
        assert r.d == 4
        assert (r.measured, r.bound, r.ratio) == (1, 1.0, 1.0)

    def test_window_violation_is_recorded(self):
        """Test that |A| > p^(2/3) marks the record and logs a warning."""
        cfg = make_config(preset="thm1i", p=7, family={"kind": "interval", "size": 1}, sizes=[5])

        log_output = StringIO()
        handler_id = logger.add(log_output, format="{message}", level="WARNING")
        try:
            r = run_scan(cfg)[0]
        finally:
            logger.remove(handler_id)

        assert not r.hypothesis_ok
        assert r.hypothesis_violated
        assert "outside the hypotheses" in log_output.getvalue()

    def test_scan_is_deterministic(self):
        """Test that repeated scans write identical bytes."""
        cfg = make_config(
            preset="thm2i", p=101, family={"kind": "random", "size": 1}, sizes=[3, 4], seed=7
        )
        assert records_to_csv(run_scan(cfg)) == records_to_csv(run_scan(cfg))

    def test_worker_count_does_not_change_output(self):
        """Test that 1 and 2 workers give the same records."""
        values = {
            "preset": "thm1i",
            "p": 101,
            "family": {"kind": "random", "size": 1},
            "sizes": [3, 5, 6],
            "trials": 2,
            "seed": 3,
        }
        serial = run_scan(make_config(**values, workers=1))
        parallel = run_scan(make_config(**values, workers=2))
        assert records_to_csv(serial) == records_to_csv(parallel)

    def test_record_timing(self):
        """Test that record_timing fills elapsed_s."""
        cfg = make_config(preset="thm3", p=5, family=EXPLICIT_01, record_timing=True)
        assert run_scan(cfg)[0].elapsed_s > 0

    def test_progress_bar_serial(self):
        """Test that the progress bar path returns the same records."""
        cfg = make_config(preset="thm3", p=5, family=EXPLICIT_01)
        assert run_scan(cfg, progress=True) == run_scan(cfg)


class TestEstimateExponent:
    """Tests for estimate_exponent()."""

    def test_exact_power_law(self):
        """Test that measured = |A|^(3/2) at sizes 4 and 16 gives slope 1.5."""
        fit = estimate_exponent([record(4, 8), record(16, 64)])
        assert fit.slope == pytest.approx(1.5)
        assert fit.residual == pytest.approx(0.0, abs=1e-9)
        assert fit.points == 2
        assert not fit.lower_bound

    def test_constant_measurements(self):
        """Test that constant values give slope 0."""
        fit = estimate_exponent([record(2, 5), record(4, 5), record(8, 5)])
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_single_size_raises(self):
        """Test that one distinct size raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            estimate_exponent([record(4, 8), record(4, 9, trial=1)])

    def test_zero_measurements_are_skipped(self):
        """Test that zero values cannot be fitted in log space and are dropped."""
        with pytest.raises(InsufficientDataError):
            estimate_exponent([record(4, 0), record(16, 64)])

    def test_certificates_make_a_lower_bound_slope(self):
        """Test that a non-exact record marks the fit as a lower bound."""
        fit = estimate_exponent([record(4, 8), record(16, 64, exact=False)])
        assert fit.lower_bound


class TestOutput:
    """Tests for CSV, JSON and table output."""

    def test_record_row_formatting(self):
        """Test integer, float and boolean cell formatting."""
        row = record_row(record(2, 3, bound=2**1.5, ratio=3 / 2**1.5, hypothesis_ok=False))
        assert tuple(row) == CSV_COLUMNS
        assert row["measured"] == "3"
        assert row["bound"] == "2.82843"
        assert row["ratio"] == "1.06066"
        assert row["exact"] == "true"
        assert row["hypothesis_ok"] == "false"
        assert row["elapsed_s"] == "0"

    def test_integral_floats_print_as_integers(self):
        """Test that a bound of 1.0 is written as 1."""
        assert record_row(record(1, 1, bound=1.0, ratio=1.0))["bound"] == "1"

    def test_csv(self):
        """Test the header and one data line."""
        text = records_to_csv([record(4, 8, seed=12)])
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "thm1i,101,4,2,0,12,8,8,1,true,true,0"
        assert text.endswith("\n")

    def test_json_mirrors_csv(self):
        """Test that JSON rows carry the same values with native types."""
        rows = json.loads(records_to_json([record(2, 3, bound=2**1.5, ratio=3 / 2**1.5)]))
        assert rows == [
            {
                "preset": "thm1i",
                "p": 101,
                "card_A": 2,
                "d": 2,
                "trial": 0,
                "seed": 0,
                "measured": 3,
                "bound": 2.82843,
                "ratio": 1.06066,
                "exact": True,
                "hypothesis_ok": True,
                "elapsed_s": 0,
            }
        ]

    def test_write_records(self, tmp_path):
        """Test that the suffix selects the format."""
        records = [record(4, 8)]
        write_records(records, tmp_path / "out.csv")
        write_records(records, tmp_path / "out.json")

        assert (tmp_path / "out.csv").read_text().startswith("preset,p,card_A")
        assert json.loads((tmp_path / "out.json").read_text())[0]["card_A"] == 4

    def test_write_records_rejects_unknown_suffix(self, tmp_path):
        """Test that only .csv and .json are accepted."""
        with pytest.raises(ConfigInvalidError):
            write_records([record(4, 8)], tmp_path / "out.txt")

    def test_render_records(self):
        """Test the rich table shape."""
        table = render_records([record(4, 8), record(8, 20, exact=False)])
        assert table.title == "Scan results"
        assert table.row_count == 2
