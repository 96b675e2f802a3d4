"""Desk-scale acceptance battery: identities, growth ratios and determinism.

CRITICAL: TEST INTEGRITY DIRECTIVE
NEVER remove, disable, or work around a failing test without explicit user review and approval.
When a test fails:
1. STOP - Do not proceed with implementation
2. ANALYZE - Understand why the test is failing
3. DISCUSS - Present the failure to the user
4. WAIT - Get explicit user approval before modifying tests
"""

import pytest
from fp_spectra.config import get_settings
from fp_spectra.constructions import chain_certificate
from fp_spectra.field import make_field
from fp_spectra.fset import SetFamilySpec, gen_set
from fp_spectra.rng import derive_seed
from fp_spectra.runner import make_config, records_to_csv, run_scan
from fp_spectra.setexpr import evaluate
from fp_spectra.spectra import det_spectrum, per_spectrum

pytestmark = pytest.mark.slow

ROOT_SEED = 2024


@pytest.fixture(autouse=True)
def clear_settings_cache(monkeypatch, tmp_path):
    """Run with default settings regardless of the caller's environment."""
    for name in ("SPECTRA_WORKERS", "SPECTRA_BUDGET", "SPECTRA_SEED"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def random_sets(count: int):
    for i in range(count):
        p = (101, 1009)[i % 2]
        size = 2 + i % 11
        seed = derive_seed(ROOT_SEED, p, i)
        yield gen_set(make_field(p), SetFamilySpec(kind="random", size=size, seed=seed))


class TestTwoByTwoIdentities:
    """Exact 2 x 2 spectra against product-set expressions."""

    def test_determinants_are_aa_minus_aa(self):
        """Test f_2(A) = |AA - AA| on 200 random sets."""
        for A in random_sets(200):
            assert det_spectrum(A, 2, workers=1).values == evaluate("A*A - A*A", {"A": A})

    def test_permanents_are_aa_plus_aa(self):
        """Test g_2(A) = |AA + AA| on 200 random sets."""
        for A in random_sets(200):
            assert per_spectrum(A, 2, workers=1).values == evaluate("A*A + A*A", {"A": A})


class TestGrowthRatios:
    """Regression guards on the measured growth at p = 10007, |A| = 22."""

    @pytest.mark.parametrize("trial", range(5))
    def test_ratios_stay_above_half(self, trial):
        """Test f_2 / |A|^(3/2) and the f_3 certificate / |A|^(7/4)."""
        ctx = make_field(10007)
        spec = SetFamilySpec(kind="random", size=22, seed=derive_seed(ROOT_SEED, trial))
        A = gen_set(ctx, spec)

        f2 = det_spectrum(A, 2, workers=1)
        cert = chain_certificate(A, 3)

        assert f2.exact
        assert f2.cardinality / 22**1.5 >= 0.5
        assert cert.cardinality / 22**1.75 >= 0.5


class TestScanDeterminism:
    """Byte-identical scan output across worker counts."""

    def test_csv_matches_for_1_2_and_8_workers(self):
        """Test thm1i and thm2i scans with 1, 2 and 8 workers."""
        for preset in ("thm1i", "thm2i"):
            outputs = set()
            for workers in (1, 2, 8):
                cfg = make_config(
                    preset=preset,
                    p=101,
                    family={"kind": "random", "size": 1},
                    sizes=[3, 4, 5],
                    trials=2,
                    seed=ROOT_SEED,
                    workers=workers,
                )
                outputs.add(records_to_csv(run_scan(cfg)))
            assert len(outputs) == 1
