import csv
import json
import math

import numpy as np
import pytest

from coverage_lab.core import CoverageSpec, SplitConfig
from coverage_lab.errors import ConfigError
from coverage_lab.harness import (
    ExperimentConfig,
    MethodConfig,
    describe_descriptor,
    generate_probe_sets,
    run_conditional_experiment,
    run_efficiency_experiment,
    run_marginal_experiment,
    run_sandwich_check,
)
from coverage_lab.oracle import FeatureLaw, LocationFamily, MeanFunction, NoiseModel
from coverage_lab.set_classes import GridPartition, Interval1D, SetClass, membership_many


def _cfg(fam, method, trials=200, n0=100, n1=99, alpha=0.1, delta=1.0, seed=17, **kw):
    return ExperimentConfig(
        family=fam,
        split=SplitConfig(n0, n1),
        spec=CoverageSpec(alpha, delta),
        method=method,
        trials=trials,
        seed=seed,
        **kw,
    )


class TestDebugBaselines:
    def test_always_full_covers_exactly(self, gaussian_linear_family):
        report = run_marginal_experiment(_cfg(gaussian_linear_family, MethodConfig("always-full"), trials=50))
        assert report.coverage == 1.0
        assert report.length_mean == math.inf

    def test_always_empty_never_covers(self, gaussian_linear_family):
        report = run_marginal_experiment(_cfg(gaussian_linear_family, MethodConfig("always-empty"), trials=50))
        assert report.coverage == 0.0
        assert report.length_mean == 0.0


class TestDeterminismAndWorkers:
    def test_reports_bit_identical(self, gaussian_linear_family):
        cfg = _cfg(gaussian_linear_family, MethodConfig("split-marginal"), trials=120)
        a = run_marginal_experiment(cfg)
        b = run_marginal_experiment(cfg)
        assert a.to_json() == b.to_json()

    def test_results_independent_of_worker_count(self, gaussian_linear_family):
        base = _cfg(gaussian_linear_family, MethodConfig("thinned", c=0.5), trials=80, delta=0.5)
        multi = _cfg(
            gaussian_linear_family, MethodConfig("thinned", c=0.5), trials=80, delta=0.5, workers=2
        )
        ra, rb = run_marginal_experiment(base), run_marginal_experiment(multi)
        assert ra.coverage == rb.coverage
        assert ra.length_median == rb.length_median
        assert ra.keep_rate == rb.keep_rate


class TestMarginalExperiment:
    def test_split_marginal_hits_band(self, gaussian_linear_family):
        trials, alpha, n1 = 1000, 0.1, 99
        report = run_marginal_experiment(
            _cfg(gaussian_linear_family, MethodConfig("split-marginal"), trials=trials, n1=n1, seed=3)
        )
        se = math.sqrt(0.9 * 0.1 / trials)
        assert 0.9 - 3 * se <= report.coverage <= 0.9 + 1 / (n1 + 1) + 3 * se
        assert report.passed

    def test_thinned_keep_rate(self, gaussian_linear_family):
        trials = 1500
        report = run_marginal_experiment(
            _cfg(gaussian_linear_family, MethodConfig("thinned", c=0.5), trials=trials, delta=0.3, seed=5)
        )
        p = 0.9 / 0.95
        assert abs(report.keep_rate - p) <= 3 * math.sqrt(p * (1 - p) / trials)

    def test_thinned_c_zero_infinite_base(self, gaussian_linear_family):
        report = run_marginal_experiment(
            _cfg(gaussian_linear_family, MethodConfig("thinned", c=0.0), trials=300, delta=0.5, seed=6)
        )
        assert report.infinite_length_fraction == pytest.approx(report.keep_rate)
        assert report.length_mean == math.inf
        assert abs(report.keep_rate - 0.9) <= 3 * math.sqrt(0.9 * 0.1 / 300)

    def test_all_methods_marginally_valid(self, gaussian_linear_family):
        part = GridPartition(((0.25, 0.5, 0.75),))
        methods = [
            MethodConfig("split-marginal"),
            MethodConfig("naive-alphadelta"),
            MethodConfig("thinned", c=0.5),
            MethodConfig("restricted", set_class=SetClass.finite_partition(part)),
        ]
        for method in methods:
            report = run_marginal_experiment(
                _cfg(gaussian_linear_family, method, trials=400, n0=150, n1=200, delta=0.25, seed=8)
            )
            assert report.passed, method.kind

    def test_csv_emission(self, gaussian_linear_family, tmp_path):
        path = tmp_path / "trials.csv"
        run_marginal_experiment(
            _cfg(gaussian_linear_family, MethodConfig("split-marginal"), trials=40), csv_path=path
        )
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["trial", "probe", "covered", "length"]
        assert len(rows) == 41


class TestConditionalExperiment:
    def test_full_space_probe_reduces_to_marginal(self, gaussian_linear_family):
        from coverage_lab.set_classes import FullSpace

        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("split-marginal"),
            trials=400,
            seed=9,
            probe_sets=(FullSpace(1),),
        )
        report = run_conditional_experiment(cfg)
        assert report.probes[0]["mass"] == 1.0
        cov = report.probes[0]["coverage"]
        assert 0.9 - 3 * math.sqrt(0.09 / 400) <= cov

    def test_restricted_per_cell_coverage(self, gaussian_linear_family):
        part = GridPartition(((0.25, 0.5, 0.75),))
        sc = SetClass.finite_partition(part)
        spec = CoverageSpec(0.1, 0.2)
        probes = generate_probe_sets(sc, gaussian_linear_family, spec)
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("restricted", set_class=sc),
            trials=250,
            n0=150,
            n1=400,
            alpha=0.1,
            delta=0.2,
            seed=10,
            probe_sets=probes,
        )
        report = run_conditional_experiment(cfg)
        assert report.passed
        assert report.coverage >= 0.9 - 3 * math.sqrt(0.09 / 250)

    def test_low_mass_probe_excluded(self, gaussian_linear_family):
        probes = (Interval1D(0.0, 0.01), Interval1D(0.2, 0.8))
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("naive-alphadelta"),
            trials=60,
            alpha=0.1,
            delta=0.2,
            seed=11,
            probe_sets=probes,
        )
        report = run_conditional_experiment(cfg)
        assert not report.probes[0]["eligible"]
        assert report.probes[1]["eligible"]

    def test_requires_probes(self, gaussian_linear_family):
        with pytest.raises(ConfigError):
            run_conditional_experiment(_cfg(gaussian_linear_family, MethodConfig("split-marginal")))


class TestEfficiencyExperiment:
    def test_no_method_beats_hardness_bound(self, gaussian_linear_family):
        # the certified naive reduction must not beat the hardness floor
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("naive-alphadelta"),
            trials=400,
            n0=200,
            n1=500,
            alpha=0.1,
            delta=0.25,
            seed=12,
        )
        report = run_efficiency_experiment(cfg)
        bound = report.comparisons["hardness_lower_bound"]
        se = 3 * report.length_mean / math.sqrt(cfg.trials)
        assert report.length_mean >= bound - se

    def test_symmetric_difference_reported(self, gaussian_linear_family):
        part = GridPartition(((0.5,),))
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("restricted", set_class=SetClass.finite_partition(part)),
            trials=100,
            n0=200,
            n1=300,
            alpha=0.1,
            delta=0.3,
            seed=13,
        )
        report = run_efficiency_experiment(cfg)
        med = report.comparisons["median_symmetric_difference"]
        assert math.isfinite(med) and med >= 0.0
        assert report.comparisons["oracle_length"] == pytest.approx(2 * 1.6448536, abs=1e-4)


class TestSandwich:
    def test_full_space_fraction_high(self, gaussian_linear_family):
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("restricted", set_class=SetClass.full_space_only(1)),
            trials=2,
            n0=400,
            n1=800,
            alpha=0.1,
            delta=0.2,
            seed=14,
        )
        report = run_sandwich_check(cfg, vc=1, probe_count=6, mc_trials=8000)
        assert report.comparisons["sandwich_fraction"] >= 0.9
        assert report.notes  # constants 1.0 at this n1 clip the levels

    def test_zero_constants_reported_not_asserted(self, gaussian_linear_family):
        cfg = _cfg(
            gaussian_linear_family,
            MethodConfig("restricted", set_class=SetClass.full_space_only(1)),
            trials=1,
            n0=100,
            n1=150,
            alpha=0.1,
            delta=0.2,
            seed=15,
        )
        report = run_sandwich_check(cfg, vc=1, c_alpha=0.0, c_delta=0.0, probe_count=4, mc_trials=4000)
        assert 0.0 <= report.comparisons["sandwich_fraction"] <= 1.0
        assert report.passed is None

    def test_rejects_non_restricted(self, gaussian_linear_family):
        with pytest.raises(ConfigError):
            run_sandwich_check(_cfg(gaussian_linear_family, MethodConfig("split-marginal")), vc=1)


class TestProbeGeneration:
    def test_partition_probes_are_cells(self, gaussian_linear_family):
        part = GridPartition(((0.5,),))
        probes = generate_probe_sets(
            SetClass.finite_partition(part), gaussian_linear_family, CoverageSpec(0.1, 0.2)
        )
        assert len(probes) == 2
        assert {p.label for p in probes} == {(0,), (1,)}
        assert describe_descriptor(probes[0])["kind"] == "cell"

    @pytest.mark.parametrize("kind", ["intervals-1d", "l2-balls", "half-spaces"])
    def test_generated_masses_in_band(self, kind, gaussian_linear_family):
        sc = SetClass.intervals_1d() if kind == "intervals-1d" else SetClass(kind, 1)
        spec = CoverageSpec(0.1, 0.2)
        probes = generate_probe_sets(sc, gaussian_linear_family, spec, count=5, seed=3)
        rng = np.random.default_rng(99)
        pool = gaussian_linear_family.features.sample(rng, 40_000)
        for p in probes:
            mass = membership_many(p, pool).mean()
            assert 0.17 <= mass <= 0.43

    def test_seeded_reproducible(self, gaussian_linear_family):
        spec = CoverageSpec(0.1, 0.2)
        a = generate_probe_sets(SetClass.intervals_1d(), gaussian_linear_family, spec, count=4, seed=5)
        b = generate_probe_sets(SetClass.intervals_1d(), gaussian_linear_family, spec, count=4, seed=5)
        assert a == b


def test_approximate_class_flagged_in_report():
    fam = LocationFamily(
        mean=MeanFunction("constant", intercept=0.0),
        noise=NoiseModel("gaussian", 1.0),
        features=FeatureLaw("standard-normal", dim=3),
    )
    cfg = _cfg(fam, MethodConfig("restricted", set_class=SetClass.l2_balls(3)), trials=3, n0=20, n1=25, delta=0.9, seed=16)
    report = run_marginal_experiment(cfg)
    assert report.config["method"]["enumeration_exact"] is False
    assert any("under-estimate" in note for note in report.notes)


def test_report_json_round_trip(gaussian_linear_family):
    report = run_marginal_experiment(
        _cfg(gaussian_linear_family, MethodConfig("always-full"), trials=10)
    )
    payload = json.loads(report.to_json())
    assert payload["length_mean"] == "Infinity"
    assert payload["coverage"] == 1.0
    assert payload["config"]["coverage"]["alpha"] == 0.1


def test_rejection_cap_flags_probe(gaussian_linear_family, monkeypatch):
    # a zero-mass probe exhausts its draw budget: flagged, excluded, run completes
    import coverage_lab.harness as hmod

    monkeypatch.setattr(hmod, "_CONDITIONAL_DRAW_CAP", 8192)
    cfg = _cfg(
        gaussian_linear_family,
        MethodConfig("naive-alphadelta"),
        trials=5,
        alpha=0.1,
        delta=0.2,
        seed=18,
        probe_sets=(Interval1D(5.0, 6.0), Interval1D(0.2, 0.8)),
    )
    report = run_conditional_experiment(cfg)
    assert report.probes[0]["rejection_failures"] == 5
    assert not report.probes[0]["eligible"]
    assert report.probes[1]["trials"] == 5
