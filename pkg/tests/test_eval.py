"""评估指标与对比实验"""

import json
from dataclasses import replace

import numpy as np
import pytest

from ramkit.config_loader import RunConfig
from ramkit.errors import InvalidConfig, LengthMismatch, StageError
from ramkit.services.evaluation import (
    MODEL_LABELS,
    ExperimentResult,
    MetricReport,
    mae,
    rmse,
    run_experiment,
    run_seeds,
    summarize_seeds,
)
from ramkit.services.pipeline import fit_pipeline, stage


class TestMetrics:
    """MAE / RMSE"""

    def test_unit_errors(self):
        assert mae([0.0, 0.0], [1.0, -1.0]) == pytest.approx(1.0)
        assert rmse([0.0, 0.0], [1.0, -1.0]) == pytest.approx(1.0)

    def test_uneven_errors(self):
        assert mae([0.0, 0.0], [3.0, -1.0]) == pytest.approx(2.0)
        assert rmse([0.0, 0.0], [3.0, -1.0]) == pytest.approx(np.sqrt(5.0))

    def test_perfect_prediction(self):
        y = np.arange(5.0)
        assert mae(y, y) == 0.0
        assert rmse(y, y) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            mae([1.0, 2.0], [1.0])
        with pytest.raises(LengthMismatch):
            rmse([], [])


class TestStage:
    """阶段计时与异常包装"""

    def test_records_timing(self):
        timings = {}
        with stage("noop", timings):
            pass
        assert "noop" in timings
        assert timings["noop"] >= 0.0

    def test_wraps_errors(self):
        timings = {}
        with pytest.raises(StageError) as info:
            with stage("boom", timings):
                raise ValueError("bad value")
        assert info.value.stage == "boom"
        assert isinstance(info.value.cause, ValueError)
        assert "boom" in timings


class TestRunExperiment:
    """toy 数据上的完整对比"""

    @pytest.fixture
    def result(self, toy, fast_run):
        ds, _ = toy
        return run_experiment(fast_run, ds, dataset_id="toy", include_pairs=False)

    def test_labels_without_pairs(self, result):
        assert result.labels == ["DNN", "GAM", "RAM"]

    def test_regional_model_beats_additive_baseline(self, result):
        gam = result.report("GAM")
        ram = result.report("RAM")
        assert 1.8 <= gam.rmse_original <= 2.2
        assert ram.rmse_original < 0.3
        assert ram.rmse < gam.rmse

    def test_exact_blackbox_has_no_error(self, result):
        dnn = result.report("DNN")
        assert dnn.rmse_original < 1e-8

    def test_original_units_use_target_sd(self, result):
        sd = result.scaler.target_sd
        for report in result.reports:
            assert report.rmse_original == pytest.approx(report.rmse * sd, abs=1e-8)
            assert report.mae_original == pytest.approx(report.mae * sd, abs=1e-8)

    def test_detected_regions(self, result):
        assert result.regionsets[0].T == 1
        assert result.regionsets[2].T == 1
        assert result.regionsets[1].T == 2

    def test_serializable(self, result):
        payload = json.loads(json.dumps(result.to_dict()))
        assert payload["dataset"] == "toy"
        assert [r["label"] for r in payload["reports"]] == ["DNN", "GAM", "RAM"]
        assert payload["regionsets"][1]["feature_name"] == "x2"

    def test_unknown_report(self, result):
        with pytest.raises(KeyError):
            result.report("GA2M")

    def test_default_config_on_toy(self, toy):
        """默认参数：RAM 的测试 RMSE 远低于 GAM"""
        ds, _ = toy
        run = RunConfig(subcommand="evaluate", blackbox="toy", threads=1)
        result = run_experiment(run, ds, dataset_id="toy", include_pairs=False)
        assert 1.8 <= result.report("GAM").rmse_original <= 2.2
        assert result.report("RAM").rmse_original < 0.3
        assert result.regionsets[1].T == 2

    def test_pair_models(self, toy, fast_run):
        ds, _ = toy
        run = replace(fast_run, boosting=replace(fast_run.boosting, rounds=100, pair_rounds=20, max_pairs=2))
        result = run_experiment(run, ds, include_pairs=True)
        assert result.labels == list(MODEL_LABELS)
        assert result.report("GA2M").rmse < result.report("GAM").rmse


class TestSeedSweep:
    """多种子重复实验的汇总"""

    @staticmethod
    def _result(seed, ram_rmse):
        reports = [
            MetricReport("GAM", 1.0, 2.0, 1.0, 2.0),
            MetricReport("RAM", ram_rmse, ram_rmse, ram_rmse, ram_rmse),
        ]
        return ExperimentResult("toy", seed, reports, {}, [])

    def test_mean_and_sample_sd(self):
        summaries = summarize_seeds([self._result(0, 0.1), self._result(1, 0.3)])
        assert [s.label for s in summaries] == ["GAM", "RAM"]
        ram = summaries[1]
        assert ram.n_seeds == 2
        assert ram.rmse_mean == pytest.approx(0.2)
        assert ram.rmse_sd == pytest.approx(np.std([0.1, 0.3], ddof=1))
        assert summaries[0].rmse_sd == 0.0

    def test_single_seed_has_zero_sd(self):
        _, ram = summarize_seeds([self._result(4, 0.5)])
        assert ram.n_seeds == 1
        assert ram.rmse_sd == 0.0 and ram.mae_sd == 0.0

    def test_runs_every_seed(self, toy, fast_run):
        ds, _ = toy
        run = replace(fast_run, seeds=[0, 1, 2], boosting=replace(fast_run.boosting, rounds=100))
        sweep = run_seeds(run, ds, dataset_id="toy", include_pairs=False)
        assert sweep.seeds == [0, 1, 2]
        assert [r.seed for r in sweep.results] == [0, 1, 2]
        ram = sweep.summary("RAM")
        per_seed = [r.report("RAM").rmse for r in sweep.results]
        assert ram.rmse_mean == pytest.approx(np.mean(per_seed))
        assert ram.rmse_sd == pytest.approx(np.std(per_seed, ddof=1))
        assert ram.rmse_sd > 0.0
        payload = json.loads(json.dumps(sweep.to_dict()))
        assert len(payload["runs"]) == 3
        assert [s["label"] for s in payload["summaries"]] == ["DNN", "GAM", "RAM"]

    def test_empty_seed_list_uses_run_seed(self, toy, fast_run):
        ds, _ = toy
        run = replace(fast_run, seed=7, boosting=replace(fast_run.boosting, rounds=50))
        sweep = run_seeds(run, ds, include_pairs=False)
        assert sweep.seeds == [7]
        assert sweep.summary("GAM").rmse_sd == 0.0

    def test_duplicate_seeds_are_rejected(self, fast_run):
        with pytest.raises(InvalidConfig):
            replace(fast_run, seeds=[1, 1]).validate()


class TestPipelineErrors:
    """阶段失败时带上阶段名"""

    def test_missing_data_is_reported_by_stage(self, fast_run):
        with pytest.raises(StageError) as info:
            fit_pipeline(replace(fast_run, data=None, target=None))
        assert info.value.stage == "data"
        assert isinstance(info.value.cause, InvalidConfig)

    def test_toy_blackbox_needs_toy_columns(self, linear_data, fast_run):
        ds, _ = linear_data
        with pytest.raises(StageError) as info:
            fit_pipeline(fast_run, ds)
        assert info.value.stage == "blackbox"

    def test_invalid_config_fails_before_running(self, toy, fast_run):
        ds, _ = toy
        with pytest.raises(InvalidConfig):
            fit_pipeline(replace(fast_run, order=5), ds)
