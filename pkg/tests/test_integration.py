"""
Integration tests for complete simulation pipelines
"""

import os

import numpy as np
import pandas as pd
import pytest

from meta_social_learning.api import SocialLearningLab
from meta_social_learning.cli import main


pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture(scope="module")
def lab():
    return SocialLearningLab()


@pytest.fixture(scope="module")
def invariance(lab):
    """Conformist, success-based and individual learners on both reversal schedules"""
    return lab.run_experiment("uncertainty_invariance", seed=11, replicates=12, m=100)


class TestUncertaintyInvariance:
    """Conformist learning is insensitive to reward uncertainty; success-based learning is not"""

    def test_conformist_wins_under_high_uncertainty(self, invariance):
        conformist = invariance.samples("reversal_high", "conformist", "end_of_run")
        success = invariance.samples("reversal_high", "success", "end_of_run")
        assert conformist.mean() > success.mean()

    def test_success_recovers_faster_under_low_uncertainty(self, invariance):
        conformist = invariance.samples("reversal_low", "conformist", "post_change")
        success = invariance.samples("reversal_low", "success", "post_change")
        assert success.mean() > conformist.mean()

    def test_social_learners_beat_individual_learners(self, invariance):
        il_only = invariance.samples("reversal_low", "IL-Only", "end_of_run").mean()
        for learner in ("success", "conformist"):
            assert invariance.samples("reversal_low", learner, "end_of_run").mean() > il_only

    def test_change_point_recorded(self, invariance):
        assert invariance.change_points["reversal_low"] == [200]


class TestOdpuValues:
    """Reference ODPU values"""

    def test_symmetric_groups(self, lab):
        assert lab.odpu([1.0, 1.0], [0.2, 0.2], [50, 50])["odpu"] == pytest.approx(0.5, abs=1e-6)

    def test_low_uncertainty_is_negligible(self, lab):
        assert lab.odpu([1.0, 0.4], [0.05, 0.05], [50, 50])["odpu"] < 1e-6

    def test_high_uncertainty_regime(self, lab):
        result = lab.odpu([1.0, 0.9], [0.05, 0.5], [50, 50], mc_trials=200000, seed=3)
        assert 0.1 < result["odpu"] < 1.0
        assert result["agree"] == 1.0


class TestMeanFieldModel:
    """The mean-field model against the agent-based simulation"""

    @pytest.mark.parametrize("sls", ["success", "conformist"])
    def test_social_learning_dominates(self, lab, sls):
        trajectory = lab.replicator(sls, "reversal_low", tau=1)
        assert trajectory.sl[-1] > trajectory.a1[-1] + trajectory.a2[-1]
        assert trajectory.max_simplex_drift() <= 1e-6

    def test_conformist_dips_after_reversal(self, lab):
        """Conformist learners lose share after the reversal and recover it"""
        trajectory = lab.replicator("conformist", "reversal_low", tau=1)
        frame = pd.DataFrame({"t": trajectory.t, "sl": trajectory.sl})
        before = frame[frame.t <= 200].sl.iloc[-1]
        dip = frame[(frame.t > 200) & (frame.t <= 300)].sl.min()
        assert dip < before
        assert trajectory.sl[-1] > dip


class TestExplorationCost:
    """Individual learning is the costliest meta-strategy"""

    def test_il_only_is_costliest(self, lab):
        result = lab.compare(["IL-Only", "SL-EC-Conf-Unc", "SL-Succ"], "experiment1_volatile_low",
                             seed=2, replicates=4, m=50)
        ledger = result.costs["experiment1_volatile_low"]
        assert ledger.mean_total("SL-EC-Conf-Unc") < ledger.mean_total("IL-Only")
        assert ledger.mean_total("IL-Only") == pytest.approx(50 * 400 * 0.1)


class TestCommandLinePipeline:
    """Run, report and re-render from the command line"""

    def test_run_and_rerender(self, tmp_path, capsys):
        output = tmp_path / "report"
        main(["run", "--meta", "success", "conformist", "--env", "reversal_high",
              "--replicates", "3", "--m", "20", "--seed", "4", "--output", str(output)])
        out = capsys.readouterr().out
        assert "🎉 Done" in out
        assert (output / "report.json").exists()

        with open(output / "report.json", "rb") as f:
            original = f.read()
        rerendered = tmp_path / "rerendered"
        main(["report", str(output), "--output", str(rerendered), "--quiet"])
        svgs = sorted(name for name in os.listdir(rerendered) if name.endswith(".svg"))
        assert svgs
        with open(output / "report.json", "rb") as f:
            assert f.read() == original

    def test_competition_ratios(self, tmp_path, capsys):
        """A small competition reports terminal ratios summing to one"""
        lab = SocialLearningLab()
        result = lab.evolve_meta("reversal_high", seed=1, replicates=2, m=60,
                                 meta_set=["IL-Only", "SL-Succ", "SL-Conf", "SL-EC-Conf-Unc"])
        runs = next(v for k, v in result.runs.items() if k[1] == "competition")
        for run in runs:
            columns = run.ratio_columns()
            assert len(columns) == 4
            assert float(run.frame[columns].iloc[-1].sum()) == pytest.approx(1.0)
            assert np.all(run.frame[columns].to_numpy() >= 0)
