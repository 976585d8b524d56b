"""
Tests for the learning-curve and OPE charts.
"""

import math
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pytest

from dice_explorer.core.plotting import (
    OPE_SERIES,
    learning_curve_figure,
    mean_and_band,
    ope_figure,
    write_plots,
)
from dice_explorer.core.run_log import LogRow, TrainingLog


def _log(returns, explore=math.nan) -> TrainingLog:
    rows = [
        LogRow(
            step=10 * (index + 1),
            return_target=value,
            return_explore=explore,
            dual_estimate=0.5,
            batch_reward=0.4,
            onpolicy_reward=0.45,
            loss_nu=0.0,
            loss_zeta=0.0,
            loss_lambda=0.0,
            lam=0.0,
            mean_zeta=1.0,
        )
        for index, value in enumerate(returns)
    ]
    return TrainingLog(rows)


class TestMeanAndBand:
    """Tests for NaN-aware aggregation."""

    def test_ignores_nan(self):
        """A NaN entry drops out of that step's mean."""
        mean, std = mean_and_band([_log([1.0, math.nan]), _log([3.0, 5.0])], "return_target")
        np.testing.assert_allclose(mean, [2.0, 5.0])
        np.testing.assert_allclose(std, [np.sqrt(2.0), 0.0])

    def test_all_nan_stays_nan(self):
        """A step without any finite value is NaN."""
        mean, _ = mean_and_band([_log([1.0])], "return_explore")
        assert np.isnan(mean[0])


class TestFigures:
    """Tests for the figure builders."""

    def test_ope_figure_has_three_series(self):
        """Dual, batch and on-policy curves, nothing else."""
        figure = ope_figure([_log([1.0, 2.0])])
        labels = [line.get_label() for line in figure.axes[0].get_lines()]
        assert labels == list(OPE_SERIES.values())
        plt.close(figure)

    def test_learning_curve_skips_missing_explore(self):
        """Without exploration returns only the target curve is drawn."""
        figure = learning_curve_figure([_log([1.0, 2.0])])
        assert len(figure.axes[0].get_lines()) == 1
        plt.close(figure)

    def test_learning_curve_with_explore(self):
        """Both policies get a curve when both were evaluated."""
        figure = learning_curve_figure([_log([1.0, 2.0], explore=0.5)])
        assert len(figure.axes[0].get_lines()) == 2
        plt.close(figure)

    def test_mismatched_grids(self):
        """Logs must share evaluation steps."""
        with pytest.raises(ValueError):
            ope_figure([_log([1.0]), _log([1.0, 2.0])])


class TestWritePlots:
    """Tests for writing SVG files."""

    def test_writes_svg(self, tmp_path):
        """returns.svg and ope.svg appear; a second call does not overwrite."""
        paths = [str(_log([1.0, 2.0]).to_csv(str(tmp_path / f"seed_{seed}.csv"))) for seed in (0, 1)]
        written = write_plots(paths, str(tmp_path / "plots"))
        assert written["returns"].endswith("returns.svg")
        assert Path(written["ope"]).read_text(encoding="utf-8").lstrip().startswith("<?xml")
        again = write_plots(paths, str(tmp_path / "plots"))
        assert again["returns"].endswith("returns_1.svg")

    def test_empty_logs(self, tmp_path):
        """Header-only logs have nothing to plot."""
        path = str(TrainingLog().to_csv(str(tmp_path / "empty.csv")))
        with pytest.raises(ValueError):
            write_plots([path], str(tmp_path / "plots"))
