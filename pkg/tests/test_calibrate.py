import pytest

from arcpd.calibrate import find_threshold, fit_arl_line
from arcpd.detectors import CUSUM, SR
from arcpd.errors import ValidationError
from arcpd.mc import McConfig
from arcpd.model import Ar1Params

IID = Ar1Params(0.0, 0.0)


def test_degenerate_line_is_exact():
    line = fit_arl_line(SR, IID, IID, [10.5, 20.5, 40.5, 80.5], McConfig(replications=10))
    assert line.alpha == pytest.approx(1.0, abs=1e-9)
    assert line.beta == pytest.approx(0.5, abs=1e-9)
    assert line.r_squared == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("grid", [[1, 2], [10, 12, 14, 20], [5, 5, 5, 30]])
def test_degenerate_grid_rejected(grid):
    with pytest.raises(ValidationError):
        fit_arl_line(SR, IID, IID, grid, McConfig(replications=10))


def test_degenerate_calibration():
    res = find_threshold(SR, IID, IID, 11, 0.01, McConfig(replications=10, master_seed=1))
    assert 10 < res.threshold <= 11
    assert res.achieved_arl.mean == 11


def test_validation():
    with pytest.raises(ValidationError):
        find_threshold(SR, IID, IID, 1.0, 0.01, McConfig())
    with pytest.raises(ValidationError):
        find_threshold(SR, IID, IID, 50, 0.2, McConfig())


def test_cusum_gamma_50():
    res = find_threshold(CUSUM, IID, Ar1Params(1, 0.9), 50, 0.01, McConfig(master_seed=7))
    assert abs(res.achieved_arl.mean - 50) <= 0.5
    assert res.threshold == pytest.approx(5.65, rel=0.02)


def test_sr_gamma_100():
    res = find_threshold(SR, IID, Ar1Params(1, 0.5), 100, 0.01, McConfig(master_seed=7))
    assert abs(res.achieved_arl.mean - 100) <= 1.0
    assert res.threshold == pytest.approx(35.35, rel=0.02)


def test_threshold_nondecreasing_in_gamma():
    post = Ar1Params(1, 0.5)
    As = [find_threshold(CUSUM, IID, post, g, 0.05, McConfig(master_seed=3)).threshold
          for g in (50, 100, 500)]
    assert As == sorted(As)


def test_sr_slopes_near_table_ratios():
    # gamma / A from the tabulated SR thresholds, lambda0 = 0: 50 / 27.55 and 1000 / 559
    line = fit_arl_line(SR, IID, Ar1Params(1, 0), [27.55, 55.75, 279.0, 559.0],
                        McConfig(replications=20_000, master_seed=4))
    assert 1.75 < line.alpha < 1.85
