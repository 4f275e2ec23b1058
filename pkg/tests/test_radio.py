import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wabsim.mcs import TABLES, bler, link_adapt
from wabsim.radio import (
    BeamJitter,
    CpeAntenna,
    Direction,
    Indoor,
    LinkState,
    Los,
    Nlos,
    adapt,
    angle_diff,
    beam_gain,
    bearing,
    default_env,
    Band,
    fr1_default,
    fr2_default,
    fspl_1m,
    link_throughput,
    noise_per_re,
    path_loss,
    per_re_eirp,
    rsrp,
    sector_beams,
    select_beam,
    sinr,
)

C = 299_792_458.0


def test_fspl_matches_friis():
    assert fspl_1m(27.2e9) == pytest.approx(20 * math.log10(4 * math.pi * 27.2e9 / C), abs=0.01)
    assert fspl_1m(27.2e9) == pytest.approx(61.1, abs=0.05)


def test_per_re_eirp_fr2():
    # 70 dBm over 132 PRB x 12 subcarriers
    assert per_re_eirp(fr2_default(), Direction.DL) == pytest.approx(70 - 10 * math.log10(1584), abs=1e-9)
    assert per_re_eirp(fr2_default(), Direction.DL) == pytest.approx(38.0, abs=0.05)


def test_noise_per_re():
    assert noise_per_re(fr2_default(), Direction.DL) == pytest.approx(-174 + 10 * math.log10(120e3) + 9)


def test_path_loss_terms():
    env = default_env(Band.FR2)
    los = path_loss(100, 27.2e9, Los(), env)
    assert los == pytest.approx(fspl_1m(27.2e9) + 40)
    assert path_loss(100, 27.2e9, Nlos(1), env) == pytest.approx(fspl_1m(27.2e9) + 32 * 2 + 15)
    assert path_loss(100, 27.2e9, Nlos(2, trees=1), env) == pytest.approx(fspl_1m(27.2e9) + 64 + 15 + 8)
    # excess exponent only beyond the first obstruction
    assert path_loss(100, 27.2e9, Nlos(1, excess_from_m=100), env) == pytest.approx(los + 15)
    assert path_loss(100, 27.2e9, Indoor(True, 0, 10), env) == pytest.approx(los + 8 + 5)
    with pytest.raises(ValueError):
        path_loss(0.5, 27.2e9, Los())


def test_peak_rsrp_near_one_km():
    pl = path_loss(1000, 27.2e9, Los())
    assert rsrp(fr2_default(), pl) == pytest.approx(-83, abs=0.5)


def test_sinr_ceiling():
    cfg = fr2_default()
    assert sinr(cfg, 0.0) < 30.0
    assert sinr(cfg, -120.0) == pytest.approx(-120 - noise_per_re(cfg, Direction.DL), abs=0.01)


def test_table_sizes():
    assert len(TABLES["qam64"]) == 29
    assert len(TABLES["qam256"]) == 28


@pytest.mark.parametrize("name", ["qam64", "qam256"])
def test_bler_grid_monotone(name):
    table = TABLES[name]
    grid = np.arange(-10, 40, 0.5)
    for m in range(len(table)):
        b = [bler(s, m, name) for s in grid]
        assert all(x >= y for x, y in zip(b, b[1:]))
        assert bler(table.thresholds[m], m, name) == pytest.approx(0.5)
    for s in grid:
        b = [bler(s, m, name) for m in range(len(table))]
        assert all(x < y for x, y in zip(b, b[1:]))


@given(st.floats(-20, 45), st.sampled_from(["qam64", "qam256"]), st.floats(0.01, 0.5))
def test_link_adapt_matches_scan(s, name, target):
    meets = [m for m in range(len(TABLES[name])) if bler(s, m, name) <= target + 1e-12]
    assert link_adapt(s, name, target) == (max(meets) if meets else 0)


def test_throughput_formula():
    cfg = fr2_default()
    expect = TABLES["qam256"].se(27) * 132 * 12 * 120e3 * 2 * 0.8 * 0.9
    assert link_throughput(cfg, 27, 0.1, Direction.DL) == pytest.approx(expect)
    assert link_throughput(cfg, 27, 1.0, Direction.DL) == 0.0


def test_dl_ul_ratio_for_equal_links():
    cfg = fr2_default()
    ratio = link_throughput(cfg, 20, 0.1, Direction.DL) / link_throughput(cfg, 20, 0.1, Direction.UL)
    se = TABLES["qam256"].se(20) / TABLES["qam64"].se(20)
    assert ratio == pytest.approx(4 * se)


def test_stale_csi_overshoots():
    cfg = fr2_default()
    mcs, b = adapt(cfg, Direction.DL, 10.0, reported_sinr_db=27.0)
    assert mcs == link_adapt(27.0, "qam256") and b > 0.9


def test_link_state_validation():
    with pytest.raises(ValueError):
        LinkState(-80, 20, 29, 0.1)
    with pytest.raises(ValueError):
        LinkState(-80, 20, 10, 1.5)


# beams ------------------------------------------------------------------------------


def brute_force(beams, brg, jitter=None):
    jitter = jitter or BeamJitter.zero(beams)
    ssb_scores = [b.gain_at(brg) + jitter.ssb[i] for i, b in enumerate(beams.ssb_beams)]
    ssb = int(np.argmax(ssb_scores))  # argmax keeps the lowest index on ties
    refs = beams.csirs_beams(ssb)
    scores = [b.gain_at(brg) + jitter.csirs[ssb][k] for k, b in enumerate(refs)]
    return ssb, int(np.argmax(scores))


@given(st.floats(0, 360, exclude_max=True), st.integers(0, 2**32 - 1))
def test_select_beam_is_argmax(brg, seed):
    beams = sector_beams(180.0)
    jitter = BeamJitter.draw(np.random.default_rng(seed), beams, 2.0, 2.0)
    assert select_beam(beams, brg, jitter) == brute_force(beams, brg, jitter)
    assert select_beam(beams, brg) == brute_force(beams, brg)


def test_beam_gain_relative_to_peak():
    beams = sector_beams(180.0)
    ssb, k = select_beam(beams, 187.5)
    assert beam_gain(beams, ssb, k, 187.5) <= 0.0
    assert beam_gain(beams, ssb, k, 187.5) >= -3.0  # refinement edge


def test_bearing_and_angles():
    assert bearing((0, 0), (0, -10)) == pytest.approx(180)
    assert bearing((0, 0), (10, 0)) == pytest.approx(90)
    assert angle_diff(350, 10) == pytest.approx(20)


def test_cpe_penalty():
    cpe = CpeAntenna()
    assert cpe.penalty(0, 0) == 0
    assert cpe.penalty(0, 30) == pytest.approx(3.0)
    assert cpe.penalty(0, 180) == 20.0


def test_fr1_access_caps():
    cfg = fr1_default()
    m, _ = adapt(cfg, Direction.DL, sinr(cfg, -60.0, Direction.DL))
    assert m >= 26  # near the top of the 64QAM table at short range
