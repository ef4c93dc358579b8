import numpy as np
import pytest

from cmos_snn.network import (DEFAULT_PARAMS, N_COLS, N_ROWS, Crossbar, calibrate_gain,
                              column_drive, delay_line, ideal_crossbar, infer, infer_batch,
                              load_weights, resolve_coincident, save_weights, train_all,
                              train_pattern, wta_fanout)
from cmos_snn.engine import SpikeTrain
from cmos_snn.patterns import DIGITS, TIE, noisy_array, oracle_classify_many

W = DEFAULT_PARAMS.wmap


def test_training_writes_the_digit_images(trained):
    pats = DIGITS.array()
    expected = np.where(pats.T == 1, W.v_hi, W.v_lo)
    assert trained.shape == (N_ROWS, N_COLS)
    assert np.array_equal(trained.v_g, expected)


def test_train_pattern_touches_only_its_column():
    xb = Crossbar.fresh()
    xb = train_pattern(xb, DIGITS[2].array(), 2)
    assert xb.mode == "train" and xb.column == 2
    others = np.delete(xb.v_g, 2, axis=1)
    assert np.all(others == W.v_lo)
    assert np.array_equal(xb.v_g[:, 2] == W.v_hi, DIGITS[2].array() == 1)


def test_train_all_equals_sequential_cycles(trained):
    xb = Crossbar.fresh()
    for j in range(N_COLS):
        xb = train_pattern(xb, DIGITS[j].array(), j)
    assert np.array_equal(xb.v_g, trained.v_g)


def test_short_training_is_partial_and_monotone():
    xb = train_pattern(Crossbar.fresh(), DIGITS[0].array(), 0, duration=4e-6)
    col = xb.v_g[:, 0]
    black = DIGITS[0].array() == 1
    assert np.all(col[black] > W.v_lo) and np.all(col[black] < W.v_hi)
    assert np.all(col[~black] == W.v_lo)


def test_set_mode_validation():
    xb = Crossbar.fresh()
    with pytest.raises(IndexError):
        xb.set_mode("train", 6)
    with pytest.raises(ValueError):
        xb.set_mode("sleep")
    assert xb.set_mode("infer").column is None


def test_clean_digits_win_without_rival_spikes(trained):
    r = infer_batch(trained, DIGITS.array())
    assert np.array_equal(r.verdict, np.arange(6))
    assert not r.tie.any()
    rivals = r.counts.sum(axis=1) - r.counts[np.arange(6), np.arange(6)]
    assert np.all(rivals == 0)
    assert np.all(r.latency < DEFAULT_PARAMS.infer_duration)


def test_single_infer_matches_batch(trained):
    r = infer(trained, DIGITS[4].array())
    assert int(r.verdict) == 4


def test_blank_pattern_gives_no_winner(trained):
    r = infer(trained, np.zeros(15, dtype=int))
    assert int(r.winner) == -1 and int(r.verdict) == -1 and np.isnan(r.latency)


def test_all_black_matches_oracle(trained):
    allb = np.ones((1, 15), dtype=int)
    assert int(infer_batch(trained, allb).verdict[0]) == int(oracle_classify_many(DIGITS, allb)[0])


@pytest.mark.parametrize("k", [1, 2])
def test_circuit_agrees_with_oracle(trained, k):
    _, _, pats = noisy_array(DIGITS, k)
    assert np.array_equal(infer_batch(trained, pats).verdict, oracle_classify_many(DIGITS, pats))


def test_column_drive_ranks_like_overlap(trained):
    _, _, pats = noisy_array(DIGITS, 1)
    drive = column_drive(trained, pats)
    overlap = pats @ DIGITS.array().T
    for d, o in zip(drive, overlap):
        assert np.argmax(d) in np.flatnonzero(o == o.max())


def test_ideal_crossbar_equals_trained(trained):
    assert np.array_equal(ideal_crossbar(DIGITS.array()).v_g, trained.v_g)


def test_default_gain_inside_calibrated_window():
    probes = np.vstack([noisy_array(DIGITS, k)[2] for k in (0, 1)])
    lo, hi = calibrate_gain(probes, DIGITS.array(), iters=20)
    assert lo < DEFAULT_PARAMS.summing.gain < hi


def test_wta_helpers():
    assert np.array_equal(wta_fanout([True, False, False]), [False, True, True])
    assert np.array_equal(wta_fanout([False, False]), [False, False])
    assert np.array_equal(wta_fanout([True, True]), [True, True])
    keep, tie = resolve_coincident(np.array([[True, True, False]]),
                                   np.array([[2e-9, 1e-9, np.nan]]), 1e-14)
    assert keep.tolist() == [[False, True, False]] and not tie[0]
    keep, tie = resolve_coincident(np.array([[True, True]]), np.array([[1e-9, 1e-9]]), 1e-14)
    assert keep.all() and tie[0]


def test_delay_line():
    t = delay_line(SpikeTrain((0.0, 1e-6), 1e-7), 1e-6)
    assert t.times == pytest.approx((1e-6, 2e-6))
    with pytest.raises(ValueError):
        delay_line(t, -1.0)


def test_weight_file_round_trip(tmp_path, trained):
    path = tmp_path / "w.csv"
    save_weights(path, trained)
    back = load_weights(path)
    assert np.array_equal(back.v_g, trained.v_g)
    (tmp_path / "bad.csv").write_text("1.2,1.3\n1.2\n")
    with pytest.raises(ValueError):
        load_weights(tmp_path / "bad.csv")
    (tmp_path / "high.csv").write_text("1.9,1.3\n")
    with pytest.raises(ValueError):
        load_weights(tmp_path / "high.csv")


def test_inference_trace_export(trained):
    res, raw = infer_batch(trained, DIGITS[1].array(), trace=("sum.v_ff", "output.v_u"),
                           decimation=50)
    assert int(res.verdict[0]) == 1
    v = raw.trace.array("output.v_u")
    assert v.shape == (20, 1, 6)
    assert np.all(v <= DEFAULT_PARAMS.output_neuron.v_sv)
    assert raw.spikes["output"][1].times[0] == pytest.approx(float(res.latency[0]))
    assert TIE == -1
