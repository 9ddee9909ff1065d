from __future__ import annotations

import io
import math

import numpy as np
import pytest

from qcldpc.analysis import null_space_basis
from qcldpc.base_matrix import build_full
from qcldpc.codec import (awgn_simulate, awgn_simulate_caps, bp_decode, bp_decode_caps, encode,
                          make_code, noise_sigma, osmlgd_decode, read_sim_csv, spa_decode)
from qcldpc.dispersion import BinaryMatrix, CpmArray, MaskMatrix, disperse, expand, mask, subarray
from qcldpc.field import build_field


def test_ex1_parameters(ex1_code):
    assert (ex1_code.n, ex1_code.k) == (225, 147)
    assert math.isclose(ex1_code.rate, 147 / 225)
    assert ex1_code.dmin_lower_bound == 15 and ex1_code.dmin_reason == "gamma_with_zms"
    assert ex1_code.col_weight_profile == {14: 225}


def test_dmin_tags(ex1_array):
    sub = subarray(ex1_array, [0, 1, 2], list(range(3, 15)))
    assert make_code(expand(sub), sub).dmin_reason == "gamma_plus_1"
    sub4 = subarray(disperse(build_full(build_field(16), 1, 15)), range(4), range(4, 15))
    assert make_code(expand(sub4), sub4).dmin_lower_bound == 6
    masked = mask(ex1_array, MaskMatrix.from_bits(np.ones((15, 15))))
    assert make_code(expand(masked), masked).dmin_reason == "min_col_weight_plus_1"
    assert make_code(expand(ex1_array)).dmin_lower_bound == 15


def test_even_gamma_zm_free_tag():
    h = CpmArray(np.arange(8).reshape(2, 4) % 7, 7)
    code = make_code(expand(h), h)
    assert code.dmin_reason == "gamma_plus_2_even" and code.dmin_lower_bound == 4


def test_identity_code_is_trivial():
    code = make_code(expand(CpmArray([[0]], 1)))
    assert (code.n, code.k) == (1, 0) and code.rate == 0.0
    assert encode(code, np.zeros(0, dtype=np.uint8)).tolist() == [0]


def test_encode_zero_and_linearity(ex1_code):
    rng = np.random.default_rng(3)
    assert not encode(ex1_code, np.zeros(147, dtype=np.uint8)).any()
    a, b = rng.integers(0, 2, size=(2, 147), dtype=np.uint8)
    assert np.array_equal(encode(ex1_code, a ^ b), encode(ex1_code, a) ^ encode(ex1_code, b))


def test_encode_random_messages_satisfy_checks(ex1_code):
    msgs = np.random.default_rng(4).integers(0, 2, size=(1000, 147), dtype=np.uint8)
    cws = encode(ex1_code, msgs)
    assert not ex1_code.syndrome(cws).any()
    dense = ex1_code.h.to_dense().astype(np.int64)
    assert not ((dense @ cws.T.astype(np.int64)) % 2).any()
    assert np.array_equal(cws[:, ex1_code.info_positions], msgs)


def test_encode_rejects_wrong_length(ex1_code):
    with pytest.raises(ValueError):
        encode(ex1_code, np.zeros(146, dtype=np.uint8))


def test_basis_matches_null_space(ex1_code):
    basis = ex1_code.basis()
    assert np.array_equal(basis, null_space_basis(ex1_code.h))
    assert np.array_equal(ex1_code.basis_weights(), basis.sum(axis=1))


def test_spa_clean_codeword(ex1_code):
    cw = encode(ex1_code, np.random.default_rng(5).integers(0, 2, 147, dtype=np.uint8))
    hard, iters, ok = spa_decode(ex1_code, 10.0 * (1 - 2.0 * cw))
    assert ok and iters == 1 and np.array_equal(hard, cw)


def test_spa_recovers_single_flip(ex1_code):
    llr = np.full(225, 4.0)
    llr[17] = -4.0
    hard, _, ok = spa_decode(ex1_code, llr)
    assert ok and not hard.any()


def test_spa_all_zero_llrs_terminates(ex1_code):
    hard, iters, ok = spa_decode(ex1_code, np.zeros(225), max_iters=5)
    assert hard.shape == (225,) and 1 <= iters <= 5
    assert ok == (not ex1_code.syndrome(hard).any())


@pytest.mark.parametrize("variant", ["spa", "minsum"])
def test_compiled_matches_numpy_engine(ex1_code, variant):
    sigma = noise_sigma(2.0, ex1_code.rate)
    llr = 2 * (1 + sigma * np.random.default_rng(6).standard_normal((300, 225))) / sigma ** 2
    a = bp_decode(ex1_code, llr, 20, variant, engine="compiled")
    b = bp_decode(ex1_code, llr, 20, variant, engine="numpy")
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert not a[2].all()  # some frames must exercise the full cap


def test_caps_equal_separate_runs(ex1_code):
    sigma = noise_sigma(1.5, ex1_code.rate)
    llr = 2 * (1 + sigma * np.random.default_rng(7).standard_normal((200, 225))) / sigma ** 2
    hard, iters, done = bp_decode_caps(ex1_code, llr, [10, 2, 5])
    for i, cap in enumerate([2, 5, 10]):
        h1, it1, d1 = bp_decode(ex1_code, llr, cap)
        assert np.array_equal(hard[i], h1) and np.array_equal(iters[i], it1)
        assert np.array_equal(done[i], d1)


def test_decoder_argument_validation(ex1_code):
    with pytest.raises(ValueError):
        bp_decode(ex1_code, np.zeros(225), 0)
    with pytest.raises(ValueError):
        bp_decode(ex1_code, np.zeros(225), 5, variant="bogus")
    with pytest.raises(ValueError):
        bp_decode_caps(ex1_code, np.zeros(225), [])


def test_osmlgd_clean_and_correcting(ex1_code):
    est, flips = osmlgd_decode(ex1_code, np.zeros(225, dtype=np.uint8))
    assert flips == 0 and not est.any()
    rng = np.random.default_rng(8)
    words = np.zeros((200, 225), dtype=np.uint8)
    for w in words:
        w[rng.choice(225, size=7, replace=False)] = 1
    est, _ = osmlgd_decode(ex1_code, words)
    assert not est.any()


def test_osmlgd_gf64_corrects_31_errors():
    fs = build_field(64)
    h = disperse(build_full(fs, 63, 1))
    code = make_code(expand(h), h)
    assert set(code.col_weight_profile) == {62}
    rng = np.random.default_rng(9)
    msgs = rng.integers(0, 2, size=(20, code.k), dtype=np.uint8)
    cws = encode(code, msgs)
    rx = cws.copy()
    for r in rx:
        r[rng.choice(code.n, size=31, replace=False)] ^= 1
    est, _ = osmlgd_decode(code, rx)
    assert np.array_equal(est, cws)


def test_simulation_is_deterministic(ex1_code):
    kw = dict(seed=11, max_frames=600, target_frame_errors=20, max_iters=10, block_size=200)
    a = awgn_simulate(ex1_code, "spa", [1.0, 2.0], **kw)
    b = awgn_simulate(ex1_code, "spa", [1.0, 2.0], **kw)
    assert a == b
    assert a.points[0].frame_errors >= 20
    c = awgn_simulate(ex1_code, "spa", [1.0, 2.0], **{**kw, "seed": 12})
    assert c != a


def test_simulation_random_messages(ex1_code):
    rep = awgn_simulate(ex1_code, "spa", [3.0], seed=2, max_frames=500, target_frame_errors=None,
                        all_zero=False)
    assert rep.points[0].frames == 500


def test_caps_report_matches_single_cap(ex1_code):
    kw = dict(seed=13, max_frames=1000, target_frame_errors=None)
    multi = awgn_simulate_caps(ex1_code, "spa", [2.0], [3, 8], **kw)
    single = awgn_simulate(ex1_code, "spa", [2.0], max_iters=3, **kw)
    assert multi[3] == single


def test_infinite_snr_no_errors(ex1_code):
    for dec in ("spa", "minsum", "osmlgd"):
        rep = awgn_simulate(ex1_code, dec, [math.inf], max_frames=200, target_frame_errors=None)
        assert rep.points[0].bit_errors == 0 and rep.points[0].frames == 200


def test_csv_round_trip(ex1_code):
    rep = awgn_simulate(ex1_code, "osmlgd", [4.0, 5.0], max_frames=400, max_iters=1)
    buf = io.StringIO()
    rep.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "ebno_db,frames,bit_errors,frame_errors,ber,bler,avg_iters"
    rows = read_sim_csv(io.StringIO(buf.getvalue()))
    assert [float(r["ebno_db"]) for r in rows] == [4.0, 5.0]
    assert int(rows[1]["frames"]) == rep.points[1].frames
    with pytest.raises(ValueError):
        read_sim_csv(io.StringIO("a,b\n1,2\n"))


def test_simulation_argument_errors(ex1_code):
    with pytest.raises(ValueError):
        awgn_simulate(ex1_code, "spa", [])
    with pytest.raises(ValueError):
        awgn_simulate(make_code(expand(CpmArray([[0]], 3))), "spa", [1.0])
    with pytest.raises(ValueError):
        awgn_simulate_caps(ex1_code, "osmlgd", [1.0], [1, 2])
    with pytest.raises(ValueError):
        awgn_simulate(ex1_code, "viterbi", [1.0])


def test_noise_sigma():
    assert math.isclose(noise_sigma(0.0, 0.5), 1.0)
    assert math.isclose(noise_sigma(10.0, 1.0), math.sqrt(1 / 20))
    assert noise_sigma(math.inf, 0.5) == 0.0


def test_binary_matrix_code_without_source():
    h = BinaryMatrix.from_dense([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]])
    code = make_code(h)
    assert code.k == 1 and code.basis().tolist() == [[1, 1, 1, 1]]
    assert code.dmin_reason == "min_col_weight_plus_1" and code.dmin_lower_bound == 2
