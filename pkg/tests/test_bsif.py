import numpy as np
import pytest

from conftest import as_patch_code, random_patch_code
from oracles import naive_hamming
from pbm import bsif
from pbm.bsif import (
    FilterBank,
    UnusablePatchError,
    encode,
    extract_patch_code,
    hamming_masked,
    load_filter_bank,
    pack_rows,
    save_filter_bank,
    synthetic_filter_bank,
    unpack_rows,
)


# -- packing -----------------------------------------------------------------


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(30):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 200))
        bits = rng.integers(0, 2, (h, w)).astype(bool)
        assert np.array_equal(unpack_rows(pack_rows(bits), w), bits)


def test_extract_cols_matches_bool_slicing():
    rng = np.random.default_rng(1)
    for _ in range(60):
        w = int(rng.integers(1, 200))
        bits = rng.integers(0, 2, (3, w)).astype(bool)
        packed = pack_rows(bits)
        c0 = int(rng.integers(0, w))
        n = int(rng.integers(1, w - c0 + 1))
        got = unpack_rows(bsif._extract_cols(packed, c0, n), n)
        assert np.array_equal(got, bits[:, c0 : c0 + n])


# -- filter bank -------------------------------------------------------------


def test_bank_roundtrip_5x17(tmp_path):
    bank = synthetic_filter_bank(5, 17, seed=3)
    path = tmp_path / "bank.txt"
    save_filter_bank(bank, path)
    header = path.read_text().splitlines()[0]
    assert header == "BSIF 5 17 v1"
    loaded = load_filter_bank(path)
    assert loaded.n_filters == 5 and loaded.size == 17
    assert np.array_equal(loaded.coefficients, bank.coefficients)


def test_bank_single_identity_filter(tmp_path):
    path = tmp_path / "one.txt"
    path.write_text("BSIF 1 1 v1\n1.0\n")
    bank = load_filter_bank(path)
    assert bank.n_filters == 1 and bank.size == 1
    assert bank.coefficients[0, 0, 0] == 1.0


def test_bank_even_size_rejected(tmp_path):
    path = tmp_path / "even.txt"
    path.write_text("BSIF 2 4 v1\n" + " ".join(["0.1"] * 32) + "\n")
    with pytest.raises(ValueError, match="odd"):
        load_filter_bank(path)


@pytest.mark.parametrize(
    "content",
    [
        "",  # empty
        "FOO 5 17 v1\n0.0",  # wrong magic
        "BSIF 5 17\n0.0",  # missing version
        "BSIF x 17 v1\n0.0",  # non-integer
        "BSIF 1 3 v1\n1.0 2.0\n",  # count mismatch (needs 9)
    ],
)
def test_bank_malformed_files(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(ValueError):
        load_filter_bank(path)


def test_bank_invariants():
    with pytest.raises(ValueError):
        FilterBank(np.zeros((2, 4, 4)))  # even
    with pytest.raises(ValueError):
        FilterBank(np.full((1, 3, 3), np.nan))  # non-finite


# -- encode ------------------------------------------------------------------


def _one_by_one_bank(value):
    return FilterBank(np.array([[[value]]], dtype=np.float64))


def test_encode_binarization_strictly_positive():
    img = np.array([[0, 10, 200]], dtype=np.uint8)
    mask = np.ones((1, 3), bool)
    code = encode(img, mask, _one_by_one_bank(1.0))
    assert code.plane_bits(0).tolist() == [[False, True, True]]
    code_neg = encode(np.array([[10]], dtype=np.uint8), np.ones((1, 1), bool), _one_by_one_bank(-1.0))
    assert code_neg.plane_bits(0).tolist() == [[False]]


def test_encode_matches_naive_convolution_oracle():
    # hand-picked 6x6 integer image and zero-mean 3x3 integer filter: every
    # response is an exact integer, so sign comparisons are unambiguous
    img = np.array(
        [
            [10, 200, 30, 40, 50, 60],
            [70, 80, 90, 100, 110, 120],
            [130, 5, 150, 160, 170, 180],
            [190, 200, 210, 220, 230, 240],
            [250, 240, 230, 220, 210, 200],
            [190, 180, 170, 160, 150, 140],
        ],
        dtype=np.uint8,
    )
    kern = np.array([[1, -2, 1], [0, 0, 0], [-1, 2, -1]], dtype=np.float64)
    code = encode(img, np.ones((6, 6), bool), FilterBank(kern[None]))

    expected = np.zeros((6, 6), bool)
    r = 1
    for y in range(6):
        for x in range(6):
            s = 0.0
            for i in range(3):
                for j in range(3):
                    yy, xx = y + i - r, x + j - r
                    if 0 <= yy < 6 and 0 <= xx < 6:
                        s += kern[i, j] * float(img[yy, xx])
            expected[y, x] = s > 0
    assert np.array_equal(code.plane_bits(0), expected)


def test_encode_valid_mask_definition():
    mask = np.ones((8, 9), bool)
    mask[2, 3] = False
    bank = synthetic_filter_bank(2, 3, seed=5)
    code = encode(np.zeros((8, 9), np.uint8), mask, bank)
    inside = np.zeros((8, 9), bool)
    inside[1:-1, 1:-1] = True
    assert np.array_equal(code.valid, inside & mask)


def test_encode_deterministic(bank_small):
    rng = np.random.default_rng(6)
    img = rng.integers(0, 256, (40, 40)).astype(np.uint8)
    mask = rng.random((40, 40)) < 0.8
    a = encode(img, mask, bank_small)
    b = encode(img, mask, bank_small)
    assert np.array_equal(a.planes, b.planes) and np.array_equal(a.valid, b.valid)


def test_encode_masked_region_never_valid(bank_small):
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, (30, 30)).astype(np.uint8)
    mask = np.zeros((30, 30), bool)
    mask[5:20, 5:20] = True
    code = encode(img, mask, bank_small)
    assert not code.valid[~mask].any()


def test_encode_sign_flip_property():
    # integer-valued responses: flipping all coefficients flips exactly the
    # nonzero-response bits; zero responses stay 0 under the strict rule
    rng = np.random.default_rng(8)
    img = rng.integers(0, 256, (12, 12)).astype(np.uint8)
    img[6:, :] = 100  # constant block forces some exact-zero responses
    mask = np.ones((12, 12), bool)
    kern = rng.integers(-3, 4, (1, 3, 3)).astype(np.float64)
    kern[0, 1, 1] -= kern.sum()  # zero-sum, still integer-valued
    pos = encode(img, mask, FilterBank(kern))
    neg = encode(img, mask, FilterBank(-kern))
    resp = np.zeros((12, 12))
    r = 1
    for y in range(12):
        for x in range(12):
            s = 0.0
            for i in range(3):
                for j in range(3):
                    yy, xx = y + i - r, x + j - r
                    if 0 <= yy < 12 and 0 <= xx < 12:
                        s += kern[0, i, j] * float(img[yy, xx])
            resp[y, x] = s
    bits_pos = pos.plane_bits(0)
    bits_neg = neg.plane_bits(0)
    nonzero = resp != 0
    assert np.array_equal(bits_neg, (~bits_pos) & nonzero)
    assert not bits_pos[~nonzero].any() and not bits_neg[~nonzero].any()


def test_encode_dimension_mismatch():
    with pytest.raises(ValueError):
        encode(np.zeros((4, 4), np.uint8), np.ones((4, 5), bool), _one_by_one_bank(1.0))


# -- patch extraction --------------------------------------------------------


def test_extract_full_rectangle_equals_whole_code(bank_small):
    rng = np.random.default_rng(9)
    img = rng.integers(0, 256, (20, 26)).astype(np.uint8)
    mask = rng.random((20, 26)) < 0.9
    code = encode(img, mask, bank_small)
    patch = extract_patch_code(code, np.ones((20, 26), bool))
    assert patch.origin == (0, 0)
    assert (patch.height, patch.width) == (20, 26)
    assert np.array_equal(patch.planes, code.planes)
    assert np.array_equal(patch.usable, code.valid)


def test_extract_no_valid_overlap_raises(bank_small):
    img = np.zeros((20, 20), np.uint8)
    mask = np.zeros((20, 20), bool)
    mask[8:12, 8:12] = True
    code = encode(img, mask, bank_small)
    shape = np.zeros((20, 20), bool)
    shape[0, 0] = shape[0, 1] = shape[1, 0] = True  # in the eroded border
    with pytest.raises(UnusablePatchError):
        extract_patch_code(code, shape)


def test_extract_l_shape_crops_to_bbox(bank_small):
    rng = np.random.default_rng(10)
    img = rng.integers(0, 256, (30, 30)).astype(np.uint8)
    code = encode(img, np.ones((30, 30), bool), bank_small)
    shape = np.zeros((30, 30), bool)
    shape[10:20, 10:13] = True
    shape[17:20, 10:22] = True  # L
    patch = extract_patch_code(code, shape)
    assert patch.origin == (10, 10)
    assert (patch.height, patch.width) == (10, 12)
    assert np.array_equal(patch.usable, (shape & code.valid)[10:20, 10:22])
    for k in range(code.n_planes):
        assert np.array_equal(patch.plane_bits(k), code.plane_bits(k)[10:20, 10:22])


# -- hamming -----------------------------------------------------------------


def test_hamming_self_is_zero():
    rng = np.random.default_rng(11)
    planes, mask = random_patch_code(rng, 5, 9, 9)
    patch = as_patch_code(planes, mask)
    d, ov = hamming_masked(patch, patch, (0, 0))
    assert d == 0.0 and ov == patch.area


def test_hamming_complement_is_one():
    rng = np.random.default_rng(12)
    planes = rng.integers(0, 2, (5, 4, 4)).astype(bool)
    full = np.ones((4, 4), bool)
    a = as_patch_code(planes, full)
    b = as_patch_code(~planes, full)
    d, ov = hamming_masked(a, b, (0, 0))
    assert d == 1.0 and ov == 16


def test_hamming_empty_overlap_sentinel():
    rng = np.random.default_rng(13)
    planes, mask = random_patch_code(rng, 2, 4, 4, fill=1.0)
    patch = as_patch_code(planes, np.ones((4, 4), bool))
    d, ov = hamming_masked(patch, patch, (10, 0))
    assert ov == 0 and np.isnan(d)


def test_hamming_plane_count_mismatch():
    rng = np.random.default_rng(14)
    a = as_patch_code(*random_patch_code(rng, 2, 4, 4))
    b = as_patch_code(*random_patch_code(rng, 3, 4, 4))
    with pytest.raises(ValueError):
        hamming_masked(a, b, (0, 0))


def test_hamming_matches_unpacked_oracle_randomized():
    rng = np.random.default_rng(15)
    for _ in range(300):
        planes_a, mask_a = random_patch_code(rng, 5, 9, 9)
        planes_b, mask_b = random_patch_code(rng, 5, 9, 9)
        a = as_patch_code(planes_a, mask_a)
        b = as_patch_code(planes_b, mask_b)
        dx, dy = int(rng.integers(-9, 9)), int(rng.integers(-9, 9))
        d, ov = hamming_masked(a, b, (dx, dy))
        diff_o, ov_o = naive_hamming(planes_a, mask_a, planes_b, mask_b, dx, dy)
        assert ov == ov_o
        if ov_o == 0:
            assert np.isnan(d)
        else:
            assert d == diff_o / (5 * ov_o)


def test_hamming_symmetric_under_negated_offset():
    rng = np.random.default_rng(16)
    for _ in range(100):
        a = as_patch_code(*random_patch_code(rng, 3, int(rng.integers(1, 12)), int(rng.integers(1, 12))))
        b = as_patch_code(*random_patch_code(rng, 3, int(rng.integers(1, 12)), int(rng.integers(1, 12))))
        dx, dy = int(rng.integers(-10, 10)), int(rng.integers(-10, 10))
        d1, o1 = hamming_masked(a, b, (dx, dy))
        d2, o2 = hamming_masked(b, a, (-dx, -dy))
        assert o1 == o2
        assert (np.isnan(d1) and np.isnan(d2)) or d1 == d2


def test_hamming_wide_patches_cross_word_boundaries():
    rng = np.random.default_rng(17)
    planes_a, mask_a = random_patch_code(rng, 2, 3, 150, fill=0.9)
    planes_b, mask_b = random_patch_code(rng, 2, 3, 150, fill=0.9)
    a = as_patch_code(planes_a, mask_a)
    b = as_patch_code(planes_b, mask_b)
    for dx in (-149, -70, -64, -63, -1, 0, 1, 63, 64, 65, 149):
        d, ov = hamming_masked(a, b, (dx, 0))
        diff_o, ov_o = naive_hamming(planes_a, mask_a, planes_b, mask_b, dx, 0)
        assert ov == ov_o
        if ov_o:
            assert d == diff_o / (2 * ov_o)
