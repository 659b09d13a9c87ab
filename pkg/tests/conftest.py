import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pbm import bsif, synthetic


@pytest.fixture(scope="session")
def bank5():
    """The packaged 5x17 placeholder bank."""
    return bsif.load_filter_bank(bsif.default_filter_bank_path())


@pytest.fixture(scope="session")
def bank_small():
    """Cheap 3-filter 7x7 bank for pipeline tests."""
    return bsif.synthetic_filter_bank(n_filters=3, size=7, seed=11)


@pytest.fixture(scope="session")
def identity_fixture():
    """One synthetic sample: raw image, mask and crop-frame detections."""
    img, mask = synthetic.synthetic_iris(42)
    det = synthetic.detect_on_crop(img, mask, image_id="idfix", subject_id="s042")
    return img, mask, det


def random_patch_code(rng, n_planes, height, width, fill=0.75):
    from oracles import random_blob_mask

    planes = rng.integers(0, 2, (n_planes, height, width)).astype(bool)
    mask = random_blob_mask(rng, height, width, fill)
    return planes, mask


def as_patch_code(planes, mask):
    return bsif.PatchCode(bsif.pack_rows(planes), np.asarray(mask, bool), origin=(0, 0))
