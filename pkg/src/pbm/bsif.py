"""Binary texture codes: filter-bank IO, encoding, patch extraction and
bit-packed Hamming distance.

An iris code holds one binary response plane per filter (response strictly
greater than zero after zero-padded cross-correlation, filter centered on the
pixel, no kernel flip) plus a validity mask that excludes any pixel whose
filter footprint leaves the image bounds. Bit planes are row-packed into
64-bit words, LSB first; distances are population counts over word-wise XOR
restricted to the mutual usability overlap.

Filter-bank file format (version ``v1`` = cross-correlation orientation)::

    BSIF <n_filters> <size> v1
    <n_filters * size * size whitespace-separated reals,
     filter-major, row-major>
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from .imaging import check_image, check_mask


class UnusablePatchError(ValueError):
    """Raised when a patch shape has no overlap with the valid code region."""


# ---------------------------------------------------------------------------
# Bit packing


_BIT_WEIGHTS = np.uint64(1) << np.arange(64, dtype=np.uint64)


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack boolean rows into uint64 words, LSB first, stride padded to 64."""
    bits = np.asarray(bits, dtype=bool)
    width = bits.shape[-1]
    n_words = max(1, (width + 63) >> 6)
    padded = np.zeros(bits.shape[:-1] + (n_words * 64,), dtype=bool)
    padded[..., :width] = bits
    grouped = padded.reshape(bits.shape[:-1] + (n_words, 64)).astype(np.uint64)
    return (grouped * _BIT_WEIGHTS).sum(axis=-1, dtype=np.uint64)


def unpack_rows(words: np.ndarray, width: int) -> np.ndarray:
    """Inverse of :func:`pack_rows`."""
    bits = (words[..., None] >> np.arange(64, dtype=np.uint64)) & np.uint64(1)
    flat = bits.reshape(words.shape[:-1] + (words.shape[-1] * 64,))
    return flat[..., :width].astype(bool)


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def _extract_cols(packed: np.ndarray, c0: int, n_bits: int) -> np.ndarray:
    """Extract bit columns [c0, c0+n_bits) from row-packed words.

    ``c0`` must be >= 0; bits past the packed stride read as zero. Tail bits
    beyond ``n_bits`` in the last output word are cleared.
    """
    out_words = max(1, (n_bits + 63) >> 6)
    base = c0 >> 6
    shift = c0 & 63
    need = base + out_words + (1 if shift else 0)
    if need > packed.shape[-1]:
        pad = np.zeros(packed.shape[:-1] + (need - packed.shape[-1],), dtype=np.uint64)
        packed = np.concatenate([packed, pad], axis=-1)
    out = packed[..., base : base + out_words]
    if shift:
        hi = packed[..., base + 1 : base + 1 + out_words]
        out = (out >> np.uint64(shift)) | (hi << np.uint64(64 - shift))
    else:
        out = out.copy()
    tail = n_bits & 63
    if tail:
        out[..., -1] &= np.uint64((1 << tail) - 1)
    return out


# ---------------------------------------------------------------------------
# Filter bank


@dataclass(frozen=True)
class FilterBank:
    """Stack of square convolution kernels, shape (n_filters, size, size)."""

    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.ndim != 3 or coef.shape[1] != coef.shape[2]:
            raise ValueError(f"expected (n, size, size) coefficients, got {coef.shape}")
        if coef.shape[1] % 2 == 0:
            raise ValueError(f"filter size must be odd, got {coef.shape[1]}")
        if not np.isfinite(coef).all():
            raise ValueError("filter coefficients must be finite")
        object.__setattr__(self, "coefficients", coef)

    @property
    def n_filters(self) -> int:
        return self.coefficients.shape[0]

    @property
    def size(self) -> int:
        return self.coefficients.shape[1]

    @property
    def radius(self) -> int:
        return self.size // 2


def load_filter_bank(path) -> FilterBank:
    """Parse a ``BSIF <n> <size> v1`` text file into a FilterBank."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: empty filter-bank file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "BSIF" or header[3] != "v1":
        raise ValueError(f"{path}: malformed header {lines[0]!r}, expected 'BSIF <n> <size> v1'")
    try:
        n_filters, size = int(header[1]), int(header[2])
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer dimensions in header {lines[0]!r}") from exc
    if n_filters < 1 or size < 1:
        raise ValueError(f"{path}: dimensions must be positive, got {n_filters}x{size}")
    if size % 2 == 0:
        raise ValueError(f"{path}: filter size must be odd, got {size}")
    values = np.array(" ".join(lines[1:]).split(), dtype=np.float64)
    expected = n_filters * size * size
    if values.size != expected:
        raise ValueError(f"{path}: expected {expected} coefficients, found {values.size}")
    return FilterBank(values.reshape(n_filters, size, size))


def save_filter_bank(bank: FilterBank, path) -> None:
    rows = [f"BSIF {bank.n_filters} {bank.size} v1"]
    for filt in bank.coefficients:
        for row in filt:
            rows.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(rows) + "\n")


def synthetic_filter_bank(n_filters: int = 5, size: int = 17, seed: int = 20240917) -> FilterBank:
    """Zero-mean, unit-norm random projection bank.

    A statistical stand-in used by tests and demos; supply a learned bank file
    for real comparisons.
    """
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((n_filters, size, size))
    coef -= coef.mean(axis=(1, 2), keepdims=True)
    coef /= np.linalg.norm(coef, axis=(1, 2), ord="fro").reshape(-1, 1, 1)
    return FilterBank(coef)


def default_filter_bank_path() -> Path:
    return Path(__file__).parent / "data" / "bank_5x17.txt"


# ---------------------------------------------------------------------------
# Codes


class IrisCode:
    """Per-pixel code: packed bit planes plus the trustworthy-pixel mask."""

    __slots__ = ("planes", "valid", "width", "height")

    def __init__(self, planes: np.ndarray, valid: np.ndarray, width: int, height: int):
        self.planes = planes  # (n_planes, height, words) uint64
        self.valid = valid  # (height, width) bool
        self.width = width
        self.height = height

    @property
    def n_planes(self) -> int:
        return self.planes.shape[0]

    def plane_bits(self, k: int) -> np.ndarray:
        return unpack_rows(self.planes[k], self.width)


def encode(img: np.ndarray, mask: np.ndarray, bank: FilterBank) -> IrisCode:
    """Convolve, binarize (strictly positive) and pack per-filter bit planes.

    Valid pixels are those whose full filter footprint lies inside the image
    and that sit on the iris mask; border responses touched by zero-padding
    never enter a distance.
    """
    img = check_image(img)
    mask = check_mask(mask)
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} dimensions differ")
    h, w = img.shape
    fimg = img.astype(np.float64)
    planes = np.empty((bank.n_filters, h, max(1, (w + 63) >> 6)), dtype=np.uint64)
    for k in range(bank.n_filters):
        resp = ndimage.correlate(fimg, bank.coefficients[k], mode="constant", cval=0.0)
        planes[k] = pack_rows(resp > 0.0)
    r = bank.radius
    inside = np.zeros((h, w), dtype=bool)
    if h > 2 * r and w > 2 * r:
        inside[r : h - r, r : w - r] = True
    return IrisCode(planes, inside & mask, w, h)


class PatchCode:
    """Code planes of one detected patch, cropped to its shape bounding box."""

    __slots__ = ("planes", "usable", "usable_packed", "width", "height", "origin", "area")

    def __init__(self, planes: np.ndarray, usable: np.ndarray, origin: Tuple[int, int]):
        self.planes = planes  # (n_planes, height, words) uint64
        self.usable = usable  # (height, width) bool
        self.usable_packed = pack_rows(usable)
        self.height, self.width = usable.shape
        self.origin = origin  # (x0, y0) in code coordinates
        self.area = int(usable.sum())

    @property
    def n_planes(self) -> int:
        return self.planes.shape[0]

    def plane_bits(self, k: int) -> np.ndarray:
        return unpack_rows(self.planes[k], self.width)

    def signed_stack(self) -> np.ndarray:
        """Float stack [mask, per-plane ±1 masked bits] used by the alignment search."""
        m = self.usable.astype(np.float64)
        out = np.empty((self.n_planes + 1,) + self.usable.shape, dtype=np.float64)
        out[0] = m
        for k in range(self.n_planes):
            out[k + 1] = (2.0 * self.plane_bits(k) - 1.0) * m
        return out


def extract_patch_code(code: IrisCode, shape: np.ndarray) -> PatchCode:
    """Crop code planes to the shape's bounding box; usability = shape AND valid."""
    shape = check_mask(shape)
    if shape.shape != (code.height, code.width):
        raise ValueError(
            f"shape mask {shape.shape} does not match code dimensions "
            f"{(code.height, code.width)}"
        )
    usable_full = shape & code.valid
    if not usable_full.any():
        raise UnusablePatchError("patch shape has no usable pixels within the valid code region")
    ys, xs = np.nonzero(shape)
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    planes = _extract_cols(code.planes[:, y0:y1], x0, x1 - x0)
    return PatchCode(planes, usable_full[y0:y1, x0:x1], origin=(x0, y0))


# ---------------------------------------------------------------------------
# Distances


def hamming_masked(a: PatchCode, b: PatchCode, offset: Tuple[int, int]) -> Tuple[float, int]:
    """Mean fractional Hamming distance over the usability overlap.

    ``offset`` = (dx, dy) translates b within a's frame: a's pixel (x, y)
    faces b's pixel (x - dx, y - dy). Returns (distance, overlap_area);
    an empty overlap yields (nan, 0) — the undefined-distance sentinel.
    """
    if a.n_planes != b.n_planes:
        raise ValueError(f"plane count mismatch: {a.n_planes} != {b.n_planes}")
    dx, dy = offset
    ya0, ya1 = max(0, dy), min(a.height, b.height + dy)
    xa0, xa1 = max(0, dx), min(a.width, b.width + dx)
    if ya0 >= ya1 or xa0 >= xa1:
        return float("nan"), 0
    n_bits = xa1 - xa0
    yb0, xb0 = ya0 - dy, xa0 - dx
    ma = _extract_cols(a.usable_packed[ya0:ya1], xa0, n_bits)
    mb = _extract_cols(b.usable_packed[yb0 : yb0 + (ya1 - ya0)], xb0, n_bits)
    ov = ma & mb
    overlap_area = popcount(ov)
    if overlap_area == 0:
        return float("nan"), 0
    pa = _extract_cols(a.planes[:, ya0:ya1], xa0, n_bits)
    pb = _extract_cols(b.planes[:, yb0 : yb0 + (ya1 - ya0)], xb0, n_bits)
    total_diff = popcount((pa ^ pb) & ov)
    return total_diff / (a.n_planes * overlap_area), overlap_area


def alignment_maps(a: PatchCode, b: PatchCode) -> Tuple[np.ndarray, np.ndarray]:
    """Differing-bit and overlap counts for every integer translation of b.

    Returns (total_diff, overlap) int64 arrays indexed [dy + b.height - 1,
    dx + b.width - 1]; total_diff sums differing bits across planes. Counts
    are computed via ±1 cross-correlations (agreements minus disagreements),
    batched through one FFT, and rounded back to exact integers.
    """
    if a.n_planes != b.n_planes:
        raise ValueError(f"plane count mismatch: {a.n_planes} != {b.n_planes}")
    sa = a.signed_stack()
    sb = b.signed_stack()
    corr = fftconvolve(sa, sb[:, ::-1, ::-1], axes=(1, 2))
    counts = np.rint(corr).astype(np.int64)
    overlap = counts[0]
    signed_sum = counts[1:].sum(axis=0)
    total_diff = (a.n_planes * overlap - signed_sum) >> 1
    np.clip(total_diff, 0, None, out=total_diff)
    return total_diff, overlap
