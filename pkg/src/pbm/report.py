"""Human-readable match evidence as deterministic SVG documents.

Detections are outlined in cyan; accepted feature pairs are linked across the
two canvases by dark blue lines anchored at usable-pixel centroids. Element
order and number formatting are fixed so renders are byte-stable and golden-
testable.
"""

from __future__ import annotations

import base64
import io
import numpy as np
from PIL import Image

from .detection import DetectionSet
from .imaging import check_image
from .matching import ComparisonResult

DETECTION_COLOR = "#00e5e5"
LINK_COLOR = "#00008b"
TEXT_COLOR = "#111111"
CAPTION_BAND = 44
GAP = 16


def _png_data_uri(img: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(check_image(img), mode="L").save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


def _fmt(v: float) -> str:
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _polygon_points(polygon, dx: float = 0.0) -> str:
    return " ".join(f"{_fmt(x + dx)},{_fmt(y)}" for x, y in polygon)


def _check_in_canvas(polygon, width: int, height: int) -> None:
    for x, y in polygon:
        if not (0 <= x <= width and 0 <= y <= height):
            raise ValueError(f"polygon coordinate ({x}, {y}) outside the {width}x{height} canvas")


def render_detections(img: np.ndarray, detections: DetectionSet) -> str:
    """One outlined polygon per detection over the image backdrop."""
    img = check_image(img)
    h, w = img.shape
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<image x="0" y="0" width="{w}" height="{h}" href="{_png_data_uri(img)}"/>',
    ]
    for det in detections.detections:
        _check_in_canvas(det.polygon, w, h)
        parts.append(
            f'<polygon points="{_polygon_points(det.polygon)}" fill="none" '
            f'stroke="{DETECTION_COLOR}" stroke-width="1.5"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_comparison(result: ComparisonResult, img_a: np.ndarray, img_b: np.ndarray) -> str:
    """Side-by-side evidence: matched patch outlines, pair links, score caption."""
    img_a = check_image(img_a)
    img_b = check_image(img_b)
    ha, wa = img_a.shape
    hb, wb = img_b.shape
    width = wa + GAP + wb
    height = max(ha, hb) + CAPTION_BAND
    bx = wa + GAP
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<image x="0" y="0" width="{wa}" height="{ha}" href="{_png_data_uri(img_a)}"/>',
        f'<image x="{bx}" y="0" width="{wb}" height="{hb}" href="{_png_data_uri(img_b)}"/>',
    ]
    for pair in result.pairs:
        if pair.polygon_a is None or pair.polygon_b is None \
                or pair.centroid_a is None or pair.centroid_b is None:
            raise ValueError(f"pair {pair.id_a}/{pair.id_b} carries no geometry to render")
        _check_in_canvas(pair.polygon_a, wa, ha)
        _check_in_canvas(pair.polygon_b, wb, hb)
        parts.append(
            f'<polygon points="{_polygon_points(pair.polygon_a)}" fill="none" '
            f'stroke="{DETECTION_COLOR}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<polygon points="{_polygon_points(pair.polygon_b, dx=bx)}" fill="none" '
            f'stroke="{DETECTION_COLOR}" stroke-width="1.5"/>'
        )
    for pair in result.pairs:
        x1, y1 = pair.centroid_a
        x2, y2 = pair.centroid_b
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2 + bx)}" y2="{_fmt(y2)}" '
            f'stroke="{LINK_COLOR}" stroke-width="1.5"/>'
        )
    ty = max(ha, hb) + 18
    if result.no_evidence:
        caption = "no matching evidence (sentinel score 0.5000)"
    else:
        caption = f"score {result.score:.4f} from {len(result.pairs)} feature pair(s)"
    parts.append(f'<text x="8" y="{ty}" font-family="monospace" font-size="13" '
                 f'fill="{TEXT_COLOR}">{caption}</text>')
    footer = " ".join(f"{k}={result.params[k]}" for k in sorted(result.params))
    if footer:
        parts.append(f'<text x="8" y="{ty + 18}" font-family="monospace" font-size="10" '
                     f'fill="{TEXT_COLOR}">{footer}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
