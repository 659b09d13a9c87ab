"""Command line interface: compare, eval, render, validate-detections,
make-bank, synth and serve subcommands."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bsif, detection, evaluation, matching, report, synthetic
from .imaging import ClaheParams, load_image, load_mask, preprocess


def _tile_grid(text: str):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tile grid must look like '8x8', got {text!r}")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filter-bank", type=Path, default=None,
                   help="filter bank file (default: packaged placeholder bank)")
    p.add_argument("--angle-tol", type=float, default=20.0)
    p.add_argument("--max-pairs", type=int, default=5)
    p.add_argument("--overlap-frac", type=float, default=0.5)
    p.add_argument("--top-n-detections", type=int, default=None)
    p.add_argument("--crop-side", type=int, default=256)
    p.add_argument("--clip-limit", type=float, default=2.0)
    p.add_argument("--tile-grid", type=_tile_grid, default=(8, 8))


def _pipeline_config(args) -> matching.PipelineConfig:
    return matching.PipelineConfig(
        crop_side=args.crop_side,
        clahe=ClaheParams(tile_grid=args.tile_grid, clip_limit=args.clip_limit),
        angle_tol=args.angle_tol,
        max_pairs=args.max_pairs,
        overlap_frac=args.overlap_frac,
        top_n_detections=args.top_n_detections,
    )


def _load_bank(args) -> bsif.FilterBank:
    path = args.filter_bank or bsif.default_filter_bank_path()
    return bsif.load_filter_bank(path)


def cmd_compare(args) -> int:
    bank = _load_bank(args)
    config = _pipeline_config(args)
    result = matching.compare(
        load_image(args.image_a), load_mask(args.mask_a), detection.parse_detections(args.det_a),
        load_image(args.image_b), load_mask(args.mask_b), detection.parse_detections(args.det_b),
        bank, config,
    )
    print(f"score {result.score:.6f}"
          + (" (no evidence)" if result.no_evidence else f" from {len(result.pairs)} pair(s)"))
    if args.out:
        Path(args.out).write_text(json.dumps(result.to_dict(), indent=1) + "\n")
    if args.svg:
        crop_a, _, _ = preprocess(load_image(args.image_a), load_mask(args.mask_a),
                                  config.crop_side, config.clahe)
        crop_b, _, _ = preprocess(load_image(args.image_b), load_mask(args.mask_b),
                                  config.crop_side, config.clahe)
        Path(args.svg).write_text(report.render_comparison(result, crop_a, crop_b))
    return 0


def cmd_eval(args) -> int:
    scores = evaluation.read_scores(args.scores)
    curve = evaluation.roc(scores, exclude_no_evidence=args.exclude_no_evidence)
    metrics = {
        "n_scores": len(scores),
        "exclude_no_evidence": args.exclude_no_evidence,
        "auc": evaluation.auc(curve),
        "eer": evaluation.eer(curve),
        "dprime": evaluation.dprime(scores, exclude_no_evidence=args.exclude_no_evidence),
    }
    for key in ("auc", "eer", "dprime"):
        print(f"{key:8s} {metrics[key]:.6f}")
    if args.json:
        Path(args.json).write_text(json.dumps(metrics, indent=1) + "\n")
    if args.roc_csv:
        evaluation.roc_to_csv(curve, args.roc_csv)
    if args.roc_svg:
        evaluation.roc_to_svg(curve, args.roc_svg)
    return 0


def cmd_render(args) -> int:
    result = matching.ComparisonResult.from_dict(json.loads(Path(args.result).read_text()))
    svg = report.render_comparison(result, load_image(args.image_a), load_image(args.image_b))
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return 0


def cmd_validate_detections(args) -> int:
    problems = detection.validate_detection_dict(json.loads(Path(args.path).read_text()))
    if problems:
        for p in problems:
            print(f"INVALID: {p}")
        return 1
    detection.parse_detections(args.path)
    print("OK")
    return 0


def cmd_make_bank(args) -> int:
    bank = bsif.synthetic_filter_bank(args.filters, args.size, args.seed)
    bsif.save_filter_bank(bank, args.out)
    print(f"wrote {args.out} ({bank.n_filters} filters of {bank.size}x{bank.size})")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    img_a, mask_a = synthetic.synthetic_iris(args.seed)
    if args.genuine:
        img_b, mask_b, _ = synthetic.perturbed_copy(img_a, mask_a, args.seed + 1)
        subject_b = "s000"
    else:
        img_b, mask_b = synthetic.synthetic_iris(args.seed + 1000)
        subject_b = "s001"
    det_a = synthetic.detect_on_crop(img_a, mask_a, image_id="a", subject_id="s000")
    det_b = synthetic.detect_on_crop(img_b, mask_b, image_id="b", subject_id=subject_b)
    synthetic.write_sample(out, "a", img_a, mask_a, det_a)
    synthetic.write_sample(out, "b", img_b, mask_b, det_b)
    print(f"wrote synthetic {'genuine' if args.genuine else 'impostor'} pair under {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import Store, TrialService, create_app

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    bank = _load_bank(args)
    service = TrialService(
        Store(data_dir / "log.jsonl"),
        data_dir,
        bank,
        seed=args.seed,
        config=_pipeline_config(args),
    )
    uvicorn.run(create_app(service), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="score one image pair and emit evidence")
    for side in ("a", "b"):
        p.add_argument(f"--image-{side}", required=True, type=Path)
        p.add_argument(f"--mask-{side}", required=True, type=Path)
        p.add_argument(f"--det-{side}", required=True, type=Path)
    _add_pipeline_flags(p)
    p.add_argument("--out", type=Path, default=None, help="write result JSON here")
    p.add_argument("--svg", type=Path, default=None, help="write evidence SVG here")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("eval", help="compute ROC/AUC/EER/d-prime from a score CSV")
    p.add_argument("--scores", required=True, type=Path)
    p.add_argument("--exclude-no-evidence", action="store_true")
    p.add_argument("--json", type=Path, default=None)
    p.add_argument("--roc-csv", type=Path, default=None)
    p.add_argument("--roc-svg", type=Path, default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("render", help="render a stored comparison result to SVG")
    p.add_argument("--result", required=True, type=Path)
    p.add_argument("--image-a", required=True, type=Path)
    p.add_argument("--image-b", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("validate-detections", help="check a detection file against the schema")
    p.add_argument("path", type=Path)
    p.set_defaults(fn=cmd_validate_detections)

    p = sub.add_parser("make-bank", help="write a placeholder random-projection filter bank")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--filters", type=int, default=5)
    p.add_argument("--size", type=int, default=17)
    p.add_argument("--seed", type=int, default=20240917)
    p.set_defaults(fn=cmd_make_bank)

    p = sub.add_parser("synth", help="generate a synthetic demo pair (images, masks, detections)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--genuine", action="store_true",
                   help="make the two sides the same identity")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("serve", help="run the trial/comparison HTTP service")
    p.add_argument("--host", default=os.environ.get("PBM_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("PBM_PORT", "8710")))
    p.add_argument("--data-dir", type=Path,
                   default=Path(os.environ.get("PBM_DATA_DIR", "./pbm-data")))
    p.add_argument("--seed", type=int, default=int(os.environ.get("PBM_SEED", "0")))
    _add_pipeline_flags(p)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
