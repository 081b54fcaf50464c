"""Command-line entry points: segment, render, classify, analyze, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import video_io
from .segmentation import SegmentationParams, stream_segment, write_label_map


def _add_segment(sub):
    p = sub.add_parser("segment", help="stream-segment a volume into a label-map hierarchy")
    p.add_argument("--input", required=True, help="SVXV volume, frame directory, or pattern")
    p.add_argument("--c", type=float, default=0.2, help="threshold constant, level 1")
    p.add_argument("--c-reg", type=float, default=10.0, help="threshold constant, higher levels")
    p.add_argument("--min", type=int, default=20, dest="min_size", help="region floor in voxels")
    p.add_argument("--sigma", type=float, default=0.4, help="spatial pre-smoothing")
    p.add_argument("--range", type=int, default=10, dest="stream_range", help="frames per window")
    p.add_argument("--levels", type=int, default=30, help="hierarchy level count")
    p.add_argument("--connectivity", type=int, default=6, choices=(6, 26))
    p.add_argument("--out", required=True, help="output directory for level_##.svxl files")


def _run_segment(args) -> int:
    volume = video_io.load_frames(args.input)
    params = SegmentationParams(c=args.c, c_reg=args.c_reg, min_size=args.min_size,
                                sigma=args.sigma, stream_range=args.stream_range,
                                hie_num=args.levels, connectivity=args.connectivity)
    hierarchy = stream_segment(volume, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for labeling in hierarchy.levels:
        write_label_map(labeling, out / f"level_{labeling.level_index:02d}.svxl")
    counts = {lab.level_index: lab.supervoxel_count for lab in hierarchy.levels}
    (out / "hierarchy.json").write_text(json.dumps(
        {"levels": hierarchy.depth, "supervoxel_counts": counts}, indent=1))
    print(f"wrote {hierarchy.depth} levels to {out}")
    return 0


def _add_render(sub):
    p = sub.add_parser("render", help="render a label map as colors or boundaries")
    p.add_argument("--labels", required=True, help="SVXL label map file")
    p.add_argument("--mode", choices=("colors", "boundaries"), default="colors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory (PPM frames) or .svxv file")


def _run_render(args) -> int:
    from .segmentation import read_label_map
    from .visualization import colorize, render_boundaries

    labeling = read_label_map(args.labels)
    video = colorize(labeling, args.seed) if args.mode == "colors" else render_boundaries(labeling)
    out = Path(args.out)
    if out.suffix == ".svxv":
        video_io.write_raw_volume(video, out)
    else:
        video_io.write_frames(video, out)
    print(f"rendered {args.mode} to {out}")
    return 0


def _add_classify(sub):
    p = sub.add_parser("classify", help="leave-one-out classification of a descriptor file")
    p.add_argument("--task", required=True, choices=("actor", "action"))
    p.add_argument("--features", required=True, help="plain-text descriptor file")
    p.add_argument("--classifier", choices=("nc", "knn"), default="nc")
    p.add_argument("--distance", choices=("euclidean", "chi2"), default="euclidean")
    p.add_argument("--knn-k", type=int, default=1)
    p.add_argument("--report", required=True, help="output JSON report")


def _run_classify(args) -> int:
    from .recognition import load_descriptor_file, loo_evaluate

    data = load_descriptor_file(args.features)
    classifier = "nearest-centroid" if args.classifier == "nc" else "knn"
    result = loo_evaluate(data, args.task, classifier=classifier,
                          distance=args.distance, knn_k=args.knn_k)
    Path(args.report).write_text(json.dumps(result.to_dict(), indent=1))
    print(f"{args.task} accuracy: {result.accuracy:.4f} ({result.classifier}, {result.distance})")
    return 0


def _add_analyze(sub):
    p = sub.add_parser("analyze", help="analyze a perception record log against ground truth")
    p.add_argument("--log", required=True, help="perception record log (NDJSON)")
    p.add_argument("--truth", required=True, help="dataset manifest JSON")
    p.add_argument("--matched", choices=("correct", "incorrect", "both"), default="both",
                   help="which responses feed the timing plots")
    p.add_argument("--out", required=True, help="output directory")


def _run_analyze(args) -> int:
    from .analysis import analyze_to_directory
    from .study import StudyDataset, load_records

    dataset = StudyDataset.from_manifest(args.truth)
    records = load_records(args.log)
    summary = analyze_to_directory(records, dataset, args.out, matched=args.matched)
    agg = summary["aggregate"]
    print(f"records: {agg['n']}  actor match: {agg['actor_rate']:.4f}  "
          f"action match: {agg['action_rate']:.4f}")
    print(f"reports in {args.out}")
    return 0


def _add_demo(sub):
    p = sub.add_parser("demo", help="build a synthetic 96-video study environment")
    p.add_argument("--out", required=True, help="output directory (assets + dataset.json)")
    p.add_argument("--seed", type=int, default=0)


def _run_demo(args) -> int:
    from .demo import build_demo_study

    manifest = build_demo_study(args.out, seed=args.seed)
    print(f"demo dataset manifest: {manifest}")
    return 0


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the perception-study HTTP service")
    p.add_argument("--dataset", required=True, help="dataset manifest JSON")
    p.add_argument("--assets", default=None, help="root directory of segmentation frame assets")
    p.add_argument("--log", required=True, help="perception record log path")
    p.add_argument("--ui", default=None, help="frontend directory to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)


def _run_serve(args) -> int:
    import uvicorn

    from .study import StudyDataset, StudyService, create_app

    dataset = StudyDataset.from_manifest(args.dataset)
    service = StudyService(dataset, log_path=args.log)
    app = create_app(service, assets_root=args.assets, ui_root=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="svx", description="supervoxel semantics laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_segment(sub)
    _add_render(sub)
    _add_classify(sub)
    _add_analyze(sub)
    _add_demo(sub)
    _add_serve(sub)
    args = parser.parse_args(argv)
    runners = {
        "segment": _run_segment,
        "render": _run_render,
        "classify": _run_classify,
        "analyze": _run_analyze,
        "demo": _run_demo,
        "serve": _run_serve,
    }
    return runners[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
