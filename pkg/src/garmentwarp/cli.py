"""Command-line entry point: ``garmentwarp <subcommand> [flags]``.

Failures print a JSON object ``{"error": ..., "stage": ...}`` on stderr and
exit with status 1; usage errors exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import compositor, glitch, metrics, pipeline, predictor
from .imaging import SegMask, read_image, read_label_map, read_mask, write_image, write_mask
from .landmarks import (
    ControlPairs,
    denormalize_landmarks,
    load_annotation,
    normalize_landmarks,
    save_annotation,
    serialize_annotation,
)
from .tps import DEFAULT_LAMBDA, fit_tps
from .warp import warp_image, warp_points

OUT_ENV = "GARMENTWARP_OUT"


def _default_out(name):
    return os.path.join(os.environ.get(OUT_ENV, "."), name)


def _parent(path):
    """Create the directory holding ``path`` and return ``path``."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return path


def _emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        with open(_parent(out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _read_pairs(path) -> ControlPairs:
    obj = _read_json(path)
    return ControlPairs(np.asarray(obj["source"], float), np.asarray(obj["target"], float))


def _r6(a):
    return np.round(np.asarray(a, dtype=np.float64), 6).tolist()


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit_tps(args):
    t = fit_tps(_read_pairs(args.pairs), args.lam)
    text = t.to_json() + "\n"
    if args.out:
        with open(_parent(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_warp(args):
    src = read_image(args.image)
    dims = (args.width or src.width, args.height or src.height)
    write_image(warp_image(src, _read_pairs(args.pairs), args.lam, dims), _parent(args.out))


def cmd_warp_points(args):
    pts = np.asarray(_read_json(args.points), dtype=np.float64).reshape(-1, 2)
    _emit(_r6(warp_points(_read_pairs(args.pairs), args.lam, pts)), args.out)


def cmd_perturb(args):
    ann = normalize_landmarks(load_annotation(args.annotation))
    if ann.fashion_landmarks is None:
        raise ValueError("annotation has no fashion landmarks to perturb")
    cfg = glitch.PerturbConfig(args.variance, args.seed)
    moved = glitch.perturb_landmarks(ann.fashion_landmarks, cfg)
    out = denormalize_landmarks(
        type(ann)(ann.image_path, ann.width, ann.height, ann.human_landmarks, moved, ann.coordinate_space)
    )
    if args.out:
        save_annotation(out, _parent(args.out))
    else:
        sys.stdout.buffer.write(serialize_annotation(out))


def cmd_gen_samples(args):
    label_cfg = compositor.LabelConfig()
    items = []
    for image_path, parsing_path, ann_path in args.sample:
        img = read_image(image_path)
        mask = compositor.garment_mask(read_label_map(parsing_path), label_cfg)
        ann = normalize_landmarks(load_annotation(ann_path))
        if ann.fashion_landmarks is None:
            raise ValueError(f"{ann_path}: no fashion landmarks")
        items.extend([(img, mask, ann.fashion_landmarks)] * args.count)
    cfg = glitch.PerturbConfig(args.variance, args.seed, args.dilate)
    manifests = glitch.generate_samples(items, cfg, args.mode, args.out, workers=args.workers)
    _emit({"samples": len(manifests), "mode": args.mode, "out": args.out})


def _load_pair_manifest(path):
    obj = _read_json(path)
    base = os.path.dirname(os.path.abspath(path))
    pairs = []
    for a, b in obj["pairs"]:
        pairs.append(
            (
                normalize_landmarks(load_annotation(os.path.join(base, a))),
                normalize_landmarks(load_annotation(os.path.join(base, b))),
            )
        )
    return predictor.PoseDataset.from_annotation_pairs(pairs)


def cmd_train_predictor(args):
    data = _load_pair_manifest(args.pairs)
    cfg = predictor.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed, target_loss=args.target_loss
    )
    result = predictor.train(data, cfg)
    predictor.write_model(result.model, _parent(args.out))
    _emit(
        {
            "model": args.out,
            "samples": len(data),
            "epochs_run": len(result.losses),
            "final_loss": result.final_loss,
            "losses": result.losses,
            "config": {
                "epochs": cfg.epochs,
                "batch_size": cfg.batch_size,
                "seed": cfg.seed,
                "lr": cfg.lr,
                "beta1": cfg.beta1,
                "beta2": cfg.beta2,
            },
        },
        args.report,
    )


def cmd_predict_landmarks(args):
    model = predictor.read_model(args.model)
    m = normalize_landmarks(load_annotation(args.model_annotation))
    p = normalize_landmarks(load_annotation(args.person_annotation))
    if m.fashion_landmarks is None:
        raise ValueError("model annotation has no fashion landmarks")
    pred = predictor.forward(model, m.human_landmarks, p.human_landmarks, m.fashion_landmarks)
    out = denormalize_landmarks(
        type(p)(p.image_path, p.width, p.height, p.human_landmarks, pred, p.coordinate_space)
    )
    if args.out:
        save_annotation(out, _parent(args.out))
    else:
        sys.stdout.buffer.write(serialize_annotation(out))


def cmd_compose(args):
    person = read_image(args.person)
    cloth = read_image(args.cloth)
    upper = compositor.upper_body_mask(read_label_map(args.parsing))
    target = read_mask(args.mask) if args.mask else SegMask.from_alpha(cloth)
    agnostic = compositor.build_person_agnostic(person, upper)
    combined = compositor.combined_representation(agnostic, cloth)
    output = compositor.convex_combine(cloth, combined, target)
    os.makedirs(args.out, exist_ok=True)
    write_image(agnostic, os.path.join(args.out, "agnostic.png"))
    write_image(combined, os.path.join(args.out, "combined.png"))
    write_mask(target, os.path.join(args.out, "target_mask.png"))
    write_image(output, os.path.join(args.out, "output.png"))
    _emit({"uncovered_pixels": compositor.uncovered_pixels(upper, cloth, target), "out": args.out})


def cmd_metric(args):
    cfg = metrics.SsimConfig(window=args.window)
    if os.path.isdir(args.a) and os.path.isdir(args.b):
        names = sorted(n for n in os.listdir(args.a) if n.lower().endswith(".png"))
        missing = [n for n in names if not os.path.exists(os.path.join(args.b, n))]
        if missing:
            raise ValueError(f"missing in {args.b}: {missing}")

        def one(n):
            return metrics.metric_report(
                read_image(os.path.join(args.a, n)), read_image(os.path.join(args.b, n)), cfg
            )

        with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
            reports = list(pool.map(one, names))
        _emit({"items": dict(zip(names, reports))}, args.out)
    else:
        _emit(metrics.metric_report(read_image(args.a), read_image(args.b), cfg), args.out)


def cmd_tryon(args):
    conf = _read_json(args.config) if args.config else {}
    overrides = {
        "lam": args.lam,
        "window": args.window,
        "variance": args.variance,
        "dilation_radius": args.dilate,
        "seed": args.seed,
        "out_dir": args.out,
    }
    conf.update({k: v for k, v in overrides.items() if v is not None})
    conf.setdefault("out_dir", _default_out("tryon"))
    cfg = pipeline.PipelineConfig.from_dict(conf)
    model = predictor.read_model(args.predictor) if args.predictor else None
    result = pipeline.run_pipeline(
        model_annotation=load_annotation(args.model_annotation),
        person_annotation=load_annotation(args.person_annotation),
        model_image=read_image(args.model_image),
        model_parsing=read_label_map(args.model_parsing),
        person_image=read_image(args.person_image),
        person_parsing=read_label_map(args.person_parsing) if args.person_parsing else None,
        predictor=model,
        cfg=cfg,
        external_mask=read_mask(args.mask) if args.mask else None,
    )
    _emit({"out": cfg.out_dir, "metrics": result.metrics})


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="garmentwarp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="subcommand", required=True)

    def lam(sp, default=DEFAULT_LAMBDA):
        sp.add_argument("--lambda", dest="lam", type=float, default=default,
                        help=f"TPS regularization (default {DEFAULT_LAMBDA})")

    s = sub.add_parser("fit-tps", help="fit a TPS to control pairs and print it")
    s.add_argument("--pairs", required=True, help='JSON {"source": [[x,y],...], "target": [...]}')
    lam(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_tps)

    s = sub.add_parser("warp", help="warp an RGBA PNG along control pairs")
    s.add_argument("--image", required=True)
    s.add_argument("--pairs", required=True)
    s.add_argument("--width", type=int)
    s.add_argument("--height", type=int)
    lam(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_warp)

    s = sub.add_parser("warp-points", help="move points through the forward TPS")
    s.add_argument("--pairs", required=True)
    s.add_argument("--points", required=True, help="JSON [[x,y],...]")
    lam(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_warp_points)

    s = sub.add_parser("perturb", help="jitter an annotation's fashion landmarks")
    s.add_argument("--annotation", required=True)
    s.add_argument("--variance", type=float, default=glitch.DEFAULT_VARIANCE)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("gen-samples", help="write self-supervised training samples")
    s.add_argument("--sample", nargs=3, action="append", required=True,
                   metavar=("IMAGE", "PARSING", "ANNOTATION"))
    s.add_argument("--mode", choices=(glitch.MASK_GEN, glitch.SYNTH), default=glitch.MASK_GEN)
    s.add_argument("--count", type=int, default=1, help="samples per input")
    s.add_argument("--variance", type=float, default=glitch.DEFAULT_VARIANCE)
    s.add_argument("--dilate", type=int, default=glitch.DEFAULT_DILATION)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=_default_out("samples"))
    s.set_defaults(func=cmd_gen_samples)

    s = sub.add_parser("train-predictor", help="train the fashion-landmark predictor")
    s.add_argument("--pairs", required=True, help='JSON {"pairs": [[pose_a.json, pose_b.json], ...]}')
    s.add_argument("--epochs", type=int, default=predictor.DEFAULT_EPOCHS)
    s.add_argument("--batch-size", type=int, default=predictor.DEFAULT_BATCH)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target-loss", type=float)
    s.add_argument("--report", help="write the training report here instead of stdout")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_predictor)

    s = sub.add_parser("predict-landmarks", help="predict garment landmarks on a person")
    s.add_argument("--model", required=True)
    s.add_argument("--model-annotation", required=True)
    s.add_argument("--person-annotation", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_predict_landmarks)

    s = sub.add_parser("compose", help="composite a warped garment onto a person")
    s.add_argument("--person", required=True)
    s.add_argument("--parsing", required=True)
    s.add_argument("--cloth", required=True)
    s.add_argument("--mask", help="external target mask (grayscale PNG)")
    s.add_argument("--out", default=_default_out("compose"))
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("metric", help="SSIM / DSSIM / PSNR between two PNGs or directories")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--window", type=int, default=3)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_metric)

    s = sub.add_parser("tryon", help="run the full three-stage pipeline")
    s.add_argument("--model-annotation", required=True)
    s.add_argument("--person-annotation", required=True)
    s.add_argument("--model-image", required=True)
    s.add_argument("--model-parsing", required=True)
    s.add_argument("--person-image", required=True)
    s.add_argument("--person-parsing")
    s.add_argument("--predictor", help="predictor model file; omitted = keep garment landmarks")
    s.add_argument("--mask", help="external target mask (grayscale PNG)")
    s.add_argument("--config", help="JSON config; flags override it")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--window", type=int)
    s.add_argument("--variance", type=float)
    s.add_argument("--dilate", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_tryon)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except pipeline.StageError as exc:
        sys.stderr.write(json.dumps({"error": exc.message, "stage": exc.stage}) + "\n")
        return 1
    except (ValueError, KeyError, OSError, TypeError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "stage": args.command}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
