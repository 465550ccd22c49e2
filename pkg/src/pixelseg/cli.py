"""Command line entry point: new, synth, train, predict, eval.

Every config key can be overridden with a same-named flag (underscores
become dashes); precedence is flags over file over defaults, and overrides
only persist to config.txt with --save.  Progress goes to stderr, results
to files inside the project.  Exit codes: 0 ok, 1 usage error, 2 runtime
error.
"""

import argparse
import logging
import os
import shutil
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluate, network, postprocess, sampler, synth
from . import project as proj

log = logging.getLogger("pixelseg")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse wants to sys.exit(2) on bad usage; route it to exit code 1
    def error(self, message):
        raise _UsageError(message)


def _add_config_flags(p):
    for key in proj._PARSERS:
        p.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key,
                       default=None, metavar="V", help="override config key %s" % key)


def _build_parser():
    top = _Parser(prog="pixelseg", description=__doc__)
    sub = top.add_subparsers(dest="verb", metavar="verb")
    for verb, help_text in (
        ("new", "create an empty project folder tree"),
        ("synth", "fill the project with synthetic images + ground truth"),
        ("train", "fit the network on train_images/train_masks"),
        ("predict", "segment every image in test_images"),
        ("eval", "score predictions against ground-truth masks"),
    ):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("path", help="project directory")
        if verb != "new":
            _add_config_flags(p)
            p.add_argument("--save", action="store_true",
                           help="persist the merged config back to config.txt")
        if verb == "synth":
            p.add_argument("--images", type=int, default=4, metavar="N",
                           help="how many scenes to generate (default 4)")
            p.add_argument("--size", type=int, default=None, metavar="PX",
                           help="square canvas side (default %d)" % synth.SceneSpec().height)
        if verb == "predict":
            p.add_argument("--model", default=None, metavar="FILE",
                           help="checkpoint to load (default models/latest.ckpt)")
            p.add_argument("--threads", type=int, default=None, metavar="N",
                           help="worker threads across images (default: logical cores)")
    return top


def resolve_config(layout, args):
    """config.txt merged with any --key flags; flags win."""
    cfg = proj.load_config(layout.config_path)
    overrides = {}
    for key, parse in proj._PARSERS.items():
        raw = getattr(args, "cfg_" + key, None)
        if raw is not None:
            try:
                overrides[key] = parse(raw)
            except proj.ConfigError as exc:
                raise _UsageError("--%s: %s" % (key.replace("_", "-"), exc))
    try:
        merged = proj.config_overrides(cfg, **overrides)
    except proj.ConfigError as exc:
        if overrides:
            raise _UsageError(str(exc))
        raise
    if getattr(args, "save", False):
        proj.write_config(merged, layout.config_path)
        log.info("saved merged config to %s", layout.config_path)
    return merged


def _cmd_new(args):
    layout = proj.init_project(args.path)
    log.info("created project at %s (edit %s, then add images)",
             layout.root, layout.config_path)
    return 0


def _cmd_synth(args):
    layout = proj.ProjectLayout.require(args.path)
    cfg = resolve_config(layout, args)
    kwargs = {"seed": cfg.seed}
    if args.size is not None:
        base = synth.SceneSpec()
        ratio = (args.size * args.size) / float(base.height * base.width)
        # keep the default packing density when the canvas changes
        kwargs.update(
            height=args.size,
            width=args.size,
            n_min=max(1, round(base.n_min * ratio)),
            n_max=max(1, round(base.n_max * ratio)),
        )
    spec = synth.SceneSpec(**kwargs)
    n_train, n_test = synth.generate_dataset(spec, args.images, cfg.train_test_split, layout)
    log.info("generated %d training and %d test scenes under %s", n_train, n_test, layout.root)
    return 0


def _load_normalized_pairs(layout, cfg):
    pairs = proj.load_training_pairs(layout, cfg.connectivity)
    if not pairs:
        raise proj.ProjectError(
            "no usable training images in %s (need same-stem masks in %s)"
            % (layout.train_images, layout.train_masks)
        )
    images = [sampler.normalize_image(p.image, p.aoi) for p in pairs]
    labels = [p.labels for p in pairs]
    aois = [p.aoi for p in pairs]
    return pairs, images, labels, aois


def _cmd_train(args):
    layout = proj.ProjectLayout.require(args.path)
    cfg = resolve_config(layout, args)
    pairs, images, labels, aois = _load_normalized_pairs(layout, cfg)
    log.info("training on %d image(s): %s", len(pairs), ", ".join(p.stem for p in pairs))
    plan = sampler.build_sample_plan(labels, aois, cfg.fraction, cfg.balance,
                                     cfg.seed, cfg.augment)
    params, report = network.train(plan, images, labels, cfg, progress=log.info)
    log.info("E=%d F=%g M=%d T=%d EF=%g  (%.1fs)",
             report.epochs, report.fraction, report.m_available,
             report.t_samples, report.ef, report.wall_seconds)

    arch = network.Architecture(n_scales=len(cfg.scales))
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    ckpt = layout.models / ("ckpt_%s.ckpt" % stamp)
    network.save_checkpoint(params, arch, cfg, ckpt)
    shutil.copyfile(ckpt, layout.models / "latest.ckpt")
    # wall time stays out of the report file so repeat runs write identical bytes
    (layout.outputs / "train_report.txt").write_text(
        "\n".join(report.lines()) + "\n", encoding="utf-8"
    )
    log.info("checkpoint written to %s (alias latest.ckpt)", ckpt)
    return 0


def _predict_one(stem, img_path, layout, cfg, params):
    image = proj.load_image(img_path)
    aoi_path = proj.find_by_stem(layout.areas_of_interest, stem)
    if aoi_path is not None:
        aoi = proj.load_aoi(aoi_path)
        if aoi.shape != image.shape:
            raise ValueError("AOI shape %s does not match image %s for %r"
                             % (aoi.shape, image.shape, stem))
    else:
        aoi = np.ones(image.shape, bool)
    normalized = sampler.normalize_image(image, aoi)
    prob, dist, mask, labels = postprocess.segment_image(params, normalized, aoi, cfg)
    maps = {"prob": prob, "dist": dist, "mask": mask}
    written = postprocess.write_outputs(maps, labels, cfg.output_mode,
                                        layout.outputs, stem, cfg.dist_cap)
    log.info("predicted %s: %d regions, %d files", stem, int(labels.max()), len(written))
    return stem


def _cmd_predict(args):
    layout = proj.ProjectLayout.require(args.path)
    cfg = resolve_config(layout, args)
    model = Path(args.model) if args.model else layout.models / "latest.ckpt"
    if not model.is_file():
        raise proj.ProjectError("no checkpoint at %s; run train first" % model)
    params, _, _ = network.load_checkpoint(model, expect_scales=cfg.scales)
    todo = proj.list_images(layout.test_images)
    if not todo:
        log.warning("no images in %s, nothing to predict", layout.test_images)
        return 0
    threads = args.threads or os.cpu_count() or 1
    if threads <= 1 or len(todo) == 1:
        for stem, p in todo:
            _predict_one(stem, p, layout, cfg, params)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_predict_one, stem, p, layout, cfg, params)
                       for stem, p in todo]
            for f in futures:
                f.result()
    return 0


def _cmd_eval(args):
    layout = proj.ProjectLayout.require(args.path)
    cfg = resolve_config(layout, args)
    stems = [stem for stem, _ in proj.list_images(layout.test_images)]
    if not stems:
        raise proj.ProjectError("no images in %s, nothing to evaluate" % layout.test_images)
    truths = {}
    preds = {}
    missing_truth = []
    missing_pred = []
    for stem in stems:
        tpath = proj.find_by_stem(layout.train_masks, stem)
        if tpath is None:
            missing_truth.append(stem)
            continue
        ppath = layout.outputs / ("%s_labels.png" % stem)
        if not ppath.is_file():
            missing_pred.append(stem)
            continue
        truths[stem] = proj.load_labels(tpath, cfg.connectivity)
        preds[stem] = proj.load_labels(ppath, cfg.connectivity)
    if missing_truth:
        raise proj.ProjectError(
            "no ground-truth mask in %s for: %s"
            % (layout.train_masks, ", ".join(missing_truth))
        )
    if missing_pred:
        raise proj.ProjectError(
            "no prediction for: %s (run predict first)" % ", ".join(missing_pred)
        )
    report = evaluate.seg_report(truths, preds)
    out = layout.outputs / "seg_report.txt"
    out.write_text(report.to_text(), encoding="utf-8")
    for line in report.lines():
        log.info(line)
    log.info("report written to %s", out)
    return 0


_COMMANDS = {
    "new": _cmd_new,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
}


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            raise _UsageError("missing verb (new/synth/train/predict/eval)")
        return _COMMANDS[args.verb](args)
    except _UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except (proj.ConfigError, proj.ProjectError, network.CheckpointError,
            network.TrainingDivergedError, synth.PlacementError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
