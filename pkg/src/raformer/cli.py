"""Command-line harness: ``raformer {gen-masks,forward,eval,report}``.

Exit codes: 0 ok, 2 io, 3 config, 4 alignment, 5 schema.
Set ``RAF_THREADS`` to cap BLAS threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from raformer.config import ConfigError
from raformer.dataset_io import (ClipIOError, ClipManifestEntry, FormatError, ManifestError,
                                 load_clip, load_manifest, load_mask_sequence, write_image,
                                 write_manifest, write_mask_sequence)
from raformer.mask_synth import create_pp_mask, create_video_mask, create_wire_mask
from raformer.metrics import (CSV_HEADER, MetricReport, MetricRow, aggregate, psnr_star,
                              video_psnr, video_ssim)
from raformer.model import forward_clip
from raformer.runconfig import RunConfig, load_run_config
from raformer.tensor_core import Rng
from raformer.weights import init_model_weights, load_weights, save_weights

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_ALIGN, EXIT_SCHEMA = 0, 2, 3, 4, 5


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _echo(cfg: RunConfig, out_dir: Path | None) -> None:
    text = cfg.to_json()
    print(text)
    if out_dir is not None:
        (out_dir / "effective_config.json").write_text(text + "\n")


def _mkdir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot create {path}: {exc}") from exc
    return path


def _config(args, **overrides) -> RunConfig:
    try:
        return load_run_config(args.config, seed=args.seed, **overrides)
    except ConfigError as exc:
        raise CommandError(EXIT_CONFIG, f"config error: {exc}") from exc
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read config: {exc}") from exc


def _manifest(path) -> list[ClipManifestEntry]:
    try:
        return load_manifest(path)
    except ManifestError as exc:
        raise CommandError(EXIT_SCHEMA, f"manifest {path}: {exc}") from exc
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read manifest {path}: {exc}") from exc


def generate_mask_sequence(cfg: RunConfig):
    """Mask sequence for a run config, from a generator seeded by ``cfg.seed``."""
    rng = Rng(cfg.seed)
    canvas = (cfg.video.height, cfg.video.width)
    if cfg.video.kind == "pp":
        base = create_pp_mask(canvas, rng)
    else:
        base = create_wire_mask(cfg.wire, canvas, rng)
    return create_video_mask(base, cfg.video.len, cfg.wire.max_move, rng)


def cmd_gen_masks(args) -> int:
    cfg = _config(args, wire__num=args.num, video__len=args.len)
    try:
        cfg.wire.validate((cfg.video.height, cfg.video.width))
    except ValueError as exc:
        raise CommandError(EXIT_CONFIG, f"config error: {exc}") from exc
    out = _mkdir(args.out)
    _echo(cfg, out)
    seq = generate_mask_sequence(cfg)
    try:
        write_mask_sequence(out, seq)
        (out / "motion.json").write_text(json.dumps(
            {"origin": list(seq.origin), "motion": [list(m) for m in seq.motion_log]}) + "\n")
    except OSError as exc:
        raise CommandError(EXIT_IO, f"write failed: {exc}") from exc
    return EXIT_OK


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield start, min(start + size, total)


def cmd_forward(args) -> int:
    cfg = _config(args)
    entries = _manifest(args.manifest)
    out = _mkdir(args.out)
    _echo(cfg, out)
    model = load_weights(args.weights) if args.weights else init_model_weights(cfg.raformer)
    if args.weights and model.config != cfg.raformer:
        raise CommandError(EXIT_CONFIG, "weight bundle config differs from the run config")
    if args.save_weights:
        save_weights(model, out / "weights.rafw")
    rc = cfg.raformer
    base = Path(args.manifest).parent
    trace, timing, pred_entries = {}, {}, []
    for entry in entries:
        try:
            clip = load_clip(entry, (rc.H, rc.W), base=base)
        except (ClipIOError, OSError) as exc:
            raise CommandError(EXIT_IO, f"clip {entry.id}: {exc}") from exc
        frames = clip.frames
        holes = (clip.masks.frames if clip.masks is not None
                 else np.zeros(frames.shape[:3], np.uint8))
        result = np.empty_like(frames)
        clip_trace, clip_time = [], []
        for start, stop in _chunks(len(frames), rc.T):
            # pad a short tail chunk by repeating its last frame
            idx = np.minimum(np.arange(start, start + rc.T), stop - 1)
            res = forward_clip(frames[idx], holes[idx], model)
            result[start:stop] = res.frames[:stop - start]
            clip_trace.append({"frames": [start, stop],
                               "layers": [t.kept for t in res.traces]})
            clip_time.append([round(t.seconds, 6) for t in res.traces])
        clip_dir = _mkdir(out / entry.id)
        try:
            for i, frame in enumerate(result, start=1):
                write_image(clip_dir / f"{i:05d}.ppm", frame)
        except OSError as exc:
            raise CommandError(EXIT_IO, f"write failed: {exc}") from exc
        trace[entry.id] = clip_trace
        timing[entry.id] = clip_time
        pred_entries.append(ClipManifestEntry(entry.id, entry.id, None, entry.split,
                                              entry.mask_kind))
    (out / "raa_trace.json").write_text(json.dumps(
        {"k": rc.kept, "n": rc.n, "clips": trace}, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(timing, sort_keys=True) + "\n")
    write_manifest(pred_entries, out / "manifest.jsonl")
    return EXIT_OK


def evaluate(pred_manifest, gt_manifest, masks_manifest=None) -> MetricReport:
    """Per-video PSNR / PSNR* / SSIM rows and their aggregate.

    Predictions are resized to the ground-truth resolution.  Masks come from
    the ``masks_dir`` of `masks_manifest` entries, or of the ground-truth
    entries when it is omitted.
    """
    preds = {e.id: e for e in _manifest(pred_manifest)}
    gts = _manifest(gt_manifest)
    mask_manifest = masks_manifest or gt_manifest
    mask_dirs = {e.id: e.masks_dir for e in _manifest(mask_manifest)}
    gt_ids = [e.id for e in gts]
    missing = sorted(set(gt_ids) - set(preds))
    extra = sorted(set(preds) - set(gt_ids))
    no_mask = sorted(set(gt_ids) - set(mask_dirs))
    if missing or extra or no_mask:
        raise CommandError(EXIT_ALIGN, f"id mismatch: missing predictions {missing}, "
                                       f"unknown ids {extra}, ids without masks {no_mask}")
    gt_base, pred_base = Path(gt_manifest).parent, Path(pred_manifest).parent
    mask_base = Path(mask_manifest).parent
    rows = []
    for gt in gts:
        try:
            x = load_clip(replace(gt, masks_dir=None), None, base=gt_base).frames
            size = x.shape[1:3]
            y = load_clip(replace(preds[gt.id], masks_dir=None), size, base=pred_base).frames
            masks = None
            if mask_dirs[gt.id] is not None:
                mdir = Path(mask_dirs[gt.id])
                masks = load_mask_sequence(mdir if mdir.is_absolute() else mask_base / mdir, size)
        except (ClipIOError, OSError) as exc:
            raise CommandError(EXIT_IO, f"clip {gt.id}: {exc}") from exc
        if len(y) != len(x) or (masks is not None and len(masks) != len(x)):
            raise CommandError(EXIT_ALIGN, f"clip {gt.id}: frame counts differ "
                                           f"(pred {len(y)}, gt {len(x)})")
        star = psnr_star(y, x, masks) if masks is not None else None
        rows.append(MetricRow(gt.id, video_psnr(y, x), star, video_ssim(y, x)))
    if not rows:
        raise CommandError(EXIT_ALIGN, "no videos to evaluate")
    return aggregate(rows)


def cmd_eval(args) -> int:
    report = evaluate(args.pred, args.gt, args.masks)
    try:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(report.to_csv())
    except OSError as exc:
        raise CommandError(EXIT_IO, f"write failed: {exc}") from exc
    print(report.to_csv(), end="")
    return EXIT_OK


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    if not rows:
        raise CommandError(EXIT_SCHEMA, f"{path}: empty file")
    header = rows[0]
    if header[0] not in ("video_id", "alpha") or header[1:] != CSV_HEADER[1:]:
        raise CommandError(EXIT_SCHEMA, f"{path}: unexpected header {header}")
    for r in rows[1:]:
        if len(r) != len(header):
            raise CommandError(EXIT_SCHEMA, f"{path}: row {r} has {len(r)} fields")
    return header, rows[1:]


def format_report(paths) -> str:
    """Side-by-side table of metric CSVs.

    One column group per input file.  With two or more inputs the best
    (largest) value of each metric in each row is wrapped in ``**``.
    """
    tables = [_read_table(p) for p in paths]
    if len({tuple(h) for h, _ in tables}) > 1:
        raise CommandError(EXIT_SCHEMA, "input CSVs have different headers")
    labels: list[str] = []
    for p in paths:
        stem = Path(p).stem
        while stem in labels:
            stem += "'"
        labels.append(stem)
    data = [{r[0]: r[1:] for r in rows} for _, rows in tables]
    keys: list[str] = []
    for d in data:
        keys.extend(k for k in d if k not in keys)
    if "AGGREGATE" in keys:
        keys.remove("AGGREGATE")
        keys.append("AGGREGATE")
    head = [tables[0][0][0]] + [f"{lab}:{m}" for lab in labels
                                for m in ("PSNR", "PSNR*", "SSIM")]
    body = []
    for key in keys:
        cells = [list(d.get(key, ["", "", ""])) for d in data]
        if len(cells) > 1:
            for mi in range(3):
                vals = [float(c[mi]) for c in cells if c[mi]]
                if vals:
                    best = max(vals)
                    for c in cells:
                        if c[mi] and float(c[mi]) == best:
                            c[mi] = f"**{c[mi]}**"
        body.append([key] + [v for c in cells for v in c])
    widths = [max(len(row[i]) for row in (head, *body)) for i in range(len(head))]
    lines = [" | ".join(v.ljust(w) for v, w in zip(head, widths)),
             "-+-".join("-" * w for w in widths)]
    lines += [" | ".join(v.ljust(w) for v, w in zip(row, widths)) for row in body]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def cmd_report(args) -> int:
    sys.stdout.write(format_report(args.csv))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raformer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-masks", help="write an animated pseudo wire mask sequence")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--num", type=int, help="override wire.num")
    p.add_argument("--len", type=int, help="override video.len")
    p.set_defaults(func=cmd_gen_masks)

    p = sub.add_parser("forward", help="run the seeded model over every clip of a manifest")
    p.add_argument("--config")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--weights", help="RAFW bundle to load instead of seeded init")
    p.add_argument("--save-weights", action="store_true")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("eval", help="PSNR / PSNR* / SSIM of predictions against ground truth")
    p.add_argument("--pred", required=True, help="prediction manifest")
    p.add_argument("--gt", "--manifest", dest="gt", required=True, help="ground-truth manifest")
    p.add_argument("--masks", help="manifest supplying masks_dir per id (default: --gt)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge metric CSVs into one comparison table")
    p.add_argument("csv", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("RAF_THREADS")
    limiter = nullcontext()
    if threads:
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(int(threads))
    try:
        with limiter:
            return args.func(args)
    except CommandError as exc:
        print(f"raformer {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (ClipIOError, FormatError) as exc:
        print(f"raformer {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"raformer {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
