"""Alpha sweep: forward + eval per kept-window ratio, one report row each."""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
from fractions import Fraction
from pathlib import Path

from raformer import cli
from raformer.config import RaformerConfig
from raformer.metrics import CSV_HEADER, MetricRow

__all__ = ["PAPER_ALPHAS", "alpha_sweep", "sweep_csv"]

PAPER_ALPHAS = (Fraction(1, 8), Fraction(1, 4), Fraction(1, 2))


def alpha_sweep(manifest, workdir, alphas=PAPER_ALPHAS, config: dict | None = None,
                seed: int = 0) -> list[MetricRow]:
    """Run ``forward`` then ``eval`` once per alpha.

    `config` is a run-config dict; its ``raformer.k`` is replaced by
    ``alpha * n``.  Each returned row carries the alpha (e.g. ``"1/8"``) as
    its id and the aggregate scores of that run.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    config = json.loads(json.dumps(config or {}))
    rows = []
    for alpha in alphas:
        alpha = Fraction(alpha)
        raf = dict(config.get("raformer", {}))
        raf.pop("k", None)
        raf["k"] = RaformerConfig.with_alpha(alpha, **raf).kept
        run_cfg = dict(config, raformer=raf)
        label = f"{alpha.numerator}/{alpha.denominator}"
        tag = f"alpha_{alpha.numerator}_{alpha.denominator}"
        cfg_path = workdir / f"{tag}.json"
        cfg_path.write_text(json.dumps(run_cfg, indent=2, sort_keys=True))
        out = workdir / tag
        ns = argparse.Namespace(config=str(cfg_path), manifest=str(manifest), out=str(out),
                                seed=seed, weights=None, save_weights=False)
        # the config echo still lands in effective_config.json
        with contextlib.redirect_stdout(io.StringIO()):
            cli.cmd_forward(ns)
        report = cli.evaluate(out / "manifest.jsonl", manifest)
        (out / "metrics.csv").write_text(report.to_csv())
        agg = report.aggregate
        rows.append(MetricRow(label, agg.psnr, agg.psnr_star, agg.ssim))
    return rows


def sweep_csv(rows) -> str:
    """CSV with an ``alpha`` first column; the other columns match eval CSVs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", *CSV_HEADER[1:]])
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()
