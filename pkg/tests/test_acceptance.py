"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are
also repeated in the terminal summary.
"""

import itertools
import json
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from raformer import cli
from raformer.ablation import PAPER_ALPHAS, alpha_sweep, sweep_csv
from raformer.config import ConfigError, RaformerConfig
from raformer.losses import LAMBDA_ADV, adversarial_losses, reconstruction_loss
from raformer.mask_synth import (WireSpec, bounding_boxes, create_video_mask, create_wire_mask,
                                 dilate)
from raformer.metrics import psnr, psnr_star, ssim, video_psnr
from raformer.model import raformer_layer
from raformer.patches import soft_composite, soft_split
from raformer.raa import (WindowSet, reverse_pack, select_topk_windows, window_attention,
                          window_importance, window_merge, window_partition)
from raformer.synthetic import write_synthetic_dataset
from raformer.tensor_core import Rng
from raformer.transformer import transformer_block
from raformer.weights import init_layer_weights

RESULTS: list[str] = []


@contextmanager
def criterion(num: int, title: str, budget: float | None = None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as exc:
        line = f"FAIL  criterion {num:2d}: {title} ({type(exc).__name__}: {exc})"
        RESULTS.append(line)
        print(line)
        raise
    line = f"PASS  criterion {num:2d}: {title} ({elapsed:.2f}s)"
    RESULTS.append(line)
    print(line)


def test_criterion_01_constants():
    with criterion(1, "configuration constants", budget=1):
        cfg = RaformerConfig()
        assert cfg.T == 5
        assert (cfg.W, cfg.H) == (432, 240)
        assert cfg.layers == 8
        assert cfg.kept == cfg.n // 2 and 2 * cfg.kept == cfg.n
        assert LAMBDA_ADV == 0.01
        assert adversarial_losses([0.0], [0.0]).lambda_adv == 0.01


def test_criterion_02_raa_oracles():
    with criterion(2, "RAA pipeline oracle suite", budget=30):
        r = np.random.default_rng(2)
        cfg = RaformerConfig()
        f = r.standard_normal(cfg.feature_shape).astype(np.float32)
        ws = window_partition(f, cfg.h, cfg.w)
        np.testing.assert_array_equal(window_merge(ws), f)

        # top-k against a full-sort oracle, ties included
        for trial in range(1000):
            n = int(r.integers(2, 60))
            k = int(r.integers(1, n + 1))
            scores = r.integers(0, 8, (1, n)).astype(np.float64) if trial % 2 else r.standard_normal((1, n))
            toy = WindowSet(np.zeros((1, n, 1, 1), np.float32), (1, n), (1, 1))
            got = select_topk_windows(toy, scores, k).kept[0].tolist()
            ranked = sorted(range(n), key=lambda i: (-scores[0, i], i))
            assert got == sorted(ranked[:k])

        # element multisets through select and reverse_pack
        scores = r.standard_normal((cfg.T, cfg.n))
        sel = select_topk_windows(ws, scores, cfg.kept)
        src = np.stack([ws.windows[t, sel.kept[t]] for t in range(cfg.T)])
        packed = reverse_pack(sel)
        assert packed.shape == (cfg.groups, cfg.T, cfg.H // 8, cfg.W // 8, cfg.C)
        np.testing.assert_array_equal(np.sort(sel.selected, axis=None), np.sort(src, axis=None))
        np.testing.assert_array_equal(np.sort(packed, axis=None), np.sort(src, axis=None))

        # count identity for every valid (h, w, k) on the default grid
        H4, W4 = cfg.H // 4, cfg.W // 4
        probe = r.standard_normal((1, H4, W4, 1)).astype(np.float32)
        checked = 0
        for h, w in itertools.product(range(1, H4 + 1), range(1, W4 + 1)):
            if H4 % h or W4 % w:
                continue
            n = (H4 // h) * (W4 // w)
            for k in range(1, n + 1):
                try:
                    c = RaformerConfig(C=4, h=h, w=w, k=k, heads=1)
                except ConfigError:
                    assert (4 * k) % n and 4 * k > n
                    continue
                if c.duplicates:
                    continue
                assert c.groups * (c.H // 8) * (c.W // 8) == k * h * w
                checked += 1
                if checked % 25 == 1:
                    pws = window_partition(probe, h, w)
                    pk = reverse_pack(select_topk_windows(pws, np.zeros((1, n)), k))
                    assert pk.shape == (c.groups, 1, c.H // 8, c.W // 8, 1)
        assert checked > 100


def test_criterion_03_attention_normalization():
    with criterion(3, "attention normalization", budget=10):
        cfg = RaformerConfig()
        lw = init_layer_weights(cfg, 0)
        f = np.random.default_rng(3).standard_normal(cfg.feature_shape).astype(np.float32)
        ws = window_partition(f, cfg.h, cfg.w)
        aw = window_attention(ws, lw)
        assert aw.shape == (cfg.T * cfg.n, cfg.T * cfg.n)
        assert np.abs(aw.sum(axis=-1, dtype=np.float64) - 1).max() <= 1e-6
        scores = window_importance(ws, lw)
        assert abs(float(np.sum(scores, dtype=np.float64)) - cfg.T * cfg.n) <= 1e-4


def test_criterion_04_soft_split_roundtrip():
    with criterion(4, "soft split / composite roundtrip", budget=10):
        f = np.random.default_rng(4).standard_normal((5, 60, 108, 64)).astype(np.float32)
        tokens = soft_split(f, 7, 3, 3)
        back = soft_composite(tokens, (60, 108), 7, 3, 3)
        assert np.abs(back - f).max() <= 1e-5


def test_criterion_05_merge_linearity():
    with criterion(5, "merge degeneracy and linearity", budget=30):
        cfg = RaformerConfig()
        lw = init_layer_weights(cfg, 0)
        x = np.random.default_rng(5).standard_normal(cfg.feature_shape).astype(np.float32)

        def run(b, g):
            return raformer_layer(x, lw.replace(beta=np.float32([b]), gamma=np.float32([g])))

        f_star = transformer_block(x, lw)
        np.testing.assert_array_equal(run(0.0, 1.0), f_star)
        nr = run(1.0, 0.0).astype(np.float64)
        fs = f_star.astype(np.float64)
        for b, g in [(0.5, 1.5), (2.0, -1.0), (-0.75, 0.25)]:
            assert np.abs(run(b, g) - (b * nr + g * fs)).max() <= 1e-5


@pytest.mark.slow
def test_criterion_06_end_to_end_determinism(tmp_path, monkeypatch):
    with criterion(6, "end-to-end determinism and default-config runtime"):
        monkeypatch.setenv("RAF_THREADS", "1")
        manifest = write_synthetic_dataset(tmp_path / "data", count=1, length=5,
                                           size=(240, 432), seed=6)
        outputs, seconds = [], []
        for run in ("a", "b"):
            start = time.perf_counter()
            assert cli.main(["forward", "--manifest", str(manifest), "--seed", "6",
                             "--out", str(tmp_path / run)]) == 0
            seconds.append(time.perf_counter() - start)
            out = tmp_path / run
            frames = sorted((out / "clip000").glob("*.ppm"))
            assert len(frames) == 5
            trace = (out / "raa_trace.json").read_bytes()
            layers = json.loads(trace)["clips"]["clip000"][0]["layers"]
            assert len(layers) == 8 and all(len(i) == 27 for fr in layers for i in fr)
            outputs.append(([p.read_bytes() for p in frames], trace))
        assert outputs[0] == outputs[1]
        assert max(seconds) < 120, f"forward took {max(seconds):.1f}s"


def test_criterion_07_metric_closed_forms():
    with criterion(7, "metric closed forms", budget=5):
        r = np.random.default_rng(7)
        x = r.integers(1, 255, (32, 32, 3)).astype(np.float64)
        sign = r.choice([-1.0, 1.0], x.shape)
        assert abs(psnr(x + sign, x) - 48.1308) <= 1e-3
        assert psnr(np.full((8, 8), 255.0), np.zeros((8, 8))) == 0.0
        img = r.integers(0, 256, (40, 48, 3)).astype(np.uint8)
        assert abs(ssim(img, img) - 1.0) <= 1e-9
        seq_y = r.integers(0, 256, (3, 16, 16, 3)).astype(np.uint8)
        seq_x = r.integers(0, 256, (3, 16, 16, 3)).astype(np.uint8)
        full = np.ones((3, 16, 16), np.uint8)
        assert abs(psnr_star(seq_y, seq_x, full) - video_psnr(seq_y, seq_x)) <= 1e-9


def test_criterion_08_loss_contracts():
    with criterion(8, "loss contracts", budget=1):
        r = np.random.default_rng(8)
        x = r.uniform(0, 200, (2, 16, 16, 3))
        m = (r.random((2, 16, 16)) < 0.3).astype(np.uint8)
        assert reconstruction_loss(x, x.copy(), m) == 0.0
        assert abs(reconstruction_loss(x + r.choice([-1.0, 1.0], x.shape), x, m) - 2.0) <= 1e-6
        fake, real = r.standard_normal(50), r.standard_normal(50)
        rep = adversarial_losses(fake, real, rec=1.25)
        assert abs(rep.total - (1.25 + 0.01 * rep.adv_g)) <= 1e-6
        assert adversarial_losses(np.ones(9), -np.ones(9)).adv_d == 0.0


def _translate(frame, dy, dx):
    out = np.zeros_like(frame)
    H, W = frame.shape
    out[max(dy, 0):H + min(dy, 0), max(dx, 0):W + min(dx, 0)] = \
        frame[max(-dy, 0):H + min(-dy, 0), max(-dx, 0):W + min(-dx, 0)]
    return out


def test_criterion_09_mask_generator():
    with criterion(9, "mask generator suite"):
        spec = WireSpec()
        canvas = (240, 432)
        a = create_wire_mask(spec, canvas, Rng(9))
        b = create_wire_mask(spec, canvas, Rng(9))
        assert a.tobytes() == b.tobytes()
        for seed in range(20):
            m = create_wire_mask(spec, canvas, Rng(seed))
            assert m.dtype == np.uint8 and set(np.unique(m)) <= {0, 1}
            assert len(bounding_boxes(m)) <= spec.num
            once = dilate(m, 3, 1)
            assert np.all(once >= m)
            assert np.all(dilate(m, 3, 2) >= once)
            sub = m & (np.random.default_rng(seed).random(m.shape) < 0.5).astype(np.uint8)
            assert np.all(dilate(sub, 3, 1) <= once)

        # unclipped frames are exact translates of the first frame
        checked = 0
        for seed in range(40):
            rng = Rng(100 + seed)
            small = WireSpec(num=1, len_range=(20, 40), max_dilate_times=0)
            seq = create_video_mask(create_wire_mask(small, canvas, rng), 12, 4, rng)
            area0 = int(seq.frames[0].sum())
            dy = dx = 0
            for t in range(1, 12):
                dx += seq.motion_log[t][0]
                dy += seq.motion_log[t][1]
                if int(seq.frames[t].sum()) == area0 and area0 > 0:
                    np.testing.assert_array_equal(seq.frames[t], _translate(seq.frames[0], dy, dx))
                    checked += 1
        assert checked > 50

        start = time.perf_counter()
        rng = Rng(80)
        seq = create_video_mask(create_wire_mask(spec, canvas, rng), 80, spec.max_move, rng)
        elapsed = time.perf_counter() - start
        assert seq.frames.shape == (80, 240, 432)
        assert elapsed < 5, f"80-frame generation took {elapsed:.2f}s"


def test_criterion_10_alpha_sweep(tmp_path, capsys):
    with criterion(10, "alpha sweep report shape"):
        manifest = write_synthetic_dataset(tmp_path / "data", count=2, length=5,
                                           size=(64, 64), seed=10)
        # 16x16 features with 4x4 windows give n = 16, so every alpha is integral
        config = {"raformer": {"H": 64, "W": 64, "C": 16, "h": 4, "w": 4}}
        rows = alpha_sweep(manifest, tmp_path / "sweep", PAPER_ALPHAS, config=config, seed=10)
        assert [r.video_id for r in rows] == ["1/8", "1/4", "1/2"]
        assert [Fraction(r.video_id) for r in rows] == [Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)]
        for r in rows:
            assert 0 <= r.psnr <= 99 and -1 <= r.ssim <= 1 and r.psnr_star is not None
        kept = [json.loads((tmp_path / "sweep" / tag / "raa_trace.json").read_text())["k"]
                for tag in ("alpha_1_8", "alpha_1_4", "alpha_1_2")]
        assert kept == [2, 4, 8]
        table = tmp_path / "sweep.csv"
        table.write_text(sweep_csv(rows))
        capsys.readouterr()
        assert cli.main(["report", str(table)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2 + 3
        assert [line.split()[0] for line in lines[2:]] == ["1/8", "1/4", "1/2"]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
