import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from raformer.dataset_io import (ClipIOError, ClipManifestEntry, FormatError, ManifestError,
                                 decode_image, decode_mask, encode_image, encode_mask, load_clip,
                                 load_manifest, resize_nearest, write_image, write_manifest,
                                 write_mask_sequence)


class TestCodec:
    def test_single_red_pixel(self):
        px = np.array([[[255, 0, 0]]], np.uint8)
        data = encode_image(px)
        assert data == b"P6\n1 1\n255\n\xff\x00\x00"
        np.testing.assert_array_equal(decode_image(data), px)
        assert encode_image(decode_image(data)) == data

    def test_all_zero_p5_is_empty_mask(self):
        m = decode_mask(b"P5 4 4 255\n" + bytes(16))
        assert m.shape == (4, 4) and m.dtype == np.uint8 and not m.any()

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_random_roundtrip(self, seed):
        img = np.random.default_rng(seed).integers(0, 256, (16, 16, 3)).astype(np.uint8)
        np.testing.assert_array_equal(decode_image(encode_image(img)), img)

    def test_mask_roundtrip_binary(self, rng):
        m = (rng.random((9, 7)) < 0.3).astype(np.uint8)
        data = encode_mask(m)
        assert set(np.unique(decode_image(data))) <= {0, 255}
        np.testing.assert_array_equal(decode_mask(data), m)

    def test_header_comments(self):
        img = decode_image(b"P5\n# made by hand\n2 1\n# max\n255\n\x07\x08")
        np.testing.assert_array_equal(img, [[7, 8]])

    def test_bad_magic(self):
        with pytest.raises(FormatError) as exc:
            decode_image(b"P3\n1 1\n255\n0 0 0")
        assert exc.value.offset == 0

    def test_bad_maxval(self):
        with pytest.raises(FormatError) as exc:
            decode_image(b"P5\n1 1\n65535\n\x00\x00")
        assert exc.value.offset == 7
        assert "byte offset 7" in str(exc.value)

    def test_truncated_payload(self):
        data = b"P6\n2 2\n255\n" + bytes(11)
        with pytest.raises(FormatError, match="truncated") as exc:
            decode_image(data)
        assert exc.value.offset == len(data)

    def test_truncated_header(self):
        with pytest.raises(FormatError):
            decode_image(b"P5\n4")

    def test_non_binary_mask(self):
        with pytest.raises(FormatError):
            decode_mask(b"P5 1 1 255\n\x80")


def make_clip(root, name, frames, masks=None):
    fdir = root / name / "frames"
    fdir.mkdir(parents=True)
    for i, f in enumerate(frames, start=1):
        write_image(fdir / f"{i:05d}.ppm", f)
    mdir = None
    if masks is not None:
        write_mask_sequence(root / name / "masks", masks)
        mdir = f"{name}/masks"
    return ClipManifestEntry(name, f"{name}/frames", mdir)


class TestLoadClip:
    def test_native_size_unchanged(self, tmp_path, rng):
        frames = rng.integers(0, 256, (3, 8, 10, 3)).astype(np.uint8)
        masks = (rng.random((3, 8, 10)) < 0.5).astype(np.uint8)
        clip = load_clip(make_clip(tmp_path, "a", frames, masks), (8, 10), base=tmp_path)
        np.testing.assert_array_equal(clip.frames, frames)
        assert clip.frames.dtype == np.float32
        np.testing.assert_array_equal(clip.masks.frames, masks)

    def test_checkerboard_downscale(self, tmp_path):
        board = (np.indices((8, 8)).sum(0) % 2 * 255).astype(np.uint8)
        frame = np.repeat(board[..., None], 3, axis=2)
        entry = make_clip(tmp_path, "c", [frame], [board // 255])
        clip = load_clip(entry, (4, 4), base=tmp_path)
        # nearest picks source (2i, 2j), which is always a dark square
        np.testing.assert_array_equal(clip.frames[0], frame[::2, ::2])
        assert not clip.frames.any()
        assert set(np.unique(clip.masks.frames)) <= {0, 1}

    def test_index_map(self):
        img = np.arange(6 * 9).reshape(6, 9)
        out = resize_nearest(img, (4, 5))
        for i in range(4):
            for j in range(5):
                assert out[i, j] == img[i * 6 // 4, j * 9 // 5]

    def test_upscale_keeps_binarity(self, tmp_path, rng):
        masks = (rng.random((2, 5, 5)) < 0.5).astype(np.uint8)
        entry = make_clip(tmp_path, "u", np.zeros((2, 5, 5, 3), np.uint8), masks)
        clip = load_clip(entry, (12, 11), base=tmp_path)
        assert set(np.unique(clip.masks.frames)) <= {0, 1}

    def test_missing_index_named(self, tmp_path):
        entry = make_clip(tmp_path, "m", np.zeros((3, 4, 4, 3), np.uint8))
        (tmp_path / "m" / "frames" / "00002.ppm").unlink()
        with pytest.raises(ClipIOError, match="00002"):
            load_clip(entry, base=tmp_path)

    def test_count_mismatch_named(self, tmp_path):
        entry = make_clip(tmp_path, "n", np.zeros((3, 4, 4, 3), np.uint8),
                          np.zeros((2, 4, 4), np.uint8))
        with pytest.raises(ClipIOError, match="00003"):
            load_clip(entry, base=tmp_path)


class TestManifest:
    def test_empty(self, tmp_path):
        (tmp_path / "m.jsonl").write_text("")
        assert load_manifest(tmp_path / "m.jsonl") == []

    def test_byte_identical_roundtrip(self, tmp_path):
        line = '{"id": "v1", "frames_dir": "v1/f", "masks_dir": "v1/m", "split": "test", "mask_kind": "pws"}\n'
        (tmp_path / "a.jsonl").write_text(line)
        write_manifest(load_manifest(tmp_path / "a.jsonl"), tmp_path / "b.jsonl")
        assert (tmp_path / "b.jsonl").read_text() == line

    def test_duplicate_names_id(self, tmp_path):
        lines = [ClipManifestEntry(i, "f").to_json() for i in ("x", "dupe", "dupe")]
        (tmp_path / "m.jsonl").write_text("\n".join(lines) + "\n")
        with pytest.raises(ManifestError, match="line 3.*'dupe'"):
            load_manifest(tmp_path / "m.jsonl")

    @pytest.mark.parametrize("obj", [
        {"id": "a", "frames_dir": "f", "split": "test", "mask_kind": "pws", "extra": 1},
        {"id": "a", "split": "test", "mask_kind": "pws"},
        {"id": "a", "frames_dir": "f", "split": "val", "mask_kind": "pws"},
        {"id": "a", "frames_dir": "f", "split": "test", "mask_kind": "blob"},
        {"id": 3, "frames_dir": "f", "split": "test", "mask_kind": "pws"},
    ])
    def test_strict_fields(self, tmp_path, obj):
        good = ClipManifestEntry("ok", "f").to_json()
        (tmp_path / "m.jsonl").write_text(good + "\n" + json.dumps(obj) + "\n")
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(tmp_path / "m.jsonl")

    def test_malformed_json_line_number(self, tmp_path):
        (tmp_path / "m.jsonl").write_text(ClipManifestEntry("ok", "f").to_json() + "\n\n{oops\n")
        with pytest.raises(ManifestError, match="line 3"):
            load_manifest(tmp_path / "m.jsonl")

    def test_write_rejects_duplicates(self, tmp_path):
        with pytest.raises(ManifestError):
            write_manifest([ClipManifestEntry("a", "f"), ClipManifestEntry("a", "g")],
                           tmp_path / "m.jsonl")
