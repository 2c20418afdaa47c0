import struct

import numpy as np
import pytest

from sigclass.data_io import (
    AugmentSpec,
    LabeledImage,
    ParseError,
    SHAPE_LABELS,
    ShapeJitter,
    augment,
    ensure_channels,
    gen_four_shapes,
    load_cifar10,
    load_image_dir,
    load_mnist_idx,
    read_pnm,
    resize,
    write_pnm,
)


# ---------------------------------------------------------------------------
# MNIST IDX
# ---------------------------------------------------------------------------


def write_idx_pair(tmp_path, pixels, labels, image_magic=0x803, label_magic=0x801):
    """pixels: (n, r, c) uint8, labels: (n,) uint8."""
    n, r, c = pixels.shape
    img_path = tmp_path / "images-idx3-ubyte"
    lbl_path = tmp_path / "labels-idx1-ubyte"
    with open(img_path, "wb") as fh:
        fh.write(struct.pack(">IIII", image_magic, n, r, c))
        fh.write(pixels.tobytes())
    with open(lbl_path, "wb") as fh:
        fh.write(struct.pack(">II", label_magic, len(labels)))
        fh.write(bytes(labels))
    return img_path, lbl_path


def test_mnist_fixture_roundtrip(tmp_path):
    pixels = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4)
    img, lbl = write_idx_pair(tmp_path, pixels, [7, 1])
    images = load_mnist_idx(img, lbl)
    assert len(images) == 2
    assert images[0].label == "7" and images[1].label == "1"
    assert images[0].pixels.shape == (3, 4, 1)
    assert np.allclose(images[0].pixels[:, :, 0], pixels[0] / 255.0)


def test_mnist_bad_magic(tmp_path):
    pixels = np.zeros((1, 2, 2), dtype=np.uint8)
    img, lbl = write_idx_pair(tmp_path, pixels, [0], image_magic=0x804)
    with pytest.raises(ParseError, match="bad image magic"):
        load_mnist_idx(img, lbl)


def test_mnist_truncated_payload_names_missing_bytes(tmp_path):
    pixels = np.zeros((2, 4, 4), dtype=np.uint8)
    img, lbl = write_idx_pair(tmp_path, pixels, [0, 1])
    data = img.read_bytes()
    img.write_bytes(data[:-5])
    with pytest.raises(ParseError, match="missing 5"):
        load_mnist_idx(img, lbl)


def test_mnist_count_mismatch(tmp_path):
    pixels = np.zeros((2, 2, 2), dtype=np.uint8)
    img, _ = write_idx_pair(tmp_path, pixels, [0, 1])
    lbl = tmp_path / "short-labels"
    with open(lbl, "wb") as fh:
        fh.write(struct.pack(">II", 0x801, 1))
        fh.write(bytes([0]))
    with pytest.raises(ParseError, match="count mismatch"):
        load_mnist_idx(img, lbl)


# ---------------------------------------------------------------------------
# CIFAR-10
# ---------------------------------------------------------------------------


def cifar_record(label, red=10, green=20, blue=30):
    return bytes([label]) + bytes([red] * 1024 + [green] * 1024 + [blue] * 1024)


def test_cifar_roundtrip(tmp_path):
    path = tmp_path / "batch.bin"
    path.write_bytes(cifar_record(3) + cifar_record(9, red=255))
    images = load_cifar10([path])
    assert len(images) == 2
    assert images[0].label == "3" and images[1].label == "9"
    assert images[0].pixels.shape == (32, 32, 3)
    assert np.allclose(images[0].pixels[0, 0], [10 / 255, 20 / 255, 30 / 255])
    assert np.allclose(images[1].pixels[..., 0], 1.0)


def test_cifar_bad_size(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00" * 100)
    with pytest.raises(ParseError, match="multiple of 3073"):
        load_cifar10([path])


def test_cifar_bad_label(tmp_path):
    path = tmp_path / "bad_label.bin"
    path.write_bytes(cifar_record(3) + bytes([255]) + bytes(3072))
    with pytest.raises(ParseError, match="labels must be 0..9"):
        load_cifar10([path])


# ---------------------------------------------------------------------------
# PGM/PPM directory loading
# ---------------------------------------------------------------------------


def test_image_dir_mixed_formats(tmp_path):
    rng = np.random.default_rng(0)
    for label in ("cat", "dog"):
        d = tmp_path / label
        d.mkdir()
        for i in range(3):
            write_pnm(d / f"{i}.ppm", rng.random((4, 5, 3)))
    images = load_image_dir(tmp_path)
    assert len(images) == 6
    assert [im.label for im in images] == ["cat"] * 3 + ["dog"] * 3


def test_image_dir_skips_bad_files_and_continues(tmp_path):
    d = tmp_path / "a"
    d.mkdir()
    write_pnm(d / "good.pgm", np.full((2, 2, 1), 0.5))
    (d / "bad.png").write_bytes(b"\x89PNG\r\n")
    with pytest.warns(UserWarning, match="unsupported format magic"):
        images = load_image_dir(tmp_path)
    assert len(images) == 1


def test_pnm_maxval_rescaling(tmp_path):
    path = tmp_path / "half.pgm"
    path.write_bytes(b"P5\n2 1\n100\n" + bytes([100, 50]))
    arr = read_pnm(path)
    assert np.allclose(arr[:, :, 0], [[1.0, 0.5]])


def test_pnm_comment_and_truncation(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([1, 2, 3, 4]))
    assert read_pnm(path).shape == (2, 2, 1)
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([1, 2]))
    with pytest.raises(ParseError, match="truncated"):
        read_pnm(path)


def test_pnm_roundtrip_quantization(tmp_path):
    rng = np.random.default_rng(1)
    px = rng.random((5, 4, 3))
    path = tmp_path / "rt.ppm"
    write_pnm(path, px)
    back = read_pnm(path)
    assert np.abs(back - px).max() <= 1.0 / 255.0 + 1e-12


def test_grayscale_written_as_p5(tmp_path):
    path = tmp_path / "g.pgm"
    write_pnm(path, np.full((2, 2, 1), 0.25))
    assert path.read_bytes().startswith(b"P5")
    assert read_pnm(path).shape == (2, 2, 1)


# ---------------------------------------------------------------------------
# four-shapes generator
# ---------------------------------------------------------------------------


def test_shapes_deterministic_per_seed():
    a = gen_four_shapes(2, size=16, seed=5)
    b = gen_four_shapes(2, size=16, seed=5)
    for x, y in zip(a, b):
        assert x.label == y.label
        assert np.array_equal(x.pixels, y.pixels)
    c = gen_four_shapes(2, size=16, seed=6)
    assert any(not np.array_equal(x.pixels, y.pixels) for x, y in zip(a, c))


def test_shapes_counts_and_labels():
    images = gen_four_shapes(10, size=16, seed=0)
    assert len(images) == 40
    assert {im.label for im in images} == set(SHAPE_LABELS)


def test_centered_circle_rotational_symmetry():
    jitter = ShapeJitter(center_frac=0.0, scale_range=(0.75, 0.75), rotation=None)
    images = gen_four_shapes(1, size=16, jitter=jitter, seed=0)
    circle = next(im for im in images if im.label == "circle")
    mass = circle.pixels[:, :, 0]
    rotated = np.rot90(mass)
    assert np.abs(rotated - mass).sum() / mass.sum() < 0.01


def test_minimum_size_enforced():
    with pytest.raises(ValueError, match="size"):
        gen_four_shapes(1, size=4)


def test_shape_pixels_in_unit_range():
    for im in gen_four_shapes(3, size=16, seed=2):
        assert im.pixels.min() >= 0.0 and im.pixels.max() <= 1.0


# ---------------------------------------------------------------------------
# resize
# ---------------------------------------------------------------------------


def test_resize_identity():
    px = np.random.default_rng(0).random((4, 4, 1))
    assert np.array_equal(resize(px, 4, 4), px)


def test_resize_constant_image():
    px = np.full((2, 2, 1), 0.3)
    out = resize(px, 7, 5)
    assert out.shape == (7, 5, 1)
    assert np.allclose(out, 0.3)


def test_resize_checkerboard_average():
    board = np.indices((4, 4)).sum(axis=0) % 2
    out = resize(board[:, :, None].astype(float), 2, 2)
    assert np.allclose(out, 0.5)


def test_ensure_channels():
    gray = np.full((2, 2, 1), 0.4)
    rgb = ensure_channels(gray, 3)
    assert rgb.shape == (2, 2, 3)
    assert np.allclose(rgb, 0.4)
    assert ensure_channels(gray, None).shape == (2, 2, 1)
    with pytest.raises(ValueError, match="cannot convert"):
        ensure_channels(np.zeros((2, 2, 3)), 1)


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------


def test_identity_augmentation_copies():
    px = np.random.default_rng(0).random((4, 4, 1))
    out = augment(px, AugmentSpec(copies=3))
    assert len(out) == 3
    for copy in out:
        assert np.allclose(copy, px)


def test_salt_pepper_full_coverage():
    px = np.full((8, 8, 1), 0.5)
    out = augment(px, AugmentSpec(noise="salt_pepper", noise_level=1.0, copies=1))[0]
    assert np.all((out == 0.0) | (out == 1.0))


def test_augment_seeded_reproducibility():
    px = np.random.default_rng(1).random((4, 4, 3))
    spec = AugmentSpec(contrast=(0.8, 1.2), brightness=(-0.1, 0.1),
                       noise="speckle", noise_level=0.05, copies=4, seed=3)
    a = augment(px, spec)
    b = augment(px, spec)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    c = augment(px, spec, seed=99)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_augment_output_clamped():
    px = np.random.default_rng(2).random((6, 6, 1))
    spec = AugmentSpec(contrast=(3.0, 3.0), brightness=(0.5, 0.5),
                       noise="speckle", noise_level=0.5, copies=2, seed=0)
    for copy in augment(px, spec):
        assert copy.min() >= 0.0 and copy.max() <= 1.0


def test_augment_spec_validation():
    with pytest.raises(ValueError, match="noise"):
        AugmentSpec(noise="gaussian")
    with pytest.raises(ValueError, match="fraction"):
        AugmentSpec(noise="salt_pepper", noise_level=1.5)
    with pytest.raises(ValueError, match="copies"):
        AugmentSpec(copies=0)


def test_labeled_image_validation():
    with pytest.raises(ValueError, match="within"):
        LabeledImage(np.full((2, 2, 1), 1.5), "x")
    with pytest.raises(ValueError, match="C in"):
        LabeledImage(np.zeros((2, 2, 2)), "x")
