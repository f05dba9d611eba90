import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fakepolisher.errors import ParameterError
from fakepolisher.forensics import spectrum
from fakepolisher.synth import (ORANGE, WHITE, ArtifactKind, ArtifactType, checker_pattern,
                                generate_clean_corpus, inject_artifact, make_checkerboard,
                                resize_bilinear, resize_nearest)


def test_corpus_deterministic_and_valid():
    a = generate_clean_corpus(5, 32, 3, seed=9)
    b = generate_clean_corpus(5, 32, 3, seed=9)
    c = generate_clean_corpus(5, 32, 3, seed=10)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
        assert x.shape == (32, 32, 3) and x.min() >= 0.0 and x.max() <= 1.0
    assert not np.array_equal(a[0], c[0])


def test_corpus_prefix_is_stable():
    # the held-out split relies on a longer corpus sharing its prefix
    short = generate_clean_corpus(3, 32, 1, 7)
    longer = generate_clean_corpus(6, 32, 1, 7)
    for x, y in zip(short, longer):
        np.testing.assert_array_equal(x, y)


def test_corpus_errors():
    with pytest.raises(ParameterError):
        generate_clean_corpus(0)
    with pytest.raises(ParameterError):
        generate_clean_corpus(2, channels=2)


def test_clean_images_have_quiet_quarter_band():
    for img in generate_clean_corpus(250, 32, 1, 7):
        assert spectrum(img).blob_energy_ratio <= 0.01


def test_clean_corpus_is_not_low_rank():
    Y = np.stack([im.ravel() for im in generate_clean_corpus(200, 32, 1, 7)], axis=1)
    s = np.linalg.svd(Y - Y.mean(axis=1, keepdims=True), compute_uv=False)
    assert np.sum(s > 1e-8 * s[0]) >= 150


def test_artifact_kind_validation():
    assert ArtifactKind("checkerboard").kind is ArtifactType.CHECKERBOARD
    assert ArtifactType.parse("unpooling_zerofill") is ArtifactType.UNPOOLING
    with pytest.raises(ParameterError):
        ArtifactKind(strength=1.5)
    with pytest.raises(ParameterError):
        ArtifactKind(period=3)
    with pytest.raises(ValueError):
        ArtifactKind("sharpen")
    assert ArtifactKind().as_dict() == {"kind": "transpose_conv_checkerboard", "strength": 0.3, "period": 4}


def test_checker_pattern_zero_mean_period():
    pat = checker_pattern(8, 8, 4)
    assert pat.sum() == 0
    np.testing.assert_array_equal(pat[:2, :2], np.ones((2, 2)))
    np.testing.assert_array_equal(pat[:2, 2:4], -np.ones((2, 2)))
    np.testing.assert_array_equal(pat, np.roll(pat, 4, axis=0))


@pytest.mark.parametrize("kind", list(ArtifactType))
def test_strength_zero_is_identity(kind):
    img = generate_clean_corpus(1, 32, 3, 1)[0]
    np.testing.assert_array_equal(inject_artifact(img, ArtifactKind(kind, 0.0, 4)), img)


def test_period_must_divide_size():
    with pytest.raises(ParameterError):
        inject_artifact(np.zeros((36, 36, 1)), ArtifactKind(period=8))


def test_checkerboard_amplitude():
    img = np.full((8, 8, 1), 0.5)
    out = inject_artifact(img, ArtifactKind("checkerboard", 0.3, 4))
    np.testing.assert_allclose(np.unique(out), [0.35, 0.65])


def test_checkerboard_raises_blob_ratio_tenfold():
    for seed, img in enumerate(generate_clean_corpus(20, 32, 1, 3)):
        fake = inject_artifact(img, ArtifactKind("checkerboard", 0.3, 4), seed)
        assert spectrum(fake).blob_energy_ratio >= 10 * spectrum(img).blob_energy_ratio


def test_unpooling_period2_full_strength_zeros():
    img = np.full((8, 8, 1), 0.8)
    out = inject_artifact(img, ArtifactKind("unpooling", 1.0, 2))
    blocks = out[:, :, 0].reshape(4, 2, 4, 2).transpose(0, 2, 1, 3).reshape(16, 4)
    assert np.all((blocks == 0).sum(axis=1) == 3)
    assert np.all(blocks[:, 0] == 0.8)


def test_interpolation_keeps_block_constant_image():
    img = np.kron(np.arange(16).reshape(4, 4) / 15.0, np.ones((4, 4)))[:, :, None]
    out = inject_artifact(img, ArtifactKind("interpolation", 0.5, 4))
    assert out.shape == img.shape and 0 <= out.min() and out.max() <= 1
    const = np.full((16, 16, 1), 0.4)
    np.testing.assert_allclose(inject_artifact(const, ArtifactKind("interpolation", 1.0, 4)), const)


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(list(ArtifactType)), strength=st.floats(0, 1),
       period=st.sampled_from([2, 4, 8]), seed=st.integers(0, 50))
def test_artifacts_stay_in_range(kind, strength, period, seed):
    img = generate_clean_corpus(1, 16, 1, seed)[0]
    out = inject_artifact(img, ArtifactKind(kind, strength, period))
    assert out.shape == img.shape and out.min() >= 0.0 and out.max() <= 1.0


def test_make_checkerboard():
    cb = make_checkerboard(2, (0.1,), (0.9,))
    np.testing.assert_array_equal(cb[:, :, 0], [[0.1, 0.9], [0.9, 0.1]])
    toy = make_checkerboard(8)
    assert toy.shape == (8, 8, 3)
    np.testing.assert_array_equal(toy[0, 0], WHITE)
    np.testing.assert_array_equal(toy[0, 1], ORANGE)
    same = make_checkerboard(4, ORANGE, ORANGE)
    assert np.all(same == same[0, 0])
    with pytest.raises(ParameterError):
        make_checkerboard(1)


def test_resize_bilinear():
    const = np.full((5, 7, 3), 0.25)
    np.testing.assert_allclose(resize_bilinear(const, 11, 3), np.full((11, 3, 3), 0.25))
    img = np.random.default_rng(0).random((6, 6, 1))
    np.testing.assert_array_equal(resize_bilinear(img, 6, 6), img)
    # half-pixel centres: 2 -> 4 gives the classic 1/4, 3/4 weights
    row = np.array([[0.0, 1.0]])
    np.testing.assert_allclose(resize_bilinear(row, 1, 4)[0, :, 0], [0.0, 0.25, 0.75, 1.0])


def test_resize_nearest_replicates():
    img = np.array([[0.0, 1.0], [0.5, 0.25]])
    out = resize_nearest(img, 4, 4)[:, :, 0]
    np.testing.assert_array_equal(out, np.kron(img, np.ones((2, 2))))
