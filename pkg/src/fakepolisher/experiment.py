"""Desk-scale artifact-removal experiment: clean corpus, synthetic fakes, polish, score."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dictlearn import Dictionary, KSVDTrace, TrainConfig, train_ksvd, train_pca
from .forensics import coss, psnr, spectrum, ssim
from .imaging import PatchGeometry, extract_patches
from .polish import PolishConfig, polish
from .synth import ArtifactKind, generate_clean_corpus, inject_artifact

log = logging.getLogger(__name__)

# Pass thresholds per method: (max blob ratio after/before, min reduction factor,
# min mean SSIM vs fake, min mean COSS vs fake); None = not checked.
THRESHOLDS = {
    "pca": {"max_blob_ratio": 0.2, "min_reduction": None, "min_ssim": 0.85, "min_coss": 0.99},
    "ksvd": {"max_blob_ratio": None, "min_reduction": 2.0, "min_ssim": 0.9, "min_coss": None},
}


@dataclass(frozen=True)
class ExperimentSetup:
    n_train: int = 200
    n_test: int = 50
    size: int = 32
    channels: int = 1
    seed: int = 7
    artifact: ArtifactKind = field(default_factory=ArtifactKind)


def make_corpora(setup: ExperimentSetup):
    """Return ``(train_clean, test_clean, test_fake)``; the test images are held out."""
    corpus = generate_clean_corpus(setup.n_train + setup.n_test, setup.size, setup.channels, setup.seed)
    train, test = corpus[:setup.n_train], corpus[setup.n_train:]
    fakes = [inject_artifact(img, setup.artifact, setup.seed + i) for i, img in enumerate(test)]
    return train, test, fakes


def image_matrix(images) -> np.ndarray:
    """Stack vectorized images as columns."""
    return np.stack([np.asarray(im, dtype=np.float64).ravel() for im in images], axis=1)


def patch_matrix(images, patch_size: int, stride: int) -> tuple[np.ndarray, PatchGeometry]:
    h, w, c = images[0].shape
    geometry = PatchGeometry(patch_size, stride, h, w, c)
    return np.concatenate([extract_patches(im, geometry) for im in images], axis=1), geometry


def train_pca_on(images, n_components: int) -> Dictionary:
    return train_pca(image_matrix(images), n_components)


def train_ksvd_on(images, config: TrainConfig, patch_size: int = 8, stride: int = 4,
                  trace: KSVDTrace | None = None) -> Dictionary:
    Y, geometry = patch_matrix(images, patch_size, stride)
    return train_ksvd(Y, config, geometry, trace)


def half_region(shape, side: str = "left") -> np.ndarray:
    h, w = shape[:2]
    region = np.zeros((h, w), dtype=bool)
    if side == "left":
        region[:, : w // 2] = True
    else:
        region[:, w // 2:] = True
    return region


def evaluate_polish(dictionary: Dictionary, fakes, config: PolishConfig, clean=None,
                    names=None, seed_per_image: bool = True) -> dict:
    """Polish every fake and summarize blob ratios and similarity to the fake.

    With ``seed_per_image`` image ``i`` uses dropout seed ``config.seed + i``.
    """
    records = []
    polished = []
    for i, fake in enumerate(fakes):
        cfg = config
        if seed_per_image:
            cfg = PolishConfig(config.method, config.tau, config.dropout_rate, config.seed + i, config.region)
        out = polish(fake, dictionary, cfg)
        polished.append(out)
        rec = {
            "name": names[i] if names else f"{i:04d}",
            "blob_before": spectrum(fake).blob_energy_ratio,
            "blob_after": spectrum(out).blob_energy_ratio,
            "coss": coss(out, fake),
            "psnr_db": psnr(out, fake),
            "ssim": ssim(out, fake),
        }
        if clean is not None:
            rec["psnr_vs_clean_db"] = psnr(out, clean[i])
            rec["ssim_vs_clean"] = ssim(out, clean[i])
        records.append(rec)
    summary = summarize(records, config.method)
    summary["images"] = records
    return summary, polished


def _finite_mean(values) -> float:
    vals = [v for v in values if np.isfinite(v)]
    return float(np.mean(vals)) if vals else float("inf")


def summarize(records, method: str) -> dict:
    before = float(np.mean([r["blob_before"] for r in records]))
    after = float(np.mean([r["blob_after"] for r in records]))
    means = {
        "n_images": len(records),
        "mean_blob_before": before,
        "mean_blob_after": after,
        "blob_ratio": after / before if before > 0 else 0.0,
        "reduction_factor": before / after if after > 0 else float("inf"),
        "mean_coss": float(np.mean([r["coss"] for r in records])),
        "mean_psnr_db": _finite_mean([r["psnr_db"] for r in records]),
        "mean_ssim": float(np.mean([r["ssim"] for r in records])),
    }
    if records and "ssim_vs_clean" in records[0]:
        means["mean_psnr_vs_clean_db"] = _finite_mean([r["psnr_vs_clean_db"] for r in records])
        means["mean_ssim_vs_clean"] = float(np.mean([r["ssim_vs_clean"] for r in records]))
    means["checks"] = check_thresholds(means, method)
    means["passed"] = all(c["passed"] for c in means["checks"].values())
    return means


def check_thresholds(means: dict, method: str) -> dict:
    t = THRESHOLDS[method]
    checks = {}
    if t["max_blob_ratio"] is not None:
        checks["blob_ratio"] = {"value": means["blob_ratio"], "max": t["max_blob_ratio"],
                                "passed": means["blob_ratio"] <= t["max_blob_ratio"]}
    if t["min_reduction"] is not None:
        checks["reduction_factor"] = {"value": means["reduction_factor"], "min": t["min_reduction"],
                                      "passed": means["reduction_factor"] >= t["min_reduction"]}
    if t["min_ssim"] is not None:
        checks["mean_ssim"] = {"value": means["mean_ssim"], "min": t["min_ssim"],
                               "passed": means["mean_ssim"] >= t["min_ssim"]}
    if t["min_coss"] is not None:
        checks["mean_coss"] = {"value": means["mean_coss"], "min": t["min_coss"],
                               "passed": means["mean_coss"] >= t["min_coss"]}
    return checks
