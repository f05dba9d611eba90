"""Command-line front end: synth, train, polish, analyze, evaluate.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dictlearn import KSVDTrace, TrainConfig, load_dictionary, save_dictionary, train_ksvd, train_pca
from .errors import FakePolisherError
from .experiment import evaluate_polish, image_matrix, patch_matrix
from .forensics import (SSIM_WINDOW, build_toy_example, coss, histogram, histogram_peaks, psnr, similarity,
                        spectrum, spectrum_png_array)
from .imaging import read_image, write_image
from .polish import PolishConfig, polish
from .synth import ArtifactKind, ArtifactType, generate_clean_corpus, inject_artifact

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")


class CommandError(Exception):
    """Runtime or data failure inside a command (exit 1)."""


class UsageError(Exception):
    """Flag combination rejected after parsing (exit 2)."""


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int
    tool_version: str = __version__
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


# -- helpers ------------------------------------------------------------------

def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return "inf" if math.isinf(v) and v > 0 else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_json_safe(obj), sort_keys=True, indent=2) + "\n"


def write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def list_images(path) -> list[Path]:
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise CommandError(f"{path}: no such file or directory")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    if not files:
        raise CommandError(f"{path}: no images found")
    return files


def read_corpus(path) -> tuple[list[Path], list[np.ndarray]]:
    files = list_images(path)
    images = [read_image(f) for f in files]
    shape = images[0].shape
    for f, im in zip(files, images):
        if im.shape != shape:
            raise CommandError(f"{f}: image shape {im.shape} differs from {files[0].name} {shape}")
    return files, images


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FAKEPOLISHER_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _stage(msg: str) -> None:
    print(msg, file=sys.stderr)


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def unit_float(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {text}")
    return value


def dropout_float(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1), got {text}")
    return value


# -- commands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    artifact = None
    if args.artifact:
        if args.size % args.period:
            raise UsageError(f"--period {args.period} must divide --size {args.size}")
        artifact = ArtifactKind(ArtifactType.parse(args.artifact), args.strength, args.period)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_clean_corpus(args.start + args.n, args.size, args.channels, args.seed)[args.start:]
    records, outputs = [], []
    for offset, image in enumerate(corpus):
        index = args.start + offset
        name = f"{index:05d}.png"
        if artifact is not None:
            image = inject_artifact(image, artifact, args.seed + index)
        write_image(image, out / name)
        outputs.append(str(out / name))
        records.append({"file": name, "index": index,
                        "artifact": artifact.as_dict() if artifact else None})
    params = {"n": args.n, "size": args.size, "channels": args.channels, "start": args.start,
              "artifact": artifact.as_dict() if artifact else None, "images": records}
    manifest = RunManifest("synth", params, args.seed, outputs=outputs)
    write_text(args.manifest or out / "manifest.json", manifest.to_json())
    _stage(f"synth: wrote {len(records)} images to {out}")
    return 0


def cmd_train(args) -> int:
    files, images = read_corpus(args.input)
    _stage(f"train: {len(images)} images of shape {images[0].shape}")
    if args.method == "pca":
        Y = image_matrix(images)
        dictionary = train_pca(Y, args.components)
        centered = Y - dictionary.mean[:, None]
        resid = centered - dictionary.atoms @ (dictionary.atoms.T @ centered)
        norm = np.linalg.norm(centered)
        error = float(np.linalg.norm(resid) / norm) if norm > 0 else 0.0
    else:
        Y, geometry = patch_matrix(images, args.patch, args.stride)
        config = TrainConfig(args.components, args.sparsity, args.iters, args.seed, args.tol)
        trace = KSVDTrace()
        dictionary = train_ksvd(Y, config, geometry, trace)
        norm = np.linalg.norm(Y - dictionary.mean[:, None])
        final = trace.update_error[-1] if trace.update_error else 0.0
        error = float(final / norm) if norm > 0 else 0.0
    save_dictionary(dictionary, args.out)
    params = {"method": args.method, "components": args.components, "patch": args.patch,
              "stride": args.stride, "sparsity": args.sparsity, "iters": args.iters, "tol": args.tol}
    manifest = RunManifest("train", params, args.seed, inputs=[str(f) for f in files], outputs=[str(args.out)])
    write_text(args.manifest or f"{args.out}.manifest.json", manifest.to_json())
    print(f"final relative training error: {error:.6g}")
    return 0


def _load_region(path, shape) -> np.ndarray:
    mask = read_image(path)
    if mask.shape[:2] != shape[:2]:
        raise CommandError(f"{path}: region mask {mask.shape[:2]} does not match image {shape[:2]}")
    return mask.mean(axis=2) > 0.5


def cmd_polish(args) -> int:
    dictionary = load_dictionary(args.dict)
    method = args.method or ("pca" if dictionary.is_global else "ksvd")
    dropout = args.dropout if args.dropout is not None else (0.1 if method == "ksvd" else 0.0)
    files, images = read_corpus(args.input)
    region = _load_region(args.region, images[0].shape) if args.region else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def work(item):
        i, image = item
        cfg = PolishConfig(method, args.tau, dropout, args.seed + i, region)
        return polish(image, dictionary, cfg)

    _stage(f"polish: {len(images)} images, method {method}, tau {args.tau}, dropout {dropout}")
    polished = _map(work, list(enumerate(images)))
    outputs = []
    for f, image, result in zip(files, images, polished):
        target = out / f"{f.stem}.png"
        write_image(result, target)
        report = _similarity_dict(result, image)
        report["blob_energy_ratio_input"] = spectrum(image).blob_energy_ratio
        report["blob_energy_ratio_output"] = spectrum(result).blob_energy_ratio
        write_text(out / f"{f.stem}.json", dumps(report))
        outputs += [str(target), str(out / f"{f.stem}.json")]
    params = {"dict": str(args.dict), "method": method, "tau": args.tau, "dropout": dropout,
              "region": str(args.region) if args.region else None}
    manifest = RunManifest("polish", params, args.seed, inputs=[str(f) for f in files], outputs=outputs)
    write_text(args.manifest or out / "manifest.json", manifest.to_json())
    return 0


def _similarity_dict(a, b) -> dict:
    """SimilarityReport fields; SSIM is null for images smaller than its window."""
    if min(a.shape[:2]) < SSIM_WINDOW:
        return {"coss": coss(a, b), "psnr_db": _json_safe(psnr(a, b)), "ssim": None,
                "ssim_note": f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"}
    return similarity(a, b).to_dict()


def _hist_csv(counts) -> str:
    lines = ["bin,count"] + [f"{i},{int(c)}" for i, c in enumerate(counts)]
    return "\n".join(lines) + "\n"


def _analyze_image(image, stem: str, out: Path) -> tuple[dict, list[str]]:
    report = spectrum(image)
    counts = histogram(image)
    payload = report.to_dict()
    payload["histogram_peaks"] = histogram_peaks(counts).tolist()
    paths = [out / f"{stem}.spectrum.json", out / f"{stem}.spectrum.png", out / f"{stem}.hist.csv"]
    write_text(paths[0], dumps(payload))
    write_image(spectrum_png_array(report), paths[1])
    write_text(paths[2], _hist_csv(counts))
    return payload, [str(p) for p in paths]


def cmd_analyze(args) -> int:
    if not (args.images or args.pair or args.toy):
        raise UsageError("give images to analyze, --pair A B, or --toy")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs, outputs, summary = [], [], {}
    for path in args.images:
        for f in list_images(path):
            payload, written = _analyze_image(read_image(f), f.stem, out)
            summary[f.name] = payload
            inputs.append(str(f))
            outputs += written
    if args.pair:
        a_path, b_path = args.pair
        a, b = read_image(a_path), read_image(b_path)
        if a.shape != b.shape:
            raise CommandError(f"pair size mismatch: {a_path} {a.shape} vs {b_path} {b.shape}")
        pair = _similarity_dict(a, b)
        pair["blob_energy_ratio_a"] = spectrum(a).blob_energy_ratio
        pair["blob_energy_ratio_b"] = spectrum(b).blob_energy_ratio
        write_text(out / "pair.json", dumps(pair))
        inputs += [str(a_path), str(b_path)]
        outputs.append(str(out / "pair.json"))
        summary["pair"] = pair
    if args.toy:
        toy = build_toy_example()
        for stem, image in (("toy", toy.toy), ("toy_blurred", toy.blurred)):
            write_image(image, out / f"{stem}.png")
            _, written = _analyze_image(image, stem, out)
            outputs += [str(out / f"{stem}.png")] + written
        peaks_toy = histogram_peaks(toy.hist_toy)
        peaks_blur = histogram_peaks(toy.hist_blurred)
        dominant = np.sort(toy.hist_toy)[::-1]
        toy_summary = {
            "size": list(toy.toy.shape),
            "nonzero_bins_toy": int(np.count_nonzero(toy.hist_toy)),
            "top_two_bin_share": float(dominant[:2].sum() / dominant.sum()),
            "peaks_toy": peaks_toy.tolist(),
            "peaks_blurred": peaks_blur.tolist(),
            "blob_energy_ratio_toy": toy.report_toy.blob_energy_ratio,
            "blob_energy_ratio_blurred": toy.report_blurred.blob_energy_ratio,
        }
        write_text(out / "toy_summary.json", dumps(toy_summary))
        outputs.append(str(out / "toy_summary.json"))
        summary["toy"] = toy_summary
    params = {"images": [str(p) for p in args.images], "pair": args.pair, "toy": args.toy}
    manifest = RunManifest("analyze", params, 0, inputs=inputs, outputs=outputs)
    write_text(args.manifest or out / "manifest.json", manifest.to_json())
    sys.stdout.write(dumps(summary))
    return 0


def cmd_evaluate(args) -> int:
    dict_path = Path(args.dict)
    if not dict_path.is_file():
        raise CommandError(f"{dict_path}: dictionary file not found")
    dictionary = load_dictionary(dict_path)
    clean_files, clean = read_corpus(args.clean)
    fake_files, fakes = read_corpus(args.fake)
    clean_names = [f.name for f in clean_files]
    fake_names = [f.name for f in fake_files]
    if clean_names != fake_names:
        missing = sorted(set(clean_names) ^ set(fake_names))
        raise CommandError(f"unpaired corpora: {', '.join(missing[:5]) or 'image shapes differ'}")
    if clean[0].shape != fakes[0].shape:
        raise CommandError(f"unpaired corpora: clean {clean[0].shape} vs fake {fakes[0].shape}")
    method = args.method or ("pca" if dictionary.is_global else "ksvd")
    dropout = args.dropout if args.dropout is not None else (0.1 if method == "ksvd" else 0.0)
    config = PolishConfig(method, args.tau, dropout, args.seed)
    _stage(f"evaluate: {len(fakes)} pairs, method {method}")
    summary, _ = evaluate_polish(dictionary, fakes, config, clean=clean, names=fake_names)
    params = {"dict": str(dict_path), "clean": str(args.clean), "fake": str(args.fake),
              "method": method, "tau": args.tau, "dropout": dropout}
    outputs = [] if args.json == "-" else [str(args.json)]
    manifest = RunManifest("evaluate", params, args.seed,
                           inputs=[str(f) for f in clean_files + fake_files], outputs=outputs)
    summary["manifest"] = json.loads(manifest.to_json())
    text = dumps(summary)
    if args.json == "-":
        sys.stdout.write(text)
    else:
        write_text(args.json, text)
    if args.manifest:
        write_text(args.manifest, manifest.to_json())
    return 0 if summary["passed"] else 1


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fakepolisher", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic clean or fake corpus")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--size", type=positive_int, default=32)
    p.add_argument("--channels", type=int, choices=(1, 3), default=1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--start", type=nonneg_int, default=0, help="index of the first image written")
    p.add_argument("--artifact", choices=("checkerboard", "unpooling", "interpolation"))
    p.add_argument("--strength", type=unit_float, default=0.3)
    p.add_argument("--period", type=int, choices=(2, 4, 8), default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="learn a PCA or K-SVD dictionary")
    p.add_argument("--method", choices=("pca", "ksvd"), required=True)
    p.add_argument("--components", type=positive_int, required=True)
    p.add_argument("--patch", type=positive_int, default=8)
    p.add_argument("--stride", type=positive_int, default=4)
    p.add_argument("--sparsity", type=positive_int, default=15)
    p.add_argument("--iters", type=positive_int, default=10)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("polish", help="reconstruct images over a dictionary")
    p.add_argument("--dict", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("pca", "ksvd"))
    p.add_argument("--tau", type=positive_int, default=20)
    p.add_argument("--dropout", type=dropout_float, help="default 0.1 for ksvd, 0 for pca")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", help="mask image; white pixels are polished")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_polish)

    p = sub.add_parser("analyze", help="spectrum, histogram and similarity reports")
    p.add_argument("images", nargs="*")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"))
    p.add_argument("--toy", action="store_true")
    p.add_argument("--out", default="analysis")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="polish a paired fake corpus and score it")
    p.add_argument("--dict", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--method", choices=("pca", "ksvd"))
    p.add_argument("--tau", type=positive_int, default=20)
    p.add_argument("--dropout", type=dropout_float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default="-", help="summary path, '-' for stdout")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CommandError, FakePolisherError, OSError) as exc:
        print(f"fakepolisher {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
