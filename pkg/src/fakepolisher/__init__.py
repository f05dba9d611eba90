"""Remove upsampling artifacts from images by shallow reconstruction over learned dictionaries."""

__version__ = "0.1.0"

from .coding import (DenseCode, SelectorVector, SparseCode, omp, omp_matrix, project_ls,
                     project_weighted, reconstruct_code)
from .dictlearn import (Dictionary, DictKind, KSVDTrace, TrainConfig, load_dictionary,
                        save_dictionary, subset_atoms, train_ksvd, train_pca, update_atoms)
from .errors import DimensionError, FakePolisherError, FormatError, ParameterError, RankError
from .forensics import (SimilarityReport, SpectrumReport, blob_energy_ratio, build_toy_example, coss,
                        histogram, psnr, similarity, spectrum, ssim)
from .imaging import (PatchGeometry, apply_pixel_dropout, as_image, assemble_patches, extract_patches,
                      gaussian_blur, gaussian_kernel, read_image, write_image)
from .polish import PolishConfig, polish, polish_ksvd, polish_partial, polish_pca
from .synth import ArtifactKind, ArtifactType, generate_clean_corpus, inject_artifact

__all__ = [
    "ArtifactKind", "ArtifactType", "DenseCode", "DictKind", "Dictionary", "DimensionError",
    "FakePolisherError", "FormatError", "KSVDTrace", "ParameterError", "PatchGeometry",
    "PolishConfig", "RankError", "SelectorVector", "SimilarityReport", "SparseCode",
    "SpectrumReport", "TrainConfig", "apply_pixel_dropout", "as_image", "assemble_patches",
    "blob_energy_ratio", "build_toy_example", "coss", "extract_patches", "gaussian_blur",
    "gaussian_kernel", "generate_clean_corpus", "histogram", "inject_artifact", "load_dictionary",
    "omp", "omp_matrix", "polish", "polish_ksvd", "polish_partial", "polish_pca", "project_ls",
    "project_weighted", "psnr", "read_image", "reconstruct_code", "save_dictionary", "similarity",
    "spectrum", "ssim", "subset_atoms", "train_ksvd", "train_pca", "update_atoms", "write_image",
]
