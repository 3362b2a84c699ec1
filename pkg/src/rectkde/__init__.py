"""Kernel density estimation on low-dimensional rectifiable sets."""

from .domains import SparseGaussian, SubspaceCross, UniformSphere, VonMisesFisherSphere, make_domain
from .estimator import Dataset, DensityEstimator, Fixed, RateSchedule, bandwidth, build_estimator
from .kernels import KernelKind, KernelProfile, NormalizedKernel, evaluate, get_kernel, normalize
from .spatial import BruteForceIndex, KDTreeIndex, build_index

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DensityEstimator",
    "Fixed",
    "RateSchedule",
    "bandwidth",
    "build_estimator",
    "KernelKind",
    "KernelProfile",
    "NormalizedKernel",
    "evaluate",
    "get_kernel",
    "normalize",
    "BruteForceIndex",
    "KDTreeIndex",
    "build_index",
    "SparseGaussian",
    "SubspaceCross",
    "UniformSphere",
    "VonMisesFisherSphere",
    "make_domain",
]
