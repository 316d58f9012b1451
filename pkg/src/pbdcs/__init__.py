"""Compressed sensing matrices built from pairwise balanced designs and
Hadamard matrices, with certification and recovery tools."""
from pbdcs._kernels import BACKEND
from pbdcs.construction import SensingMatrix, RealSensingMatrix, build, build_with_kind, realify
from pbdcs.designs import Design, projective_plane, steiner_triple_system
from pbdcs.hadamard import HadamardMatrix, fourier, real_hadamard

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Design",
    "HadamardMatrix",
    "RealSensingMatrix",
    "SensingMatrix",
    "build",
    "build_with_kind",
    "fourier",
    "projective_plane",
    "real_hadamard",
    "realify",
    "steiner_triple_system",
]
