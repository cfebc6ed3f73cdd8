"""Ptychographic phase retrieval: forward model, projections, metrics."""

from ._core import (
    __version__,
    e0,
    istft,
    psnr,
    reconstruct,
    simulate,
    stft,
    synthetic_digits,
)

__all__ = [
    "__version__",
    "e0",
    "istft",
    "psnr",
    "reconstruct",
    "simulate",
    "stft",
    "synthetic_digits",
]
