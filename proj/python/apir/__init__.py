"""Scan-specific parallel MRI reconstruction toolkit."""

from ._core import (
    Error,
    SamplingMasks,
    add_noise,
    apirnet_reconstruct,
    apply_mask,
    conv2d_periodic,
    dft_forward,
    dft_inverse,
    grappa_reconstruct,
    make_masks,
    mse,
    noise_amplification,
    reconstruct_image,
    rms_combine,
    simulate_phantom,
)

__version__ = "0.1.0"

__all__ = [
    "Error",
    "SamplingMasks",
    "add_noise",
    "apirnet_reconstruct",
    "apply_mask",
    "conv2d_periodic",
    "dft_forward",
    "dft_inverse",
    "grappa_reconstruct",
    "make_masks",
    "mse",
    "noise_amplification",
    "reconstruct_image",
    "rms_combine",
    "simulate_phantom",
]
