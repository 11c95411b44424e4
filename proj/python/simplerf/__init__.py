"""Desk-scale CPU lab for sparse-view radiance fields."""

from ._simplerf import (
    ConfigError,
    NumericalError,
    default_config,
    evaluate,
    generate_scene,
    gradcheck,
    psnr,
    render,
    ssim,
    train,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "default_config",
    "evaluate",
    "generate_scene",
    "gradcheck",
    "psnr",
    "render",
    "ssim",
    "train",
]
