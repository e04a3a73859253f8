"""Color-equivariant CNNs over hue, saturation and luminance (HSL) with NumPy."""

from .colorspace import HslImage, RgbImage, hsl_to_rgb, rgb_to_hsl
from .groups import CoverMap, CyclicGroup, DomainError, HslGroup, hsl_action
from .lifting import coverage_report, lift_image, partition_entropy, select_order

__version__ = "0.1.0"

__all__ = [
    "RgbImage", "HslImage", "rgb_to_hsl", "hsl_to_rgb",
    "CyclicGroup", "HslGroup", "CoverMap", "DomainError", "hsl_action",
    "lift_image", "partition_entropy", "coverage_report", "select_order",
]
