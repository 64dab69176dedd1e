"""Forward-only redundancy-aware video wire inpainting kernels.

The package bundles pseudo wire mask synthesis, the Raformer layer
(redundancy-aware window attention plus soft feature alignment), loss
evaluators, PSNR/PSNR*/SSIM metrics, netpbm clip io and a CLI harness.
"""

from raformer.config import RaformerConfig, ConfigError
from raformer.tensor_core import Rng

__all__ = ["RaformerConfig", "ConfigError", "Rng"]
__version__ = "0.1.0"
