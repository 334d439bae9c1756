"""lidarcount: people counting from pole-mounted LiDAR point clouds.

Pipeline: ground/ROI preprocessing -> DBSCAN with a per-frame adaptive
epsilon -> per-cluster classification, either by reconstruction error of a
feature autoencoder or by a small CNN over three axis-aligned projections ->
optional 8-bit post-training quantization for edge deployment.  A synthetic
ray-casting sensor generates labeled data end to end.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
