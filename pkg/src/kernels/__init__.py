from src.kernels.tensor import ConvSpec, as_tensor, check_finite
from src.kernels.conv import conv2d
from src.kernels.dense import linear, relu, softmax, batchnorm_infer, l2_normalize
from src.kernels.pooling import max_pool2d, adaptive_avg_pool2d, upsample_nearest, roi_pool
from src.kernels.tensor_ops import add, mul, concat, embedding, mask_fill
from src.kernels.losses import bce_with_logits, cross_entropy, sigmoid, smooth_l1
from src.kernels.registry import KERNELS, backward, get_kernel, run_forward
from src.kernels.tape import NO_GRAD, InferenceTape, Node, Tape, value_of

__all__ = [
    "ConvSpec",
    "as_tensor",
    "check_finite",
    "conv2d",
    "linear",
    "relu",
    "softmax",
    "batchnorm_infer",
    "l2_normalize",
    "max_pool2d",
    "adaptive_avg_pool2d",
    "upsample_nearest",
    "roi_pool",
    "add",
    "mul",
    "concat",
    "embedding",
    "mask_fill",
    "bce_with_logits",
    "cross_entropy",
    "sigmoid",
    "smooth_l1",
    "KERNELS",
    "backward",
    "get_kernel",
    "run_forward",
    "NO_GRAD",
    "InferenceTape",
    "Node",
    "Tape",
    "value_of",
]
