"""Low-bitwidth convolution through bit-packed wide multiplications.

Quantized convolution wastes a wide multiplier on narrow operands.  This
package packs many operands into each multiplier input so that a single
wide multiplication computes every segment of a 1-D convolution at once,
scales that to sequences of any length and to multi-channel DNN layers,
and reports how many wide multiplies the packed route spends versus the
scalar multiplies it replaces.
"""

from .conv1d import Conv1DResult, conv_base, conv_extended, conv_multichannel
from .dnnconv import LayerPlan, conv_layer, layer_op_counts, layer_plan
from .errors import Infeasible, Overflow, PackConvError, RangeError, ShapeError
from .kernels import available_backends, default_backend
from .oracle import OpCount, naive_conv1d, naive_conv_layer
from .packing import (
    WIDE_MULTIPLIES,
    PackedWord,
    QuantSeq,
    accumulate,
    extend,
    multiply,
    pack_signed,
    pack_unsigned,
    unpack,
)
from .params import (
    MultiplierSpec,
    PackParams,
    QuantSpec,
    ThroughputCell,
    ceil_log2,
    guard_bits,
    search_optimal,
    slice_width,
    throughput_grid,
)
from .tensors import FeatureMap, KernelTensor, OutputMap, value_bounds

__version__ = "0.1.0"

__all__ = [
    "Conv1DResult",
    "FeatureMap",
    "Infeasible",
    "KernelTensor",
    "LayerPlan",
    "MultiplierSpec",
    "OpCount",
    "OutputMap",
    "Overflow",
    "PackConvError",
    "PackParams",
    "PackedWord",
    "QuantSeq",
    "QuantSpec",
    "RangeError",
    "ShapeError",
    "ThroughputCell",
    "WIDE_MULTIPLIES",
    "accumulate",
    "available_backends",
    "ceil_log2",
    "conv_base",
    "conv_extended",
    "conv_layer",
    "conv_multichannel",
    "default_backend",
    "extend",
    "guard_bits",
    "layer_op_counts",
    "layer_plan",
    "multiply",
    "naive_conv1d",
    "naive_conv_layer",
    "pack_signed",
    "pack_unsigned",
    "search_optimal",
    "slice_width",
    "throughput_grid",
    "unpack",
    "value_bounds",
    "__version__",
]
