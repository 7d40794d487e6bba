from .tensor import (
    LOG_EPS,
    Function,
    Tensor,
    add,
    concat,
    elementwise,
    embedding_lookup,
    ensure_tensor,
    glorot_uniform,
    log,
    matmul,
    max_over_axis,
    mean,
    mean_rows,
    mul,
    negate,
    no_grad,
    reduce,
    region_pool,
    relu,
    reshape,
    sigmoid,
    softmax_cross_entropy,
    softmax_row,
    stack,
    sub,
    tanh,
    tensor_sum,
    transpose,
    uniform,
    zeros,
)
from .gradcheck import check_gradients, max_relative_error, numeric_gradient

__all__ = [
    "LOG_EPS", "Function", "Tensor", "add", "concat", "elementwise",
    "embedding_lookup", "ensure_tensor", "glorot_uniform", "log", "matmul",
    "max_over_axis", "mean", "mean_rows", "mul", "negate", "no_grad",
    "reduce", "region_pool", "relu", "reshape", "sigmoid",
    "softmax_cross_entropy", "softmax_row", "stack", "sub", "tanh",
    "tensor_sum", "transpose", "uniform", "zeros",
    "check_gradients", "max_relative_error", "numeric_gradient",
]
