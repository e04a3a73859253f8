"""Dense-tensor group convolution engine with hand-written backprop."""

from .network import (
    ConfigError,
    Network,
    NetworkConfig,
    build_network,
    check_budget,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .ops import conv2d, expand_group_filter, group_conv, group_index_table, group_pool, planar_conv2d
from .train import NumericError, TrainConfig, error_rate, gradient_check, train
