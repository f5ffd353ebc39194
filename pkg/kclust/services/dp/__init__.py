from .binary_tree import BinaryNode, BinarySplitTree, binarize
from .configuration import (
    Configuration,
    DPTable,
    NodeTable,
    bucket_of,
    cost_buckets,
    key_range,
    quantize,
    quantize_rows,
)
from .solver import PortalDP, evaluate_portal_cost, solve_dp, write_trace
