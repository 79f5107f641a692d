"""Ordered merge trees, monotone interleavings and their ParkView drawings."""
from .mergetree import (
    OrderedMergeTree,
    TreePoint,
    Path,
    Violation,
    TreeFormatError,
    TreeValidationError,
    validate_tree,
    ancestor_at_height,
    lca,
    order_at_height,
    read_tree,
    write_tree,
)
from .interleaving import (
    ShiftMap,
    Interleaving,
    Branch,
    evaluate,
    validate_shift_map,
    validate_interleaving,
    branch_of_edge,
    branch_of_path,
    edge_weights,
    read_interleaving,
    write_interleaving,
)
from .decomposition import (
    PathDecomposition,
    PathBranchDecomposition,
    heavy_decomposition,
    enumerate_all_decompositions,
    decomposition_cost,
    brute_force_optimum,
    path_branch_decomposition,
)
from .layout import (
    LayoutConfig,
    Scene,
    Hedge,
    Bar,
    build_columns,
    build_hedge,
    hedge_adjacency,
    check_hedge_properties,
    color_hedges,
    build_scene,
)
from .render import RenderConfig, render_svg
from .pipeline import (
    ScalarField2D,
    read_field,
    merge_tree_from_field,
    simplify,
    order_leaves,
    euler_tour,
    frechet_delta,
    interleaving_from_matching,
    compare_fields,
)

__version__ = "0.1.0"
