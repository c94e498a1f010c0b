"""Mixed-dimensional ZX diagrams for SU(2) representation theory.

A diagram data model with exact dense-tensor semantics, closed-form
angular-momentum oracles, spin-network constructors, a soundness-certified
rewrite engine, and four worked application pipelines.
"""

from .errors import SpinZXError
from .spins import Spin, Magnetic, spin, magnetic, parse_half_integer
from .diagram import (
    Diagram,
    Node,
    Wire,
    Tag,
    ZSpider,
    XSpider,
    Hadamard,
    Dualiser,
    WNode,
    Triangle,
    DimSplit,
    MatrixBox,
    adjoint,
    compose,
    compose_all,
    cup,
    cap,
    deserialize,
    empty_diagram,
    hadamard,
    identity,
    matrix_box,
    multiplier,
    permutation_diagram,
    serialize,
    swap,
    tensor,
    tensor_all,
    to_dot,
    w_node,
    wires_diagram,
    x_spider,
    z_spider,
)
from .evaluate import (
    DEFAULT_CONFIG,
    EvalConfig,
    evaluate,
    evaluate_scalar,
    node_tensor,
    proportional,
    tensors_close,
)
from .oracles import (
    SpinTriple,
    CouplingTree,
    clebsch_gordan,
    coupling_tree_state,
    couple,
    injection_matrix,
    leaf,
    permutation_unitary,
    pqc_amplitude_oracle,
    random_su2,
    swap_perm,
    symmetriser_dense,
    tree,
    triple,
    wigner_3jm,
    wigner_D_oracle,
)
from .constructors import (
    binor_antisym,
    binor_cap,
    binor_cross,
    binor_cup,
    binor_trace,
    controlled_J,
    controlled_pauli,
    diagram_sum,
    dim_restrict,
    dim_splitter,
    embed_isometry,
    hamiltonian_diagram,
    injection,
    j1_diagram,
    j2_diagram,
    j3_diagram,
    ladder_diagram,
    magnetic_state,
    spin_cap,
    spin_cup,
    symmetriser,
    three_j_state,
    three_j_state_unsimplified,
    vertex_gate,
    wigner_diagram,
    wire_reverser,
)
from .rewrite import (
    MatchSite,
    RewriteRule,
    apply_rule,
    builtin_rules,
    certify_rule,
    find_matches,
    partial_trace,
    register_rule,
    simplify,
)
from .apps import (
    AKLTConfig,
    AnsatzSpec,
    LQGConstants,
    aklt_chain,
    aklt_config_amplitude,
    aklt_ground_check,
    aklt_mps_oracle,
    area_eigenvalue,
    lqg_min_volume_check,
    lqg_vtilde2,
    pqc_amplitude,
    qml_expectation,
    qml_grad_variance,
)
from .verify import run_suite

__version__ = "0.1.0"
