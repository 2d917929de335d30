"""Threshold group testing designs, oracles, and verifiers."""

from .bitmat import (
    BitMatrix,
    BitVector,
    ItemSet,
    block_combine,
    block_row_index,
    block_row_pair,
    complement,
    exclusion_vec,
    or_vec,
    read_matrix,
    support,
    write_matrix,
)
from .constructions import (
    BernoulliSpec,
    ConstructionReport,
    bernoulli_matrix,
    build_list_disjunct,
    build_selector,
    build_single_selector,
)
from .designs import (
    DecodeResult,
    GeneralBundle,
    TwoStageState,
    U2Bundle,
    UEqDPlan,
    cover_decode,
    find_indicator_pair,
    general_decode,
    general_encode,
    load_bundle,
    run_general,
    run_u2,
    run_u_eq_d,
    save_bundle,
    u2_encode,
    u2_na_decode,
    u2_twostage_finish,
    u2_twostage_stage1,
    u_eq_d_decode,
    u_eq_d_plan,
)
from .oracle import Instance, Layout, OracleSession, OutcomeVector, run_matrix, threshold_test
from .verifiers import (
    Witness,
    verify_list_disjunct,
    verify_selector,
    verify_single_selector,
)

__version__ = "0.1.0"
