"""Encoders and decoders for the threshold designs.

Four designs are provided:

* general non-adaptive (2 <= u < d): single selector A, u-disjunct B,
  (d-u+1)-disjunct M, measurement matrix [A; B excl A; M or (B excl A)];
* u=2 non-adaptive: (2d, d+2, n)-selector A plus d-disjunct M with
  indicator / reference / identification segments;
* u=2 two-stage: same A plus a (d, d)-list-disjunct H, then pairwise
  tests over the stage-1 candidate set;
* u=d: a d-disjunct matrix and its complement (complement outcomes,
  negated, are the standard-group-testing outcomes of M).

Outcome vectors use segmented layouts (all of one block kind, then the
next) rather than interleaving; the index maps below are the normative
correspondence.  Decoders are pure functions of (outcomes, bundle) and
carry no knowledge of the defective set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .bitmat import (
    BitMatrix,
    ItemSet,
    block_row_index,
    complement,
    read_matrix,
    write_matrix,
)
from .constructions import (
    ConstructionReport,
    build_list_disjunct,
    build_selector,
    build_single_selector,
    require_verified,
)
from .errors import (
    DecodeFailureError,
    DimensionError,
    InvariantViolationError,
    ParameterError,
)
from .oracle import Layout, LazyOrBlocks, OracleSession, OutcomeVector
from .rng import derive_seed
from . import verifiers

BUNDLE_FORMAT = "tgt-bundle v1"
BUNDLE_FILE = "bundle.json"


# ---------------------------------------------------------------------------
# cover decoder

def _outcome_array(y, expected: int) -> np.ndarray:
    if isinstance(y, OutcomeVector):
        y = y.bits
    arr = np.asarray(y, dtype=bool)
    if arr.ndim != 1 or arr.size != expected:
        raise DimensionError(f"expected {expected} outcome bits, got {arr.size}")
    return arr


def cover_decode(y, m: BitMatrix) -> ItemSet:
    """Items appearing in no negative test.

    Exact when m is k-disjunct and the true support has size <= k; a
    superset of size <= 2k when m is (k, k)-list-disjunct.
    """
    arr = _outcome_array(y, m.rows)
    if m.rows_u64 is not None:
        eliminated = int(np.bitwise_or.reduce(m.rows_u64[~arr], initial=np.uint64(0)))
    else:
        eliminated = 0
        for bits, positive in zip(m.row_bits, arr):
            if not positive:
                eliminated |= bits
    return ItemSet.from_mask(m.cols, ((1 << m.cols) - 1) & ~eliminated)


# ---------------------------------------------------------------------------
# general non-adaptive design (2 <= u < d)

@dataclass(frozen=True)
class DecodeResult:
    """Recovered set plus the per-branch audit.

    Branch keys are (strip_row, selector_row): the row of B whose support
    was stripped and the row of A it was stripped from.
    """

    recovered: ItemSet
    branches: tuple[tuple[tuple[int, int], ItemSet], ...]

    @property
    def branch_map(self) -> dict[tuple[int, int], ItemSet]:
        return dict(self.branches)


class GeneralBundle:
    """Matrices and layout of one general design instance."""

    def __init__(
        self,
        n: int,
        d: int,
        u: int,
        seed: int,
        selector: BitMatrix,
        strip: BitMatrix,
        ident: BitMatrix,
        reports: dict[str, ConstructionReport] | None = None,
    ):
        self.n = n
        self.d = d
        self.u = u
        self.seed = seed
        self.A = selector
        self.B = strip
        self.M = ident
        self.reports = reports or {}
        for name, mat in (("A", selector), ("B", strip), ("M", ident)):
            if mat.cols != n:
                raise DimensionError(f"matrix {name} has {mat.cols} cols, expected {n}")

    @property
    def a(self) -> int:
        return self.A.rows

    @property
    def b(self) -> int:
        return self.B.rows

    @property
    def m(self) -> int:
        return self.M.rows

    @property
    def total_tests(self) -> int:
        return self.a + self.a * self.b + self.a * self.b * self.m

    @property
    def layout(self) -> Layout:
        return Layout(
            (
                ("selector", self.a),
                ("exclusion", self.a * self.b),
                ("augmented", self.a * self.b * self.m),
            )
        )

    @cached_property
    def exclusion_rows(self) -> tuple[int, ...]:
        """Rows of B excl A in layout order: (i-1)*b + i' holds A_i minus B_i'."""
        return tuple(
            arow & ~brow for arow in self.A.row_bits for brow in self.B.row_bits
        )

    def exclusion_index(self, strip_row: int, selector_row: int) -> int:
        return block_row_index(selector_row, strip_row, self.b)

    def augmented_slice(self, strip_row: int, selector_row: int) -> slice:
        base = (self.exclusion_index(strip_row, selector_row) - 1) * self.m
        return slice(base, base + self.m)


def general_encode(
    n: int,
    d: int,
    u: int,
    seed: int,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
    matrices: dict[str, BitMatrix] | None = None,
) -> GeneralBundle:
    """Build (or accept injected) matrices for the general design.

    Component seeds derive from `seed` with stream tags 1 (A), 2 (B), 3 (M).
    """
    if not 2 <= u < d <= n:
        if u == d:
            raise ParameterError("u = d is served by the complement design (u_eq_d)")
        raise ParameterError(f"need 2 <= u < d <= n, got u={u}, d={d}, n={n}")
    if matrices is not None:
        bundle = GeneralBundle(
            n, d, u, seed, matrices["A"], matrices["B"], matrices["M"]
        )
        if verify:
            for witness in (
                verifiers.verify_single_selector(bundle.A, d, u, budget),
                verifiers.verify_list_disjunct(bundle.B, u, 1, budget),
                verifiers.verify_list_disjunct(bundle.M, d - u + 1, 1, budget),
            ):
                if witness is not None:
                    raise ParameterError(f"injected matrix fails verification: {witness}")
        return bundle
    rep_a = require_verified(
        build_single_selector(n, d, u, derive_seed(seed, 1), verify, budget),
        "single selector A",
    )
    rep_b = require_verified(
        build_list_disjunct(n, u, 1, derive_seed(seed, 2), verify=verify, budget=budget),
        "u-disjunct B",
    )
    rep_m = require_verified(
        build_list_disjunct(
            n, d - u + 1, 1, derive_seed(seed, 3), verify=verify, budget=budget
        ),
        "(d-u+1)-disjunct M",
    )
    return GeneralBundle(
        n, d, u, seed, rep_a.matrix, rep_b.matrix, rep_m.matrix,
        reports={"A": rep_a, "B": rep_b, "M": rep_m},
    )


def run_general(bundle: GeneralBundle, session: OracleSession) -> OutcomeVector:
    """Submit all a + a*b + a*b*m tests and assemble the outcome vector."""
    y_a = session.run_matrix(bundle.A).bits
    y_excl = session.run_rows(bundle.exclusion_rows, bundle.n)
    grid = session.run_or_grid(bundle.exclusion_rows, bundle.M.row_bits, bundle.n)
    bits = y_a + y_excl + tuple(int(v) for v in grid.ravel())
    return OutcomeVector(bits, bundle.layout)


def general_decode(y: OutcomeVector, bundle: GeneralBundle) -> DecodeResult:
    """Union the cover decodes of every (positive A row, negative strip row) branch."""
    if len(y) != bundle.layout.total:
        raise DimensionError(
            f"outcome vector has {len(y)} bits, layout needs {bundle.layout.total}"
        )
    seg_a = y.segment("selector")
    seg_excl = y.segment("exclusion")
    seg_aug = y.segment("augmented")
    recovered = 0
    branches = []
    for i in range(1, bundle.a + 1):
        if not seg_a[i - 1]:
            continue
        for i_prime in range(1, bundle.b + 1):
            if seg_excl[bundle.exclusion_index(i_prime, i) - 1]:
                continue
            block = seg_aug[bundle.augmented_slice(i_prime, i)]
            found = cover_decode(block, bundle.M)
            branches.append(((i_prime, i), found))
            recovered |= found.mask
    return DecodeResult(
        ItemSet.from_mask(bundle.n, recovered), tuple(branches)
    )


# ---------------------------------------------------------------------------
# u = 2 designs

class U2Bundle:
    """Matrices and layout of one u=2 design (non-adaptive or 2-stage)."""

    def __init__(
        self,
        n: int,
        d: int,
        seed: int,
        two_stage: bool,
        selector: BitMatrix,
        ident: BitMatrix,
        reports: dict[str, ConstructionReport] | None = None,
    ):
        self.n = n
        self.d = d
        self.u = 2
        self.seed = seed
        self.two_stage = two_stage
        self.A = selector
        self.ident = ident
        self.reports = reports or {}
        for name, mat in (("A", selector), ("ident", ident)):
            if mat.cols != n:
                raise DimensionError(f"matrix {name} has {mat.cols} cols, expected {n}")

    @property
    def a(self) -> int:
        return self.A.rows

    @property
    def ident_rows(self) -> int:
        return self.ident.rows

    @property
    def stage1_tests(self) -> int:
        return self.a + self.a * self.a + self.a * self.ident_rows

    @property
    def layout(self) -> Layout:
        return Layout(
            (
                ("indicator", self.a),
                ("reference", self.a * self.a),
                ("identification", self.a * self.ident_rows),
            )
        )


def u2_encode(
    n: int,
    d: int,
    seed: int,
    two_stage: bool = False,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
    matrices: dict[str, BitMatrix] | None = None,
) -> U2Bundle:
    """Build the (2d, d+2, n)-selector plus the identification matrix.

    Component seeds derive from `seed` with stream tags 1 (A) and 2 (M or H).
    """
    if d < 2:
        raise ParameterError(f"u=2 designs need d >= u = 2, got d={d}")
    if 2 * d > n:
        raise ParameterError(f"selector needs 2d <= n, got 2*{d} > {n}")
    if matrices is not None:
        return U2Bundle(n, d, seed, two_stage, matrices["A"], matrices["ident"])
    rep_a = require_verified(
        build_selector(n, 2 * d, d + 2, derive_seed(seed, 1), verify, budget),
        "(2d, d+2, n)-selector A",
    )
    if two_stage:
        rep_i = require_verified(
            build_list_disjunct(n, d, d, derive_seed(seed, 2), verify=verify, budget=budget),
            "(d, d)-list-disjunct H",
        )
    else:
        rep_i = require_verified(
            build_list_disjunct(n, d, 1, derive_seed(seed, 2), verify=verify, budget=budget),
            "d-disjunct M",
        )
    return U2Bundle(
        n, d, seed, two_stage, rep_a.matrix, rep_i.matrix,
        reports={"A": rep_a, "ident": rep_i},
    )


@dataclass(frozen=True)
class U2Outcomes:
    """Stage-1 outcomes of a u=2 design, identification blocks possibly lazy."""

    indicator: tuple[int, ...]
    reference: np.ndarray  # (a, a) bool, [i-1, j-1] = test(A_j | A_i)
    identification: LazyOrBlocks


def run_u2(bundle: U2Bundle, session: OracleSession) -> U2Outcomes:
    """Submit the full a + a^2 + a*h stage-1 plan."""
    y = session.run_matrix(bundle.A).bits
    reference = session.run_or_grid(bundle.A.row_bits, bundle.A.row_bits, bundle.n)
    ident = session.plan_or_blocks(bundle.A.row_bits, bundle.ident.row_bits, bundle.n)
    return U2Outcomes(y, reference, ident)


def u2_outcome_vector(bundle: U2Bundle, outcomes: U2Outcomes) -> OutcomeVector:
    """Materialize the segmented outcome vector (evaluates every lazy block)."""
    bits = list(outcomes.indicator)
    bits.extend(int(v) for v in outcomes.reference.ravel())
    for i in range(1, bundle.a + 1):
        bits.extend(int(v) for v in outcomes.identification.block(i))
    return OutcomeVector(tuple(bits), bundle.layout)


def find_indicator_pair(
    y_seg: Sequence[int], r_seg
) -> tuple[int, int] | None:
    """First (i1 < i2) with both indicator bits 0 and their joined test 1.

    r_seg may be the flat a^2 reference segment (entry (i-1)*a + i') or the
    equivalent (a, a) grid.  Returns None when no pair qualifies; that is a
    decode-failure signal, not an error.
    """
    a = len(y_seg)
    grid = np.asarray(r_seg)
    if grid.ndim == 1:
        if grid.size != a * a:
            raise DimensionError(f"reference segment has {grid.size} bits, expected {a * a}")
        grid = grid.reshape(a, a)
    for i1 in range(1, a + 1):
        if y_seg[i1 - 1]:
            continue
        for i2 in range(i1 + 1, a + 1):
            if not y_seg[i2 - 1] and grid[i1 - 1, i2 - 1]:
                return i1, i2
    return None


def _identification_block(f, bundle: U2Bundle, i: int):
    if isinstance(f, LazyOrBlocks):
        return f.block(i)
    h = bundle.ident_rows
    if len(f) != bundle.a * h:
        raise DimensionError(
            f"identification segment has {len(f)} bits, expected {bundle.a * h}"
        )
    return f[(i - 1) * h : i * h]


def u2_na_decode(y_seg, r_seg, f_seg, bundle: U2Bundle) -> ItemSet:
    """Decode the u=2 non-adaptive design; exact when |P| = d."""
    pair = find_indicator_pair(y_seg, r_seg)
    if pair is None:
        raise DecodeFailureError("no indicator pair (i1, i2) found")
    i1, i2 = pair
    left = cover_decode(_identification_block(f_seg, bundle, i1), bundle.ident)
    right = cover_decode(_identification_block(f_seg, bundle, i2), bundle.ident)
    return left.union(right)


@dataclass(frozen=True)
class TwoStageState:
    """Stage-1 result of the 2-stage design: candidates and the pair plan."""

    n: int
    indicator_pair: tuple[int, int]
    candidates: ItemSet
    pair_plan: tuple[tuple[int, int], ...]


def u2_twostage_stage1(y_seg, r_seg, f_seg, bundle: U2Bundle) -> TwoStageState:
    """Compute the candidate set R and the stage-2 pairwise test plan.

    |R| <= 3d - 2 is guaranteed by the list-disjunct contract; exceeding it
    signals a construction or oracle bug and raises.
    """
    pair = find_indicator_pair(y_seg, r_seg)
    if pair is None:
        raise DecodeFailureError("no indicator pair (i1, i2) found")
    i1, i2 = pair
    left = cover_decode(_identification_block(f_seg, bundle, i1), bundle.ident)
    right = cover_decode(_identification_block(f_seg, bundle, i2), bundle.ident)
    candidates = left.union(right)
    bound = 3 * bundle.d - 2
    if len(candidates) > bound:
        raise InvariantViolationError(
            f"candidate set has {len(candidates)} items, bound is 3d-2 = {bound}"
        )
    plan = tuple(combinations(candidates.members, 2))
    return TwoStageState(bundle.n, pair, candidates, plan)


def u2_twostage_finish(state: TwoStageState, pair_bits: Sequence[int]) -> ItemSet:
    """Union both members of every positive stage-2 pair."""
    if len(pair_bits) != len(state.pair_plan):
        raise DimensionError(
            f"{len(pair_bits)} pair outcomes for {len(state.pair_plan)} planned pairs"
        )
    mask = 0
    for (p, q), bit in zip(state.pair_plan, pair_bits):
        if bit:
            mask |= (1 << (p - 1)) | (1 << (q - 1))
    return ItemSet.from_mask(state.n, mask)


def run_u2_twostage(bundle: U2Bundle, session: OracleSession):
    """Full 2-stage flow against one oracle session.

    Returns (state, stage2_bits, recovered); stage-2 tests are charged as
    they run, so the session ledger ends at a + a^2 + a*h + C(|R|, 2).
    """
    outcomes = run_u2(bundle, session)
    state = u2_twostage_stage1(
        outcomes.indicator, outcomes.reference, outcomes.identification, bundle
    )
    stage2 = tuple(session.test_pair(p, q) for p, q in state.pair_plan)
    return state, stage2, u2_twostage_finish(state, stage2)


# ---------------------------------------------------------------------------
# u = d complement design

class UEqDPlan:
    """Test plan for u = d: a d-disjunct matrix and its complement."""

    def __init__(self, n: int, d: int, seed: int, ident: BitMatrix,
                 report: ConstructionReport | None = None):
        self.n = n
        self.d = d
        self.u = d
        self.seed = seed
        self.M = ident
        self.M_complement = complement(ident)
        self.report = report

    @property
    def m(self) -> int:
        return self.M.rows

    @property
    def total_tests(self) -> int:
        return 2 * self.m

    @property
    def layout(self) -> Layout:
        return Layout((("direct", self.m), ("complement", self.m)))


def u_eq_d_plan(
    n: int,
    d: int,
    seed: int,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
) -> UEqDPlan:
    """Build the u = d plan; component seed derives with stream tag 1.

    d = n degenerates (d-disjunctness is vacuous: no disjoint S1, S2 fit);
    the identity matrix serves, and the only positive complement pool is
    the empty-support one, so decoding still returns [1..n].
    """
    if not 1 <= d <= n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}, n={n}")
    if d == n:
        ident = BitMatrix.identity(n)
        report = ConstructionReport(ident, 1, "skipped", n)
    else:
        report = require_verified(
            build_list_disjunct(n, d, 1, derive_seed(seed, 1), verify=verify, budget=budget),
            "d-disjunct M",
        )
        ident = report.matrix
    return UEqDPlan(n, d, seed, ident, report)


def run_u_eq_d(plan: UEqDPlan, session: OracleSession) -> OutcomeVector:
    """Test M and its complement; both are charged, only the complement decodes."""
    direct = session.run_matrix(plan.M).bits
    comp = session.run_matrix(plan.M_complement).bits
    return OutcomeVector(direct + comp, plan.layout)


def u_eq_d_decode(y: OutcomeVector, plan: UEqDPlan) -> ItemSet:
    """Negate the complement outcomes and cover-decode them against M.

    A complement row is positive iff its M row misses every defective, so
    the negation is exactly the u=1 outcome of M, making cover_decode exact.
    The direct-M outcomes ride along for audit only.
    """
    comp = y.segment("complement")
    sgt = tuple(1 - b for b in comp)
    return cover_decode(sgt, plan.M)


# ---------------------------------------------------------------------------
# bundle and outcome serialization

def _write_report_matrix(path: Path, matrix: BitMatrix, kind: str, params: dict) -> None:
    write_matrix(path, matrix, kind=kind, params=params)


def save_bundle(bundle, dirpath) -> None:
    """Serialize a design bundle to a directory (bundle.json + GTMAT files)."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    if isinstance(bundle, GeneralBundle):
        meta = {
            "format": BUNDLE_FORMAT,
            "design": "general",
            "n": bundle.n,
            "d": bundle.d,
            "u": bundle.u,
            "seed": bundle.seed,
            "matrices": {"A": "A.gtmat", "B": "B.gtmat", "M": "M.gtmat"},
        }
        _write_report_matrix(dirpath / "A.gtmat", bundle.A, "single-selector",
                             {"n": bundle.n, "d": bundle.d, "m": bundle.u})
        _write_report_matrix(dirpath / "B.gtmat", bundle.B, "disjunct",
                             {"n": bundle.n, "k": bundle.u})
        _write_report_matrix(dirpath / "M.gtmat", bundle.M, "disjunct",
                             {"n": bundle.n, "k": bundle.d - bundle.u + 1})
    elif isinstance(bundle, U2Bundle):
        design = "u2-2stage" if bundle.two_stage else "u2-na"
        ident_kind = "list-disjunct" if bundle.two_stage else "disjunct"
        ident_params = (
            {"n": bundle.n, "k": bundle.d, "ell": bundle.d}
            if bundle.two_stage
            else {"n": bundle.n, "k": bundle.d}
        )
        meta = {
            "format": BUNDLE_FORMAT,
            "design": design,
            "n": bundle.n,
            "d": bundle.d,
            "u": 2,
            "seed": bundle.seed,
            "matrices": {"A": "A.gtmat", "ident": "ident.gtmat"},
        }
        _write_report_matrix(dirpath / "A.gtmat", bundle.A, "selector",
                             {"n": bundle.n, "k": 2 * bundle.d, "m": bundle.d + 2})
        _write_report_matrix(dirpath / "ident.gtmat", bundle.ident, ident_kind, ident_params)
    elif isinstance(bundle, UEqDPlan):
        meta = {
            "format": BUNDLE_FORMAT,
            "design": "u-eq-d",
            "n": bundle.n,
            "d": bundle.d,
            "u": bundle.d,
            "seed": bundle.seed,
            "matrices": {"M": "M.gtmat"},
        }
        _write_report_matrix(dirpath / "M.gtmat", bundle.M, "disjunct",
                             {"n": bundle.n, "k": bundle.d})
    else:
        raise ParameterError(f"cannot serialize bundle of type {type(bundle).__name__}")
    (dirpath / BUNDLE_FILE).write_text(json.dumps(meta, indent=2) + "\n")


def load_bundle(dirpath):
    """Load a bundle directory written by save_bundle."""
    dirpath = Path(dirpath)
    meta = json.loads((dirpath / BUNDLE_FILE).read_text())
    if meta.get("format") != BUNDLE_FORMAT:
        raise ParameterError(f"unsupported bundle format {meta.get('format')!r}")
    design = meta["design"]
    n, d, seed = meta["n"], meta["d"], meta["seed"]
    mats = {
        name: read_matrix(dirpath / fname)[0]
        for name, fname in meta["matrices"].items()
    }
    if design == "general":
        return GeneralBundle(n, d, meta["u"], seed, mats["A"], mats["B"], mats["M"])
    if design in ("u2-na", "u2-2stage"):
        return U2Bundle(n, d, seed, design == "u2-2stage", mats["A"], mats["ident"])
    if design == "u-eq-d":
        return UEqDPlan(n, d, seed, mats["M"])
    raise ParameterError(f"unknown design {design!r} in bundle")


def read_outcome_bits(path) -> tuple[int, ...]:
    """Parse an outcomes file: 0/1 characters, whitespace ignored."""
    text = Path(path).read_text()
    bits = []
    for ch in text:
        if ch == "0":
            bits.append(0)
        elif ch == "1":
            bits.append(1)
        elif not ch.isspace():
            raise ParameterError(f"invalid character {ch!r} in outcomes file")
    return tuple(bits)


def write_outcome_bits(path, bits, per_line: int = 80) -> None:
    """Write outcome bits as 0/1 text, wrapped for readability."""
    text = "".join(str(int(b)) for b in bits)
    chunks = [text[i : i + per_line] for i in range(0, len(text), per_line)] or [""]
    Path(path).write_text("\n".join(chunks) + "\n")
