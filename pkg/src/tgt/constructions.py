"""Seeded randomized constructions of the four matrix families.

Bernoulli sampling discipline: entry (i, j) of a matrix is 1 iff
``stream_value(seed, (i-1)*cols + j) < floor(num * 2**64 / den)``, with the
threshold computed in exact integer arithmetic.  Identical parameters and
seed therefore reproduce the matrix bit for bit on any implementation.

Row counts follow the stated ceiling formulas exactly when verification
is off.  With verification on, each attempt regenerates with seed+attempt;
every ATTEMPTS_PER_SIZE failed attempts the row count doubles, because at
desk scale the closed-form row budgets routinely undershoot what an
exhaustive verifier will accept (probabilistic-existence constants are
asymptotic).  The formula value is always recorded in
ConstructionReport.formula_rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .bitmat import BitMatrix, complement
from .errors import ConstructionError, InfeasibleError, ParameterError
from .rng import MASK64, stream_block
from . import verifiers

ATTEMPT_CAP = 64
ATTEMPTS_PER_SIZE = 2
_MAX_DOUBLINGS = 16
_E = math.e


@dataclass(frozen=True)
class BernoulliSpec:
    """Exact-rational Bernoulli matrix description: Pr[entry = 1] = num/den."""

    rows: int
    cols: int
    prob_num: int
    prob_den: int
    seed: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ParameterError(f"need rows, cols >= 1, got {self.rows}x{self.cols}")
        if not 0 < self.prob_num < self.prob_den:
            raise ParameterError(
                f"probability must satisfy 0 < num < den, got {self.prob_num}/{self.prob_den}"
            )

    @property
    def threshold(self) -> int:
        return (self.prob_num << 64) // self.prob_den


@dataclass(frozen=True)
class ConstructionReport:
    """Outcome of one construction call."""

    matrix: BitMatrix
    attempts: int
    verified: str  # "yes" | "no" | "skipped"
    formula_rows: int


def bernoulli_matrix(spec: BernoulliSpec) -> BitMatrix:
    """Sample the matrix determined by spec (row-major draw order)."""
    total = spec.rows * spec.cols
    draws = stream_block(spec.seed & MASK64, 1, total)
    ones = (draws < np.uint64(spec.threshold)).reshape(spec.rows, spec.cols)
    packed = np.packbits(ones, axis=1, bitorder="little")
    row_bits = [int.from_bytes(packed[r].tobytes(), "little") for r in range(spec.rows)]
    return BitMatrix(spec.rows, spec.cols, row_bits)


# ---------------------------------------------------------------------------
# row-count formulas

def single_selector_branch(d: int, target: int) -> tuple[int, bool]:
    """(m_star, complemented) for the Bernoulli single-selector construction.

    Builds directly with m_star = m when m**m <= (d-m)**(d-m), else builds a
    (d-m, d, n) matrix and inverts it (0**0 reads as 1).
    """
    other = d - target
    direct_cost = target * math.log(max(target, 1))
    flipped_cost = other * math.log(max(other, 1))
    if direct_cost <= flipped_cost:
        return target, False
    return other, True


def single_selector_rows(n: int, d: int, target: int) -> int:
    """Row-count formula for an (m, d, n)-single selector."""
    if target == d:
        return math.ceil(_E * d * (1.0 + math.log(n / d))) + 1
    m_star, _ = single_selector_branch(d, target)
    _check_power_guard(m_star)
    return math.ceil(m_star**m_star * d / _E * (1.0 + math.log(n / d))) + 1


def disjunct_rows(n: int, k: int, c_mult: float) -> int:
    """Row-count formula for a k-disjunct matrix."""
    return math.ceil(c_mult * (k + 1) ** 2 * math.log(n))


def list_disjunct_rows(n: int, k: int, c_mult: float) -> int:
    """Row-count formula for a (k, k)-list-disjunct matrix."""
    return math.ceil(c_mult * k * math.log(n / k))


def selector_rows(n: int, k: int, target: int) -> int:
    """Row-count bound for a (k, m, n)-selector."""
    denom = k - target + 1
    return math.ceil(
        _E * k * k / denom * math.log(n / k) + _E * k * (2 * k - 1) / denom
    )


def _check_power_guard(m_star: int) -> None:
    # desk-scale guard: refuse row formulas whose m**m term leaves 64 bits
    if m_star**m_star > (1 << 63) - 1:
        raise ParameterError(
            f"m*^m* = {m_star}^{m_star} overflows 64-bit arithmetic; "
            "construction refused (desk-scale guard)"
        )


# ---------------------------------------------------------------------------
# verify-retry engine

def _construct_with_retry(
    *,
    formula_rows: int,
    cols: int,
    prob: tuple[int, int],
    seed: int,
    verify: bool,
    verifier,
    projected: int,
    budget: int,
    postprocess=None,
) -> ConstructionReport:
    def sample(rows: int, attempt: int) -> BitMatrix:
        spec = BernoulliSpec(rows, cols, prob[0], prob[1], (seed + attempt) & MASK64)
        matrix = bernoulli_matrix(spec)
        return postprocess(matrix) if postprocess else matrix

    if not verify:
        return ConstructionReport(sample(formula_rows, 0), 1, "skipped", formula_rows)
    if projected > budget:
        return ConstructionReport(sample(formula_rows, 0), 1, "skipped", formula_rows)
    matrix = None
    for attempt in range(ATTEMPT_CAP):
        doublings = min(attempt // ATTEMPTS_PER_SIZE, _MAX_DOUBLINGS)
        rows = formula_rows << doublings
        matrix = sample(rows, attempt)
        if verifier(matrix) is None:
            return ConstructionReport(matrix, attempt + 1, "yes", formula_rows)
    return ConstructionReport(matrix, ATTEMPT_CAP, "no", formula_rows)


# ---------------------------------------------------------------------------
# builders

def build_single_selector(
    n: int,
    d: int,
    target: int,
    seed: int,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
) -> ConstructionReport:
    """Build an (m, d, n)-single selector: every d-subset D has some row
    meeting D in exactly m items (m is the `target` argument)."""
    if not 1 <= target <= d <= n:
        raise ParameterError(f"need 1 <= m <= d <= n, got m={target}, d={d}, n={n}")
    formula = single_selector_rows(n, d, target)
    if target == d:
        prob = (d, d + 1)
        post = None
    else:
        m_star, complemented = single_selector_branch(d, target)
        _check_power_guard(m_star)
        prob = (1, d)
        post = complement if complemented else None
    return _construct_with_retry(
        formula_rows=formula,
        cols=n,
        prob=prob,
        seed=seed,
        verify=verify,
        verifier=lambda m: verifiers.verify_single_selector(m, d, target, budget),
        projected=comb(n, d),
        budget=budget,
        postprocess=post,
    )


def build_list_disjunct(
    n: int,
    k: int,
    ell: int,
    seed: int,
    c_mult: float | None = None,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
) -> ConstructionReport:
    """Build a k-disjunct (ell=1) or (k, k)-list-disjunct (ell=k) matrix.

    Row budgets are only defined for those two shapes; other ell values are
    rejected.
    """
    if k < 1 or ell < 1:
        raise ParameterError(f"need k >= 1 and ell >= 1, got k={k}, ell={ell}")
    if k + ell > n:
        raise ParameterError(f"need k + ell <= n, got {k} + {ell} > {n}")
    if ell == 1:
        c = 3.0 if c_mult is None else c_mult
        formula = disjunct_rows(n, k, c)
        prob = (1, k + 1)
    elif ell == k:
        c = 8.0 if c_mult is None else c_mult
        formula = list_disjunct_rows(n, k, c)
        prob = (1, 2 * k)
    else:
        raise ParameterError(
            f"row budget is defined only for ell=1 or ell=k, got ell={ell}, k={k}"
        )
    return _construct_with_retry(
        formula_rows=formula,
        cols=n,
        prob=prob,
        seed=seed,
        verify=verify,
        verifier=lambda m: verifiers.verify_list_disjunct(m, k, ell, budget),
        projected=comb(n, ell) * comb(n - ell, k),
        budget=budget,
    )


def build_selector(
    n: int,
    k: int,
    target: int,
    seed: int,
    verify: bool = False,
    budget: int = verifiers.DEFAULT_BUDGET,
) -> ConstructionReport:
    """Build a (k, m, n)-selector: every k-column submatrix holds >= m
    distinct identity rows (m is the `target` argument)."""
    if not 1 <= target <= k <= n:
        raise ParameterError(f"need 1 <= m <= k <= n, got m={target}, k={k}, n={n}")
    formula = selector_rows(n, k, target)
    # k = 1 would make the nominal p = 1/k degenerate; halve it
    prob = (1, 2) if k == 1 else (1, k)
    return _construct_with_retry(
        formula_rows=formula,
        cols=n,
        prob=prob,
        seed=seed,
        verify=verify,
        verifier=lambda m: verifiers.verify_selector(m, k, target, budget),
        projected=comb(n, k),
        budget=budget,
    )


def require_verified(report: ConstructionReport, what: str) -> ConstructionReport:
    """Raise unless the report's matrix passed its verifier."""
    if report.verified == "no":
        raise ConstructionError(
            f"{what}: no verified matrix within {ATTEMPT_CAP} attempts"
        )
    return report
