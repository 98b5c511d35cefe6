"""Party logic for the one-way correlation tests, run against an explicit codebook.

P1 sees ``x`` and the codebook and emits a :class:`Message`; P2 sees ``y``,
the message and the codebook and emits a :class:`Verdict`.  Neither function
accepts the other party's data.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import InsufficientSamples, SpecError
from .params import BoostPlan, DerivedParams, TestSpec
from .rng import TAG_CODEBOOK, TAG_PROJECTION, CounterStream, derive_seed


class Verdict(enum.IntEnum):
    """Decision value g: 0 declares correlation (H0 side), 1 declares the null."""

    DECLARE_CORRELATED = 0
    DECLARE_NULL = 1


@dataclass(frozen=True)
class Message:
    """Column index sent by P1, or ``index=None`` for "no column found".

    The default accounting charges ``k`` bits even for the sentinel; with
    ``strict`` the cost is ``ceil(log2(2^k + 1)) = k + 1`` so the sentinel has
    its own codeword.
    """

    index: int | None
    k: int
    strict: bool = False

    @property
    def is_sentinel(self) -> bool:
        return self.index is None

    @property
    def bit_cost(self) -> int:
        return message_bits(self.k, self.strict)


def message_bits(k: int, strict: bool = False) -> int:
    return math.ceil(math.log2(2**k + 1)) if strict else k


@dataclass(frozen=True)
class BitLedger:
    total_bits: int = 0
    messages: int = 0

    def __add__(self, other: BitLedger) -> BitLedger:
        return BitLedger(self.total_bits + other.total_bits, self.messages + other.messages)

    @classmethod
    def of(cls, msg: Message) -> BitLedger:
        return cls(msg.bit_cost, 1)


@dataclass(frozen=True)
class ProjectionState:
    r_vec: np.ndarray
    seed: int | None = None

    @classmethod
    def draw(cls, seed: int, d: int) -> ProjectionState:
        signs = CounterStream(seed).signs(d)
        return cls(signs / math.sqrt(d), seed)

    @property
    def d(self) -> int:
        return self.r_vec.size


def p1_encode_one_sided(x, book: Codebook, r: float, *, scan_cap: int | None = None,
                        strict: bool = False) -> Message:
    """Send the least column whose correlation with ``x`` reaches r sqrt(n)."""
    j = book.find_first_hit(x, r * math.sqrt(book.n), scan_cap=scan_cap)
    return Message(j, book.k, strict)


def p2_decide_one_sided(y, msg: Message, book: Codebook, theta: float, r: float) -> Verdict:
    if msg.is_sentinel:
        return Verdict.DECLARE_NULL
    if book.column_dot(msg.index, y) >= theta * r * math.sqrt(book.n):
        return Verdict.DECLARE_CORRELATED
    return Verdict.DECLARE_NULL


def run_one_sided(x, y, book: Codebook, params: DerivedParams, *, scan_cap=None,
                  strict: bool = False) -> tuple[Verdict, BitLedger]:
    msg = p1_encode_one_sided(x, book, params.r, scan_cap=scan_cap, strict=strict)
    return p2_decide_one_sided(y, msg, book, params.theta, params.r), BitLedger.of(msg)


def run_two_sided(x, y, book: Codebook, params: DerivedParams, *, scan_cap=None,
                  strict: bool = False) -> tuple[Verdict, BitLedger]:
    """One message, two decision maps: correlated if P2 accepts on y or on -y."""
    msg = p1_encode_one_sided(x, book, params.r, scan_cap=scan_cap, strict=strict)
    y = np.asarray(y, dtype=np.float64)
    plus = p2_decide_one_sided(y, msg, book, params.theta, params.r)
    minus = p2_decide_one_sided(-y, msg, book, params.theta, params.r)
    return Verdict(min(plus, minus)), BitLedger.of(msg)


def run_binary(x, y, book: Codebook, params: DerivedParams, *, scan_cap=None,
               strict: bool = False) -> tuple[Verdict, BitLedger]:
    """rho0 versus rho1 with binary_params thresholds.

    ``DECLARE_CORRELATED`` stands for rho0 and ``DECLARE_NULL`` for rho1.
    """
    return run_one_sided(x, y, book, params, scan_cap=scan_cap, strict=strict)


def project_ddim(xs, proj: ProjectionState) -> np.ndarray:
    """Collapse n x d observations to the scalars R^T x_t."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != proj.d:
        raise SpecError(f"observations of shape {xs.shape} do not match d={proj.d}")
    return xs @ proj.r_vec


def repetition_seeds(master_seed: int, rep: int, trial: int = 0) -> tuple[int, int]:
    """(codebook seed, projection seed) for repetition ``rep`` of a trial."""
    return (derive_seed(master_seed, TAG_CODEBOOK, trial, rep),
            derive_seed(master_seed, TAG_PROJECTION, trial, rep))


def ddim_repetition(xs, ys, d: int, inner: DerivedParams, master_seed: int, rep: int, *,
                    trial: int = 0, scan_cap=None,
                    strict: bool = False) -> tuple[Verdict, BitLedger]:
    """One project-then-test repetition with its own projection and codebook."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != d:
        raise SpecError(f"block {rep} has shape {xs.shape}, expected (n, {d})")
    book_seed, proj_seed = repetition_seeds(master_seed, rep, trial)
    proj = ProjectionState.draw(proj_seed, d)
    book = Codebook(book_seed, ys.size, inner.k)
    return run_two_sided(project_ddim(xs, proj), ys, book, inner,
                         scan_cap=scan_cap, strict=strict)


def vote(votes, plan: BoostPlan) -> Verdict:
    """Composite verdict from the first ``plan.m`` inner verdicts (1 = null)."""
    votes = list(votes)[: plan.m]
    if len(votes) < plan.m:
        raise InsufficientSamples(f"{len(votes)} inner verdicts for m = {plan.m}")
    if sum(int(v) for v in votes) > plan.m * plan.t:
        return Verdict.DECLARE_NULL
    return Verdict.DECLARE_CORRELATED


def run_ddim(xs_stream: Iterable, ys_stream: Iterable, spec: TestSpec, plan: BoostPlan,
             inner: DerivedParams, master_seed: int, *, trial: int = 0, scan_cap=None,
             strict: bool = False) -> tuple[Verdict, BitLedger]:
    """Project, test in one dimension, repeat ``plan.m`` times and vote.

    Repetition ``i`` uses a fresh projection, a fresh codebook and the ``i``-th
    sample block.  D_i = 1 when the inner two-sided test declares the null, and
    the composite declares the null iff sum D_i > m t.
    """
    xs_iter, ys_iter = iter(xs_stream), iter(ys_stream)
    votes = []
    ledger = BitLedger()
    for rep in range(plan.m):
        try:
            xs, ys = next(xs_iter), next(ys_iter)
        except StopIteration:
            raise InsufficientSamples(
                f"sample supply ran out after {rep} of {plan.m} repetitions") from None
        verdict, bits = ddim_repetition(xs, ys, spec.d, inner, master_seed, rep, trial=trial,
                                        scan_cap=scan_cap, strict=strict)
        votes.append(verdict)
        ledger = ledger + bits
    return vote(votes, plan), ledger
