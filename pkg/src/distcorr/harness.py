"""Monte Carlo estimation of error rates, phase-transition sweeps and reports.

Every trial draws its randomness from seeds ``derive_seed(master, tag, trial,
rep)``, so results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .codebook import Codebook
from .errors import ResourceRefusal, SpecError
from .limit import ddim_repetition_limit, run_1d_limit, run_ddim_limit
from .model import GAUSSIAN, SOURCE_KINDS, CorrelationVector, sample_block
from .params import (
    INNER_ALPHA,
    INNER_BETA,
    BoostPlan,
    DerivedParams,
    TestSpec,
    composite_errors,
    ddim_inner_spec,
    default_n,
    k_sandwich,
    lb_ddim,
    lb_estimation,
    lb_interactive,
    lb_oneway_delta,
    lb_oneway_eps,
    median_plan,
    oneway_eps_in_regime,
    one_sided_params,
)
from .protocol import (
    ddim_repetition,
    message_bits,
    repetition_seeds,
    run_ddim,
    run_one_sided,
    run_two_sided,
    vote,
)
from .rng import TAG_ROW, TAG_SOURCE, CounterStream, derive_seed

ENGINES = ("auto", "scan", "limit")
DEFAULT_SCAN_CAP = 2**20
CSV_HEADER = ("d", "tau_sq", "k_bits", "total_bits", "trials",
              "p_false_alarm", "p_missed", "avg_error")


def _reject_unknown(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise SpecError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise SpecError(f"unknown keys in {where}: {', '.join(extra)}")


def _check_engine(engine: str, source_kind: str, scan_cap: int):
    if engine not in ENGINES:
        raise SpecError(f"engine must be one of {ENGINES}, got {engine!r}")
    if source_kind not in SOURCE_KINDS:
        raise SpecError(f"source_kind must be one of {SOURCE_KINDS}, got {source_kind!r}")
    if int(scan_cap) != scan_cap or scan_cap < 1:
        raise SpecError("scan_cap must be a positive integer")


@dataclass(frozen=True)
class Overrides:
    """Optional knobs on top of the default constants.

    ``inner_alpha``/``inner_beta`` are the targets of the one-dimensional test
    run after projection (d > 1).  ``composite_alpha``/``composite_beta`` are
    the pre-vote error levels fed to the median plan; they default to
    ``inner_alpha + 27/28`` and ``inner_beta``.  ``sided`` picks the one- or
    two-sided test when d = 1.
    """

    inner_alpha: float | None = None
    inner_beta: float | None = None
    composite_alpha: float | None = None
    composite_beta: float | None = None
    m: int | None = None
    scan_cap: int = DEFAULT_SCAN_CAP
    strict_bits: bool = False
    engine: str = "auto"
    sided: str = "two"

    @classmethod
    def from_dict(cls, data: dict | None) -> Overrides:
        data = data or {}
        _reject_unknown(cls, data, "overrides")
        return cls(**data)


@dataclass(frozen=True)
class ExperimentSpec:
    hypothesis: CorrelationVector | None
    test: TestSpec
    trials: int
    master_seed: int
    n: int | None = None
    source_kind: str = GAUSSIAN
    overrides: Overrides = field(default_factory=Overrides)

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise SpecError("trials must be a positive integer")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise SpecError("n must be a positive integer")
        if not 0 <= self.master_seed < 2**64:
            raise SpecError("master_seed must be a 64-bit unsigned integer")
        if self.hypothesis is not None and self.hypothesis.d != self.test.d:
            raise SpecError("hypothesis dimension does not match test.d")
        ov = self.overrides
        _check_engine(ov.engine, self.source_kind, ov.scan_cap)
        if ov.sided not in ("one", "two"):
            raise SpecError("sided must be 'one' or 'two'")
        if self.test.d == 1 and any(v is not None for v in (
                ov.inner_alpha, ov.inner_beta, ov.composite_alpha, ov.composite_beta, ov.m)):
            raise SpecError("inner/composite/m overrides apply to d > 1 only")
        if self.test.d > 1 and ov.sided != "two":
            raise SpecError("d > 1 always runs the two-sided inner test")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentSpec:
        _reject_unknown(cls, data, "experiment config")
        data = dict(data)
        try:
            test = data.pop("test")
        except KeyError:
            raise SpecError("experiment config needs a 'test' object") from None
        _reject_unknown(TestSpec, test, "test")
        hyp = data.pop("hypothesis", None)
        try:
            return cls(
                hypothesis=None if hyp is None else CorrelationVector(hyp),
                test=TestSpec(**test),
                overrides=Overrides.from_dict(data.pop("overrides", None)),
                **data,
            )
        except TypeError as exc:
            raise SpecError(str(exc)) from None


@dataclass(frozen=True)
class Setup:
    """Everything a worker needs to run trials of one experiment."""

    rho: CorrelationVector
    test: TestSpec
    inner: DerivedParams
    plan: BoostPlan | None
    n: int
    engine: str
    source_kind: str
    master_seed: int
    two_sided: bool
    strict: bool

    @property
    def d(self) -> int:
        return self.test.d

    @property
    def bits_per_run(self) -> int:
        m = 1 if self.plan is None else self.plan.m
        return m * message_bits(self.inner.k, self.strict)


def ddim_components(tau: float, d: int, delta: float, epsilon: float,
                    ov: Overrides = Overrides()) -> tuple[DerivedParams, BoostPlan]:
    """Inner one-dimensional parameters and the median plan for d > 1."""
    a_in = INNER_ALPHA if ov.inner_alpha is None else ov.inner_alpha
    b_in = INNER_BETA if ov.inner_beta is None else ov.inner_beta
    inner_spec = ddim_inner_spec(tau, d, a_in, b_in)
    # the two-sided reduction doubles the one-sided missed-detection rate
    inner = one_sided_params(inner_spec.tau, inner_spec.delta, inner_spec.epsilon / 2.0)
    a_c, b_c = composite_errors(a_in, b_in)
    if ov.composite_alpha is not None:
        a_c = ov.composite_alpha
    if ov.composite_beta is not None:
        b_c = ov.composite_beta
    plan = median_plan(a_c, b_c, delta, epsilon)
    if ov.m is not None:
        plan = plan.with_repetitions(int(ov.m))
    return inner, plan


def _resolve_engine(engine: str, k: int, scan_cap: int) -> str:
    fits = k < 63 and 2**k <= scan_cap
    if engine == "auto":
        return "scan" if fits else "limit"
    if engine == "scan" and not fits:
        raise ResourceRefusal(f"2^{k} codebook columns exceed the scan cap {scan_cap}")
    return engine


def build_setup(spec: ExperimentSpec) -> Setup:
    t, ov = spec.test, spec.overrides
    rho = spec.hypothesis if spec.hypothesis is not None else CorrelationVector.null(t.d)
    if t.d == 1:
        eps = t.epsilon / 2.0 if ov.sided == "two" else t.epsilon
        inner, plan = one_sided_params(t.tau, t.delta, eps), None
    else:
        inner, plan = ddim_components(t.tau, t.d, t.delta, t.epsilon, ov)
    n = spec.n if spec.n is not None else default_n(inner)
    return Setup(rho=rho, test=t, inner=inner, plan=plan, n=n,
                 engine=_resolve_engine(ov.engine, inner.k, ov.scan_cap),
                 source_kind=spec.source_kind, master_seed=spec.master_seed,
                 two_sided=ov.sided == "two", strict=ov.strict_bits)


def run_trial(setup: Setup, trial: int) -> tuple[int, int]:
    """One protocol execution; returns (verdict, bits)."""
    master, rho = setup.master_seed, setup.rho
    if setup.d == 1:
        if setup.engine == "limit":
            verdict, ledger = run_1d_limit(float(rho.rho[0]), setup.inner, setup.n,
                                           setup.source_kind, master, trial=trial,
                                           two_sided=setup.two_sided, strict=setup.strict)
        else:
            stream = CounterStream(derive_seed(master, TAG_SOURCE, trial, 0))
            block = sample_block(rho, setup.n, setup.source_kind, stream)
            book = Codebook(repetition_seeds(master, 0, trial)[0], setup.n, setup.inner.k)
            runner = run_two_sided if setup.two_sided else run_one_sided
            verdict, ledger = runner(block.xs[:, 0], block.ys, book, setup.inner,
                                     strict=setup.strict)
    elif setup.engine == "limit":
        verdict, ledger = run_ddim_limit(rho, setup.plan, setup.inner, setup.n,
                                         setup.source_kind, master, trial=trial,
                                         strict=setup.strict)
    else:
        blocks = (sample_block(rho, setup.n, setup.source_kind,
                               CounterStream(derive_seed(master, TAG_SOURCE, trial, rep)))
                  for rep in range(setup.plan.m))
        b1, b2 = itertools.tee(blocks)
        verdict, ledger = run_ddim((b.xs for b in b1), (b.ys for b in b2),
                                   setup.test, setup.plan, setup.inner,
                                   master, trial=trial, strict=setup.strict)
    return int(verdict), ledger.total_bits


def _run_chunk(setup: Setup, trials: range) -> list[tuple[int, int]]:
    return [run_trial(setup, i) for i in trials]


def run_trials(setup: Setup, trials: range, workers: int = 1) -> list[tuple[int, int]]:
    """Results in trial order regardless of ``workers``."""
    if workers <= 1 or len(trials) < 2:
        return _run_chunk(setup, trials)
    size = math.ceil(len(trials) / (4 * workers))
    chunks = [trials[i:i + size] for i in range(0, len(trials), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, itertools.repeat(setup), chunks)
        return [res for part in parts for res in part]


def ci_radius(p_hat: float, trials: int) -> float:
    """Three binomial standard errors."""
    return 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / trials)


@dataclass(frozen=True)
class TrialReport:
    hypothesis: str
    trials: int
    declared_null: int
    declared_correlated: int
    false_alarm_rate: float | None
    missed_detection_rate: float | None
    binomial_ci_radius: float
    avg_bits: float
    k_bits: int
    m: int
    n: int
    engine: str
    wall_time: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("wall_time")
        return out

    @property
    def error_rate(self) -> float:
        return self.missed_detection_rate if self.hypothesis == "null" else self.false_alarm_rate


def estimate_error_rates(spec: ExperimentSpec, workers: int = 1) -> TrialReport:
    start = time.perf_counter()
    setup = build_setup(spec)
    results = run_trials(setup, range(spec.trials), workers)
    n_null = sum(v for v, _ in results)
    n_corr = len(results) - n_null
    is_null = setup.rho.is_null
    rate = (n_corr if is_null else n_null) / spec.trials
    return TrialReport(
        hypothesis="null" if is_null else "correlated",
        trials=spec.trials,
        declared_null=n_null,
        declared_correlated=n_corr,
        false_alarm_rate=None if is_null else rate,
        missed_detection_rate=rate if is_null else None,
        binomial_ci_radius=ci_radius(rate, spec.trials),
        avg_bits=sum(b for _, b in results) / spec.trials,
        k_bits=setup.inner.k,
        m=1 if setup.plan is None else setup.plan.m,
        n=setup.n,
        engine=setup.engine,
        wall_time=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# phase-transition sweep

@dataclass(frozen=True)
class SweepSpec:
    """Configuration of a communication-versus-error sweep.

    Each entry of ``configs`` is ``{"d": int, "tau_sq": float}``; budgets are
    the repetition counts in ``repetitions`` at a fixed inner message length.
    Correlated trials put all of ``tau`` on the first coordinate
    (``direction="axis"``) or spread it evenly (``direction="spread"``).
    """

    configs: list
    repetitions: list
    trials: int
    master_seed: int
    n: int | None = None
    source_kind: str = GAUSSIAN
    inner_alpha: float = 0.2
    inner_beta: float = 0.2
    composite_alpha: float = 0.5
    composite_beta: float = 0.05
    engine: str = "auto"
    scan_cap: int = DEFAULT_SCAN_CAP
    strict_bits: bool = False
    direction: str = "axis"

    def __post_init__(self):
        if self.direction not in ("axis", "spread"):
            raise SpecError("direction must be 'axis' or 'spread'")
        if not self.configs:
            raise SpecError("sweep needs at least one (d, tau_sq) config")
        for cfg in self.configs:
            if not isinstance(cfg, dict) or set(cfg) != {"d", "tau_sq"}:
                raise SpecError("each config must have exactly the keys 'd' and 'tau_sq'")
            TestSpec(math.sqrt(cfg["tau_sq"]), 0.5, 0.5, cfg["d"])
        ratios = [c["d"] / c["tau_sq"] for c in self.configs]
        if max(ratios) > min(ratios) * (1.05 / 0.95):
            raise SpecError("d / tau^2 must agree within 5% across configs")
        if not self.repetitions or any(int(m) != m or m < 1 for m in self.repetitions):
            raise SpecError("repetition counts must be positive integers (0 is degenerate)")
        if int(self.trials) != self.trials or self.trials < 2:
            raise SpecError("sweep needs at least 2 trials per row")
        if not 0 <= self.master_seed < 2**64:
            raise SpecError("master_seed must be a 64-bit unsigned integer")
        _check_engine(self.engine, self.source_kind, self.scan_cap)

    @classmethod
    def from_dict(cls, data: dict) -> SweepSpec:
        _reject_unknown(cls, data, "sweep config")
        try:
            return cls(**data)
        except TypeError as exc:
            raise SpecError(str(exc)) from None


@dataclass(frozen=True)
class SweepRow:
    d: int
    tau_sq: float
    k_bits: int
    total_bits: int
    trials: int
    p_false_alarm: float
    p_missed: float
    correlated_trials: int
    null_trials: int

    @property
    def avg_error(self) -> float:
        return 0.5 * (self.p_false_alarm + self.p_missed)

    @property
    def sigma(self) -> float:
        """Standard error of avg_error, with Laplace-smoothed rates."""
        def var(p, n):
            ps = (p * n + 1.0) / (n + 2.0)
            return ps * (1.0 - ps) / n
        return 0.5 * math.sqrt(var(self.p_false_alarm, self.correlated_trials)
                               + var(self.p_missed, self.null_trials))

    def csv_fields(self) -> list[str]:
        return [str(self.d), repr(float(self.tau_sq)), str(self.k_bits), str(self.total_bits),
                str(self.trials), f"{self.p_false_alarm:.6f}", f"{self.p_missed:.6f}",
                f"{self.avg_error:.6f}"]


def _alternative(tau: float, d: int, direction: str) -> CorrelationVector:
    if direction == "spread":
        return CorrelationVector.equal(tau, d)
    rho = np.zeros(d)
    rho[0] = tau
    return CorrelationVector(rho)


def repetition_votes(setup: Setup, trial: int, m: int) -> list[tuple[int, int]]:
    """Inner verdicts and bit costs of the first ``m`` repetitions of a trial."""
    out = []
    for rep in range(m):
        if setup.engine == "limit":
            v = ddim_repetition_limit(setup.rho, setup.inner, setup.n, setup.source_kind,
                                      setup.master_seed, rep, trial=trial)
            bits = message_bits(setup.inner.k, setup.strict)
        else:
            stream = CounterStream(derive_seed(setup.master_seed, TAG_SOURCE, trial, rep))
            block = sample_block(setup.rho, setup.n, setup.source_kind, stream)
            v, ledger = ddim_repetition(block.xs, block.ys, setup.d, setup.inner,
                                        setup.master_seed, rep, trial=trial,
                                        strict=setup.strict)
            bits = ledger.total_bits
        out.append((int(v), bits))
    return out


def _votes_chunk(setup: Setup, trials: range, m: int) -> list:
    return [repetition_votes(setup, i, m) for i in trials]


def _all_votes(setup: Setup, trials: range, m: int, workers: int) -> list:
    if workers <= 1 or len(trials) < 2:
        return _votes_chunk(setup, trials, m)
    size = math.ceil(len(trials) / (4 * workers))
    chunks = [trials[i:i + size] for i in range(0, len(trials), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_votes_chunk, itertools.repeat(setup), chunks, itertools.repeat(m))
        return [res for part in parts for res in part]


def sweep_phase_transition(sweep: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Balanced correlated/null trials for every (config, repetition count).

    Trial seeds depend on the config and trial index but not on the
    repetition count, so the row with m repetitions reuses the first m inner
    tests of the largest row (common random numbers).
    """
    rows = []
    n_corr = sweep.trials // 2
    n_null = sweep.trials - n_corr
    ov = Overrides(inner_alpha=sweep.inner_alpha, inner_beta=sweep.inner_beta,
                   composite_alpha=sweep.composite_alpha,
                   composite_beta=sweep.composite_beta)
    budgets = sorted(set(int(m) for m in sweep.repetitions))
    for ci, cfg in enumerate(sweep.configs):
        d, tau_sq = int(cfg["d"]), float(cfg["tau_sq"])
        tau = math.sqrt(tau_sq)
        if d == 1:
            raise SpecError("the sweep boosts the projected test and needs d > 1")
        inner, plan = ddim_components(tau, d, 0.5, 0.5, ov)
        base = dict(test=TestSpec(tau, 0.5, 0.5, d), inner=inner, plan=plan,
                    n=sweep.n if sweep.n is not None else default_n(inner),
                    engine=_resolve_engine(sweep.engine, inner.k, sweep.scan_cap),
                    source_kind=sweep.source_kind,
                    master_seed=derive_seed(sweep.master_seed, TAG_ROW, ci, 0),
                    two_sided=True, strict=sweep.strict_bits)
        corr = Setup(rho=_alternative(tau, d, sweep.direction), **base)
        null = Setup(rho=CorrelationVector.null(d), **base)
        votes_c = _all_votes(corr, range(0, n_corr), budgets[-1], workers)
        votes_0 = _all_votes(null, range(n_corr, n_corr + n_null), budgets[-1], workers)
        for m in budgets:
            row_plan = plan.with_repetitions(m)
            total = {sum(b for _, b in rec[:m]) for rec in votes_c + votes_0}
            expected = m * message_bits(inner.k, sweep.strict_bits)
            assert total == {expected}, "ledger disagrees with the executed plan"
            fa = sum(int(vote([v for v, _ in rec], row_plan)) for rec in votes_c)
            md = sum(1 - int(vote([v for v, _ in rec], row_plan)) for rec in votes_0)
            rows.append(SweepRow(
                d=d, tau_sq=tau_sq, k_bits=inner.k, total_bits=expected,
                trials=sweep.trials, p_false_alarm=fa / n_corr, p_missed=md / n_null,
                correlated_trials=n_corr, null_trials=n_null))
    rows.sort(key=lambda r: (r.d, r.total_bits))
    return rows


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


# --------------------------------------------------------------------------
# parameter and bound reports

def print_params(tau: float, delta: float, epsilon: float, d: int = 1) -> dict:
    """Protocol parameters, message lengths and the default sample size."""
    if d == 1:
        p = one_sided_params(tau, delta, epsilon)
        lo, mass, hi = k_sandwich(p, delta)
        return {
            "tau": tau, "delta": delta, "epsilon": epsilon, "d": 1,
            "r": p.r, "r_sq": p.r_sq, "theta": p.theta, "k": p.k,
            "two_sided_k": one_sided_params(tau, delta, epsilon / 2.0).k,
            "m": 1, "t": None, "n_default": default_n(p),
            "k_sandwich": [lo, mass, hi], "k_sandwich_ok": lo <= mass <= hi,
            "upper_bits": p.k,
        }
    TestSpec(tau, delta, epsilon, d)
    inner, plan = ddim_components(tau, d, delta, epsilon)
    return {
        "tau": tau, "delta": delta, "epsilon": epsilon, "d": d,
        "inner_tau": tau / math.sqrt(2.0 * d),
        "inner_alpha": INNER_ALPHA, "inner_beta": INNER_BETA,
        "r": inner.r, "r_sq": inner.r_sq, "theta": inner.theta, "k": inner.k,
        "m": plan.m, "t": plan.t, "n_default": default_n(inner),
        "upper_bits": plan.m * inner.k,
    }


def print_bounds(tau: float, delta: float, epsilon: float, d: int = 1) -> dict:
    """All lower bounds next to the implemented upper bound."""
    spec = TestSpec(tau, delta, epsilon, d)
    upper = print_params(tau, delta, epsilon, d)["upper_bits"]
    flags = []
    if not oneway_eps_in_regime(tau, delta, epsilon):
        flags.append("lb_oneway_eps:out_of_regime")
    if not oneway_eps_in_regime(tau / math.sqrt(d), delta, epsilon):
        flags.append("lb_ddim_eps:out_of_regime")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        testing = {
            "lb_oneway_eps": lb_oneway_eps(tau, delta, epsilon),
            "lb_oneway_delta": lb_oneway_delta(tau, delta, epsilon),
            "lb_ddim_eps": lb_ddim(d, tau, delta, epsilon, "eps"),
            "lb_ddim_delta": lb_ddim(d, tau, delta, epsilon, "delta"),
            "lb_interactive": lb_interactive(d, tau, delta, epsilon),
        }
    for name, val in testing.items():
        if val == 0.0:
            flags.append(f"{name}:clamped")
    return {
        "tau": spec.tau, "delta": spec.delta, "epsilon": spec.epsilon, "d": spec.d,
        **testing,
        "lb_estimation": lb_estimation(d, tau, delta, epsilon),
        "upper_bits": upper,
        "consistent": all(upper >= v for v in testing.values()),
        "flags": flags,
    }


def vote_margin(rows: list[SweepRow]) -> np.ndarray:
    """avg_error values as an array, in row order (handy for plotting)."""
    return np.array([r.avg_error for r in rows])
