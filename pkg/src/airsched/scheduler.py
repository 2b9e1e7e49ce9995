"""Link scheduling for a fixed relay placement.

The binary one-UGV-per-UAV-per-slot scheduling problem is relaxed to the
per-slot doubly-substochastic polytope with a quadratic binariness penalty,
then solved by difference-of-convex outer iterations: each iteration
replaces the two troublesome terms (the interference log and the negative
quadratic of the penalty) with their tight affine bounds at the previous
iterate and maximizes the resulting concave surrogate with Frank-Wolfe over
per-slot max-weight matchings. A continuation schedule grows the penalty
weight until the relaxed solution is numerically binary, and a projection
onto binary matchings produces the final schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import ChannelParams

LN2 = math.log(2.0)

# Row/column feasibility slack for relaxed schedules.
FEAS_TOL = 1e-9

# Continuation stops once sum a*(1-a) falls below this. The penalty weight
# eventually exceeds every entry's activation gradient pr/(n0*ln2), at which
# point the away steps of the inner solver remove spurious mass exactly.
RESIDUAL_TARGET = 1e-9

# Tie-breaking perturbations used when rounding: prefer higher received
# power, then lower (i, j) index. Exact whenever competing mass sums differ
# by more than ~1e-9.
_TIE_POWER_EPS = 1e-10
_TIE_INDEX_EPS = 1e-13


@dataclass(frozen=True)
class Schedule:
    """Scheduling tensor a[i, j, t]: mass of UGV i on UAV j in slot t.

    Entries live in [0, 1] while relaxed and in {0, 1} after rounding; per
    slot, row sums (over UAVs) and column sums (over UGVs) are at most 1.
    """

    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64, order="C")   # owned copy
        if a.ndim != 3:
            raise ValueError("schedule tensor must have shape (n, m, t)")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.a.shape

    @classmethod
    def zeros(cls, n: int, m: int, t: int) -> "Schedule":
        return cls(np.zeros((n, m, t)))

    def validate_relaxed(self, tol: float = FEAS_TOL) -> None:
        a = self.a
        if a.min() < -tol or a.max() > 1.0 + tol:
            raise ValueError("schedule entries must lie in [0, 1]")
        if a.sum(axis=1).max() > 1.0 + tol:
            raise ValueError("some UGV exceeds unit scheduling mass in a slot")
        if a.sum(axis=0).max() > 1.0 + tol:
            raise ValueError("some UAV exceeds unit scheduling mass in a slot")

    def validate_binary(self) -> None:
        a = self.a
        if not np.all((a == 0.0) | (a == 1.0)):
            raise ValueError("schedule entries must be exactly 0 or 1")
        if a.sum(axis=1).max() > 1 or a.sum(axis=0).max() > 1:
            raise ValueError("binary schedule violates the one-link-per-node limit")

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.a == 0.0) | (self.a == 1.0)))


@dataclass(frozen=True)
class InnerSolverConfig:
    """Frank-Wolfe settings for one convex surrogate maximization."""

    max_iters: int = 400
    gap_tol: float = 1e-5    # relative to max(1, |surrogate|)

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gap_tol <= 0:
            raise ValueError("gap_tol must be > 0")


@dataclass(frozen=True)
class DcConfig:
    """Difference-of-convex outer loop settings.

    eta=None initializes the penalty weight from the sum rate of a greedy
    max-power matching divided by the number of schedule entries. eta_max
    =None leaves continuation uncapped: the weight keeps doubling until the
    iterate is numerically binary or the iteration cap is hit (at realistic
    SNRs the equilibrium fractional mass per entry is roughly 1/(eta*ln 2),
    so a cap tied to the initial weight would stall the binarization).
    """

    eta: float | None = None
    eta_growth: float = 2.0
    eta_max: float | None = None
    epsilon: float = 1e-4
    max_dc_iters: int = 100
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)

    def __post_init__(self):
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.eta_growth <= 1:
            raise ValueError("eta_growth must be > 1")
        if self.eta_max is not None and self.eta_max <= 0:
            raise ValueError("eta_max must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.max_dc_iters < 1:
            raise ValueError("max_dc_iters must be >= 1")


def _tensor(x) -> np.ndarray:
    return np.ascontiguousarray(x.a if isinstance(x, Schedule) else x, dtype=np.float64)


def penalty(schedule, eta: float) -> float:
    """Binariness penalty: eta * sum over entries of a*(1-a)."""
    a = _tensor(schedule)
    return eta * float((a * (1.0 - a)).sum())


def penalty_residual(schedule) -> float:
    """Distance from binariness: sum over entries of a*(1-a)."""
    a = _tensor(schedule)
    return float((a * (1.0 - a)).sum())


def penalty_majorizer(a_prev: float) -> tuple[float, float]:
    """Affine majorizer of -a^2 expanded at a_prev: (constant, slope).

    Evaluates to a_prev^2 - 2*a_prev*a, which is >= -a^2 everywhere and
    equals it at a = a_prev.
    """
    return a_prev * a_prev, -2.0 * a_prev


@dataclass(frozen=True)
class InterferenceLogTangent:
    """First-order expansion of log2(interference + n0) for one link.

    Affine in the schedule: value_at_prev plus slope_per_watt times the
    interference change relative to the expansion point. As the tangent of
    a concave function it upper-bounds the log everywhere and is exact at
    the expansion point.
    """

    i: int
    j: int
    t: int
    value_at_prev: float
    prev_interference: float
    slope_per_watt: float     # 1 / ((I' + n0) * ln 2)

    def evaluate(self, schedule, received_powers: np.ndarray) -> float:
        from .channel import interference as link_interference
        cur = link_interference(schedule, received_powers, self.i, self.j, self.t)
        return self.value_at_prev + (cur - self.prev_interference) * self.slope_per_watt


def interference_log_tangent(schedule_prev, received_powers: np.ndarray,
                             params: ChannelParams, i: int, j: int, t: int
                             ) -> InterferenceLogTangent:
    """Tangent of log2(interference + n0) at schedule_prev for link (i, j, t)."""
    from .channel import interference as link_interference
    prev = link_interference(schedule_prev, received_powers, i, j, t)
    denom = prev + params.n0
    return InterferenceLogTangent(
        i=i, j=j, t=t,
        value_at_prev=math.log2(denom),
        prev_interference=prev,
        slope_per_watt=1.0 / (denom * LN2),
    )


def total_power_log(schedule, received_powers: np.ndarray, params: ChannelParams,
                    i: int, j: int, t: int) -> float:
    """log2 of the total power at UAV j on link (i, j, t): own signal plus
    interference plus noise. Concave in the schedule entries."""
    from .channel import interference as link_interference
    a = _tensor(schedule)
    inter = link_interference(schedule, received_powers, i, j, t)
    return math.log2(a[i, j, t] * received_powers[i, j, t] + params.n0 + inter)


def penalized_objective(schedule, received_powers: np.ndarray, params: ChannelParams,
                        eta: float) -> float:
    """Relaxed scheduling objective: sum rate minus the binariness penalty."""
    a = _tensor(schedule)
    pr = np.ascontiguousarray(received_powers)
    return float(_kernels.rates(a, pr, params.n0).sum()) - penalty(a, eta)


def surrogate_objective(schedule, schedule_prev, received_powers: np.ndarray,
                        params: ChannelParams, eta: float) -> float:
    """Concave surrogate maximized by each difference-of-convex iteration.

    Sum over links of (total-power log minus the interference-log tangent at
    schedule_prev), minus the penalty with -a^2 replaced by its affine
    majorizer. Minorizes the penalized objective and matches it exactly at
    schedule = schedule_prev.
    """
    a = _tensor(schedule)
    a_prev = _tensor(schedule_prev)
    pr = np.ascontiguousarray(received_powers)
    n0 = params.n0
    d = _kernels.denominators(a, pr, n0)
    i_cur = _kernels.interference(a, pr)
    i_prev = _kernels.interference(a_prev, pr)
    e_prev = i_prev + n0
    tangent = np.log2(e_prev) + (i_cur - i_prev) / (e_prev * LN2)
    concave = float((np.log2(d) - tangent).sum())
    pen = eta * float((a + a_prev * a_prev - 2.0 * a_prev * a).sum())
    return concave - pen


def matching_lmo(weights: np.ndarray) -> np.ndarray:
    """Max-weight partial matching of a weight matrix, as a 0/1 matrix.

    Row and column sums of the result are at most 1; nonpositive-weight
    assignments are dropped, so an all-nonpositive matrix yields the empty
    matching. Exact for any finite real weights.
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D matrix")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    row_to_col = _kernels.max_weight_matching(w)
    out = np.zeros_like(w)
    rows = np.nonzero(row_to_col >= 0)[0]
    out[rows, row_to_col[rows]] = 1.0
    return out


def _vertex_from_assignment(row_to_col: np.ndarray, m: int) -> np.ndarray:
    """Per-slot assignments (n, t) with -1 for idle -> 0/1 tensor (n, m, t)."""
    n, t = row_to_col.shape
    v = np.zeros((n, m, t))
    rows, slots = np.nonzero(row_to_col >= 0)
    v[rows, row_to_col[rows, slots], slots] = 1.0
    return v


@dataclass(frozen=True)
class InnerResult:
    """Outcome of one surrogate maximization."""

    schedule: Schedule
    gap: float              # summed per-slot Frank-Wolfe gaps at termination
    surrogate: float        # surrogate value at the returned schedule
    iterations: int         # summed per-slot iteration counts
    converged: bool
    moved: bool             # False when the start point was already optimal


def _slot_gradient(a: np.ndarray, pr: np.ndarray, n0: float) -> np.ndarray:
    """Gradient of sum log2(a*pr + interference + n0) for one slot matrix."""
    c = a.sum(axis=1)
    inter = (c @ pr)[None, :] - c[:, None] * pr
    inv = 1.0 / (a * pr + inter + n0)
    colsum = inv.sum(axis=0)
    rowterm = (pr * (colsum[None, :] - inv)).sum(axis=1)
    return (pr * inv + rowterm[:, None]) / LN2


def _slot_direction_change(delta: np.ndarray, pr: np.ndarray) -> np.ndarray:
    """Change of the log arguments along a slot direction (linear map)."""
    c = delta.sum(axis=1)
    inter = (c @ pr)[None, :] - c[:, None] * pr
    return delta * pr + inter


def _solve_slot(a0: np.ndarray, pr: np.ndarray, n0: float, const_grad: np.ndarray,
                tol: float, max_iters: int) -> tuple[np.ndarray, float, int, bool, bool]:
    """Pairwise Frank-Wolfe over one slot's doubly-substochastic polytope.

    The iterate is kept as a convex combination of atoms (the start point
    plus matching vertices); each step moves weight from the worst active
    atom toward the best vertex, so small spurious masses can be removed
    exactly instead of decaying geometrically. Exact line search along each
    segment keeps the surrogate nondecreasing and the iterate feasible.
    """
    n, m = a0.shape
    a = a0.copy()
    atoms: dict[bytes, list] = {a0.tobytes(): [a0.copy(), 1.0]}
    gap = math.inf
    moved = False
    converged = False
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        grad = _slot_gradient(a, pr, n0) + const_grad
        assign = _kernels.max_weight_matching(np.ascontiguousarray(grad))
        vertex = np.zeros_like(a)
        rows = np.nonzero(assign >= 0)[0]
        vertex[rows, assign[rows]] = 1.0
        gap = float((grad * (vertex - a)).sum())
        if gap <= tol:
            converged = True
            break
        away_key = min(atoms, key=lambda key: float((grad * atoms[key][0]).sum()))
        away_atom, away_weight = atoms[away_key]
        direction = vertex - away_atom
        pairwise = bool(np.any(direction)) and away_weight > 0.0
        if not pairwise:
            direction = vertex - a
            if not np.any(direction):
                converged = True
                break
        step_cap = away_weight if pairwise else 1.0

        d0 = _slot_direction_change(a, pr) + n0     # a*pr + interference + n0
        ed = _slot_direction_change(direction, pr) * step_cap
        lin_slope = step_cap * float((const_grad * direction).sum())
        unit = _kernels.fw_line_search(np.ascontiguousarray(d0.ravel()),
                                       np.ascontiguousarray(ed.ravel()), lin_slope)
        step = min(unit * step_cap, step_cap)
        if step <= 0.0:
            converged = True
            break
        a = a + step * direction
        moved = True
        vkey = vertex.tobytes()
        if pairwise:
            atoms[away_key][1] -= step
            if atoms[away_key][1] <= 1e-15:
                del atoms[away_key]
            entry = atoms.setdefault(vkey, [vertex, 0.0])
            entry[1] += step
        else:
            for entry in atoms.values():
                entry[1] *= 1.0 - step
            entry = atoms.setdefault(vkey, [vertex, 0.0])
            entry[1] += step
            for key in [k for k, e in atoms.items() if e[1] <= 1e-15]:
                del atoms[key]
    return a, gap, iterations, converged, moved


def inner_solve(schedule_prev, received_powers: np.ndarray, params: ChannelParams,
                eta: float, config: InnerSolverConfig = InnerSolverConfig()
                ) -> InnerResult:
    """Maximize the surrogate at schedule_prev over the scheduling polytope.

    The surrogate decomposes over slots (no term or constraint couples
    them), so each slot is solved independently by pairwise Frank-Wolfe
    with the max-weight-matching vertex oracle and exact line search.
    Iterates stay feasible by construction and the surrogate never
    decreases, so the result is never worse than the start point. Each slot
    stops when its duality gap falls below its share of
    gap_tol * max(1, |surrogate at the start|); the summed gap certifies
    the joint suboptimality. Hitting the per-slot iteration cap flags the
    result as inexact via converged=False.
    """
    a_prev = _tensor(schedule_prev)
    pr = np.ascontiguousarray(received_powers, dtype=np.float64)
    n, m, t = a_prev.shape
    n0 = params.n0

    # The tangent and penalty pieces are affine in a: constant gradient.
    row_slopes = _kernels.tangent_row_slopes(a_prev, pr, n0)
    const_grad = np.ascontiguousarray(-row_slopes[:, None, :] - eta * (1.0 - 2.0 * a_prev))
    # Constant offset so that surrogate = sum log2(denominators) + <const_grad, a> + offset.
    i_prev = _kernels.interference(a_prev, pr)
    e_prev = i_prev + n0
    offset = float(-(np.log2(e_prev) - i_prev / (e_prev * LN2)).sum()
                   - eta * float((a_prev * a_prev).sum()))

    d_start = _kernels.denominators(a_prev, pr, n0)
    s_start = float(np.log2(d_start).sum() + (const_grad * a_prev).sum() + offset)
    slot_tol = config.gap_tol * max(1.0, abs(s_start)) / t

    a = np.empty_like(a_prev)
    gap = 0.0
    iterations = 0
    converged = True
    moved = False
    for s in range(t):
        slot_a, slot_gap, slot_iters, slot_ok, slot_moved = _solve_slot(
            a_prev[:, :, s], pr[:, :, s], n0, const_grad[:, :, s],
            slot_tol, config.max_iters)
        a[:, :, s] = slot_a
        gap += slot_gap
        iterations += slot_iters
        converged = converged and slot_ok
        moved = moved or slot_moved

    d = _kernels.denominators(np.ascontiguousarray(a), pr, n0)
    sval = float(np.log2(d).sum() + (const_grad * a).sum() + offset)
    return InnerResult(schedule=Schedule(a), gap=gap, surrogate=sval,
                       iterations=iterations, converged=converged, moved=moved)


@dataclass(frozen=True)
class DcIteration:
    """One row of the dc_solve trace."""

    index: int
    eta: float
    objective: float        # penalized objective at the iterate, current eta
    surrogate: float        # optimal surrogate value of this iteration
    residual: float         # sum a*(1-a)
    inner_gap: float
    inner_iterations: int
    inner_converged: bool
    moved: bool


@dataclass(frozen=True)
class DcResult:
    schedule: Schedule      # relaxed
    trace: tuple[DcIteration, ...]
    converged: bool
    eta_initial: float
    eta_final: float
    residual: float


def greedy_power_schedule(received_powers: np.ndarray) -> Schedule:
    """Feasible binary schedule matching each slot by received power alone."""
    pr = np.ascontiguousarray(received_powers, dtype=np.float64)
    n, m, t = pr.shape
    assign = _kernels.max_weight_matching_batch(pr)
    return Schedule(_vertex_from_assignment(assign, m))


def default_eta(received_powers: np.ndarray, params: ChannelParams) -> float:
    """Penalty weight of the order of the objective: greedy sum rate per entry."""
    pr = np.ascontiguousarray(received_powers, dtype=np.float64)
    n, m, t = pr.shape
    greedy = greedy_power_schedule(pr)
    total = float(_kernels.rates(greedy.a, pr, params.n0).sum())
    return max(total / (n * m * t), 1e-12)


def best_single_link_schedule(received_powers: np.ndarray) -> Schedule:
    """Feasible binary schedule activating only the strongest link per slot.

    A strong warm start in interference-limited regimes, where one clean
    link often beats any simultaneous combination.
    """
    pr = np.asarray(received_powers, dtype=np.float64)
    n, m, t = pr.shape
    a = np.zeros((n, m, t))
    for s in range(t):
        i, j = np.unravel_index(int(np.argmax(pr[:, :, s])), (n, m))
        a[i, j, s] = 1.0
    return Schedule(a)


def binary_slot_rate(pairs, pr_slot: np.ndarray, n0: float) -> float:
    """Sum rate of one slot under a binary matching, interference included."""
    if not pairs:
        return 0.0
    rows = [i for i, _ in pairs]
    col_power = pr_slot[rows, :].sum(axis=0)
    total = 0.0
    for i, j in pairs:
        inter = col_power[j] - pr_slot[i, j]
        total += math.log2(1.0 + pr_slot[i, j] / (inter + n0))
    return total


def greedy_marginal_schedule(received_powers: np.ndarray,
                             params: ChannelParams) -> Schedule:
    """Feasible binary schedule built per slot by marginal rate gain.

    Repeatedly adds the link whose activation raises the slot's total rate
    the most (interference included) and stops when no addition helps, so
    the number of simultaneous links adapts to the interference level.
    Generalizes the strongest-single-link start: its first pick is the
    max-power link, and it stays there when a lone link is best.
    """
    pr = np.asarray(received_powers, dtype=np.float64)
    n, m, t = pr.shape
    n0 = params.n0
    a = np.zeros((n, m, t))
    for s in range(t):
        pr_slot = pr[:, :, s]
        pairs: list[tuple[int, int]] = []
        value = 0.0
        row_free = [True] * n
        col_free = [True] * m
        while True:
            best = None
            for i in range(n):
                if not row_free[i]:
                    continue
                for j in range(m):
                    if not col_free[j]:
                        continue
                    candidate = binary_slot_rate(pairs + [(i, j)], pr_slot, n0)
                    if best is None or candidate > best[0]:
                        best = (candidate, i, j)
            if best is None or best[0] <= value:
                break
            value, i, j = best
            pairs.append((i, j))
            row_free[i] = False
            col_free[j] = False
        for i, j in pairs:
            a[i, j, s] = 1.0
    return Schedule(a)


def random_feasible_schedule(n: int, m: int, t: int, rng: np.random.Generator
                             ) -> Schedule:
    """Uniform draw rescaled per slot so row and column sums stay within 1."""
    a = rng.uniform(size=(n, m, t))
    for s in range(t):
        slot = a[:, :, s]
        scale = max(slot.sum(axis=1).max(), slot.sum(axis=0).max(), 1.0)
        slot /= scale
    return Schedule(a)


def dc_solve(schedule_init, received_powers: np.ndarray, params: ChannelParams,
             config: DcConfig = DcConfig()) -> DcResult:
    """Penalized relaxation by difference-of-convex iterations with continuation.

    Re-linearizes at every iterate and maximizes the surrogate with
    inner_solve. A penalty stage ends when the relative change of the
    optimal surrogate value falls below config.epsilon (or the start point
    is already optimal); the penalty weight is then multiplied by
    eta_growth, until it reaches its cap or the iterate is numerically
    binary. The penalized objective is nondecreasing across iterations
    within each stage. Hitting max_dc_iters returns the best iterate with
    converged=False.
    """
    sched = schedule_init if isinstance(schedule_init, Schedule) else Schedule(schedule_init)
    sched.validate_relaxed()
    pr = np.ascontiguousarray(received_powers, dtype=np.float64)
    eta = config.eta if config.eta is not None else default_eta(pr, params)
    eta_max = config.eta_max if config.eta_max is not None else math.inf
    eta = min(eta, eta_max)

    # Early stages need not be solved to convergence; a per-stage budget
    # keeps the continuation moving within the overall iteration cap.
    stage_cap = max(4, config.max_dc_iters // 20)

    eta_initial = eta
    a = sched
    trace: list[DcIteration] = []
    total = 0
    converged = False
    while total < config.max_dc_iters:
        s_prev = None
        stage_iters = 0
        budget_hit = False
        while True:
            if total >= config.max_dc_iters:
                budget_hit = True
                break
            inner = inner_solve(a, pr, params, eta, config.inner)
            total += 1
            stage_iters += 1
            a_new = inner.schedule
            res = penalty_residual(a_new)
            trace.append(DcIteration(
                index=total, eta=eta,
                objective=penalized_objective(a_new, pr, params, eta),
                surrogate=inner.surrogate, residual=res,
                inner_gap=inner.gap, inner_iterations=inner.iterations,
                inner_converged=inner.converged, moved=inner.moved))
            a = a_new
            if not inner.moved:
                break
            if s_prev is not None and abs(inner.surrogate - s_prev) <= \
                    config.epsilon * max(abs(s_prev), 1e-12):
                break
            if stage_iters >= stage_cap:
                break
            s_prev = inner.surrogate
        if budget_hit:
            break
        if penalty_residual(a) < RESIDUAL_TARGET or eta >= eta_max * (1.0 - 1e-12):
            converged = True
            break
        eta = min(eta * config.eta_growth, eta_max)

    return DcResult(schedule=a, trace=tuple(trace), converged=converged,
                    eta_initial=eta_initial, eta_final=eta,
                    residual=penalty_residual(a))


def round_schedule(schedule_relaxed, received_powers: np.ndarray,
                   params: ChannelParams) -> Schedule:
    """Nearest feasible binary schedule: per-slot projection onto matchings.

    Maximizing sum (a - 1/2) * x over binary partial matchings x is the
    Euclidean projection of the relaxed slot onto the binary feasible set,
    so entries below half mass are dropped rather than promoted. Ties are
    broken toward higher received power, then lower (i, j) index. Binary
    inputs come back unchanged.
    """
    a = _tensor(schedule_relaxed)
    pr = np.asarray(received_powers, dtype=np.float64)
    n, m, t = a.shape
    pr_norm = pr / pr.max() if pr.max() > 0 else pr
    idx = (np.arange(n)[:, None] * m + np.arange(m)[None, :]) / float(n * m)
    w = (a - 0.5) + _TIE_POWER_EPS * pr_norm - _TIE_INDEX_EPS * idx[:, :, None]
    assign = _kernels.max_weight_matching_batch(np.ascontiguousarray(w))
    out = Schedule(_vertex_from_assignment(assign, m))
    out.validate_binary()
    return out
