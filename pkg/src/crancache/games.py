"""Coalition formation for RRH association and RRU sharing.

Two nested games allocate the cluster:

* inner game: within one resource block (RRU), RRHs split into one
  coalition per content object carried by that block.  RRHs migrate
  between coalitions under a two-condition preference (own payoff up AND
  joint coalition value up), which makes the summed coalition value a
  strictly increasing potential, so negotiation always settles into a
  Nash-stable partition.
* outer game: content objects group into RRUs.  Candidate merges and
  splits are accepted only when total welfare (sum of per-RRU utilities,
  each evaluated with the spectral-efficiency requirement of the candidate
  RRU count) strictly increases, so the outer search is also monotone and
  cannot revisit a partition.

A cheaper outer allocation replaces nested evaluation with Shapley-value
conflict payoffs: contents whose per-RRH Shapley profiles differ can share
a block at little cost, contents that want the same RRHs cannot.

All negotiation orders are fixed (ascending index) and every tie refuses
the move, so results are deterministic functions of (instance, seed).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .content import ClusterCache, ContentCatalog, hit_ratio
from .effcap import LN2, Quantizer, RadioParams, a_beta, required_spectral_efficiency
from .energy import PowerModel, eta_rru
from .errors import ConvergenceError, ParameterError, StabilityViolationError
from .geometry import (STREAM_GAME, DensityConfig, NetworkRealization,
                       sample_network, substream)
from .qos import QosProfile

MAX_SWEEPS = 10_000
SHAPLEY_EXACT_CAP = 10
DEFAULT_COST_COEFF = 1e-4

_BOUNDARY_CHUNK = 1 << 13


@dataclass(eq=False)
class ClusterInstance:
    """Everything one allocation run needs, with value caches.

    The same cost coefficient prices both the inner and the outer game.
    ``lambda_rrh`` is the intensity used by the analytic per-link capacity;
    utilities treat coalition members as serving RRH candidates and the
    whole field as interference, so the instance never re-derives
    intensities from the drawn point count unless told to.
    """

    realization: NetworkRealization
    catalog: ContentCatalog
    cache: ClusterCache
    qos: QosProfile
    params: RadioParams
    power: PowerModel
    lambda_rrh: float
    quantizer: Quantizer
    cost_coeff: float = DEFAULT_COST_COEFF
    literal_power_accounting: bool = False

    _dist: np.ndarray = field(init=False, repr=False)
    _users_by_content: list = field(init=False, repr=False)
    _k_cache: dict = field(init=False, repr=False)
    _cap_cache: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.cost_coeff < 0:
            raise ParameterError("cost coefficient must be non-negative")
        if self.lambda_rrh <= 0:
            raise ParameterError("RRH intensity must be positive")
        if self.qos.count != self.catalog.count:
            raise ParameterError("QoS profile must cover the catalog")
        r = self.realization
        if r.user_content.size and r.user_content.max() >= self.catalog.count:
            raise ParameterError("user requests an object outside the catalog")
        dx = r.user_xy[:, 0:1] - r.rrh_xy[None, :, 0]
        dy = r.user_xy[:, 1:2] - r.rrh_xy[None, :, 1]
        self._dist = np.hypot(dx, dy)
        self._users_by_content = [np.flatnonzero(r.user_content == l)
                                  for l in range(self.catalog.count)]
        self._k_cache = {}
        self._cap_cache = {}

    # -- value plumbing ----------------------------------------------------

    @property
    def n_rrh(self) -> int:
        return self.realization.n_rrh

    @property
    def content_count(self) -> int:
        return self.catalog.count

    def users_of(self, content: int) -> np.ndarray:
        return self._users_by_content[content]

    def mu_for(self, rru_count: int | None) -> float:
        if rru_count is None:
            return self.params.spectral_efficiency
        return required_spectral_efficiency(self.catalog.count,
                                            self.catalog.object_size_bits,
                                            rru_count, self.params.bandwidth_hz,
                                            self.params.slot_s)

    def theta_of(self, content: int) -> float:
        return self.qos.theta_for(content, self.cache.holds(content))

    def share_power(self, content: int) -> float:
        """Power the coalition pays to obtain the object it serves."""
        return (self.power.cache_per_object if self.cache.holds(content)
                else self.power.backhaul)

    def _log_moment_exponent(self, content: int, rru_count: int | None) -> float:
        return (self.mu_for(rru_count) * self.theta_of(content)
                * self.params.bandwidth_hz * self.params.tbar)

    def _k_table(self, a: float) -> np.ndarray:
        """Normalized log-moment map K(a)[user, rrh]; capacity is mu * K.

        K = -ln G / (a ln 2) with G the quantized log-moment of the SINR
        law for a link of the tabulated distance, so K -> log2(1+gamma)
        as the law degenerates.  Strictly decreasing in distance, which
        is what lets "nearest coalition member" read as a row-max.
        """
        tab = self._k_cache.get(a)
        if tab is not None:
            return tab
        beta = self.params.pathloss_exponent
        b = self.quantizer.boundaries
        mids = self.quantizer.midpoints
        d = self._dist.ravel()
        k1 = 2.0 * np.pi * a_beta(beta) * self.lambda_rrh * d ** 2
        k2 = d ** beta * (self.params.noise / self.params.snr)
        w = np.exp(-a * np.log1p(mids))
        g = np.zeros(d.size)
        last_surv = None
        for lo in range(0, b.size - 1, _BOUNDARY_CHUNK):
            hi = min(lo + _BOUNDARY_CHUNK + 1, b.size)
            surv = np.exp(-(k1[:, None] * b[None, lo:hi] ** (2.0 / beta)
                            + k2[:, None] * b[None, lo:hi]))
            g += (surv[:, :-1] - surv[:, 1:]) @ w[lo:hi - 1]
            last_surv = surv[:, -1]
        g += last_surv * w[-1]  # mass beyond gamma_max folds into the last interval
        tab = (-np.log(g) / (a * LN2)).reshape(self._dist.shape)
        self._k_cache[a] = tab
        return tab

    def invalidate_caches(self) -> None:
        self._k_cache.clear()
        self._cap_cache.clear()


def coalition_eff_cap(coalition: Iterable[int], content: int,
                      instance: ClusterInstance,
                      rru_count: int | None = None) -> float:
    """Summed effective capacity the coalition delivers for one content.

    Each requester of the content is served by its nearest coalition
    member; users of other contents and users with no member in reach
    contribute nothing.  Empty coalition: 0.
    """
    cols = tuple(sorted(coalition))
    key = (content, rru_count, cols)
    cached = instance._cap_cache.get(key)
    if cached is not None:
        return cached
    users = instance.users_of(content)
    if not cols or users.size == 0:
        instance._cap_cache[key] = 0.0
        return 0.0
    if cols[0] < 0 or cols[-1] >= instance.n_rrh:
        raise ParameterError("coalition member outside the realization")
    a = instance._log_moment_exponent(content, rru_count)
    k = instance._k_table(a)
    value = instance.mu_for(rru_count) * float(k[np.ix_(users, cols)].max(axis=1).sum())
    instance._cap_cache[key] = value
    return value


def coalition_value(coalition: Iterable[int], content: int,
                    instance: ClusterInstance,
                    rru_count: int | None = None) -> float:
    """Coalition worth: delivered capacity minus the members' power bill.

    v(R) = cap(R) - c0 * (|R| * P_rrh + P_share); the object-acquisition
    power P_share is paid once per coalition and split among members, so
    in total it appears once.  v(empty) = 0.
    """
    cols = tuple(sorted(coalition))
    if not cols:
        return 0.0
    cap = coalition_eff_cap(cols, content, instance, rru_count)
    cost = instance.cost_coeff * (len(cols) * instance.power.rrh_nominal
                                  + instance.share_power(content))
    return cap - cost


def rrh_payoff(rrh: int, coalition: Iterable[int], content: int,
               instance: ClusterInstance, rru_count: int | None = None) -> float:
    """Payoff RRH ``rrh`` gets for joining ``coalition`` on this content.

    Marginal capacity minus c0 * (own RRH power + equal share of the
    object-acquisition power); the share is computed at the size after
    joining.
    """
    cols = tuple(sorted(coalition))
    if rrh in cols:
        raise ParameterError("payoff is defined for a joining RRH, not a member")
    joined = tuple(sorted(cols + (rrh,)))
    gain = (coalition_eff_cap(joined, content, instance, rru_count)
            - coalition_eff_cap(cols, content, instance, rru_count))
    cost = instance.cost_coeff * (instance.power.rrh_nominal
                                  + instance.share_power(content) / len(joined))
    return gain - cost


@dataclass(frozen=True)
class RrhPartition:
    """Assignment of every RRH to exactly one content coalition of one RRU."""

    coalitions: dict  # content -> frozenset of RRH indices

    def __post_init__(self):
        seen: set[int] = set()
        for members in self.coalitions.values():
            if seen & members:
                raise ParameterError("RRH appears in two coalitions")
            seen |= members
        object.__setattr__(self, "coalitions",
                           {c: frozenset(m) for c, m in sorted(self.coalitions.items())})

    def members(self, content: int) -> frozenset:
        return self.coalitions[content]

    def content_of(self, rrh: int) -> int:
        for content, members in self.coalitions.items():
            if rrh in members:
                return content
        raise ParameterError(f"RRH {rrh} not in any coalition")

    def moved(self, rrh: int, target: int) -> "RrhPartition":
        src = self.content_of(rrh)
        new = dict(self.coalitions)
        new[src] = new[src] - {rrh}
        new[target] = new[target] | {rrh}
        return RrhPartition(new)

    def total_value(self, instance: ClusterInstance,
                    rru_count: int | None = None) -> float:
        return sum(coalition_value(m, c, instance, rru_count)
                   for c, m in self.coalitions.items())


def prefers(rrh: int, target_content: int, partition: RrhPartition,
            instance: ClusterInstance, rru_count: int | None = None) -> bool:
    """Whether the RRH strictly wants to defect to the target coalition.

    Requires both a strictly higher own payoff and a strictly higher joint
    value of the two coalitions touched; any tie refuses the move, which
    is what rules out oscillation.
    """
    current = partition.content_of(rrh)
    if target_content == current:
        return False
    a = partition.members(target_content)
    b_rest = partition.members(current) - {rrh}
    own_now = rrh_payoff(rrh, b_rest, current, instance, rru_count)
    own_there = rrh_payoff(rrh, a, target_content, instance, rru_count)
    if own_there <= own_now:
        return False
    joint_now = (coalition_value(a, target_content, instance, rru_count)
                 + coalition_value(partition.members(current), current, instance, rru_count))
    joint_then = (coalition_value(a | {rrh}, target_content, instance, rru_count)
                  + coalition_value(b_rest, current, instance, rru_count))
    return joint_then > joint_now


def greedy_init_partition(contents: Sequence[int], instance: ClusterInstance,
                          rru_count: int | None = None,
                          order: Sequence[int] | None = None) -> RrhPartition:
    """Seed partition: RRHs in scan order each join their best coalition so far.

    Ties go to the lowest content index.
    """
    contents = sorted(contents)
    order = range(instance.n_rrh) if order is None else order
    coalitions: dict[int, frozenset] = {c: frozenset() for c in contents}
    for rrh in order:
        best, best_pay = None, -math.inf
        for c in contents:
            pay = rrh_payoff(rrh, coalitions[c], c, instance, rru_count)
            if pay > best_pay:
                best, best_pay = c, pay
        coalitions[best] = coalitions[best] | {rrh}
    return RrhPartition(coalitions)


def hedonic_rrh_association(contents: Sequence[int], instance: ClusterInstance,
                            rru_count: int | None = None,
                            init: RrhPartition | None = None,
                            order: Sequence[int] | None = None,
                            max_sweeps: int = MAX_SWEEPS) -> RrhPartition:
    """Negotiate RRH coalitions for the contents sharing one RRU.

    Sweeps RRHs in a fixed order; each moves to the first coalition (by
    content index) it strictly prefers.  Stops at the first sweep with no
    move, i.e. at a Nash-stable partition.  Every accepted move raises the
    summed coalition value, so with the sweep cap as a safety net the loop
    always terminates.
    """
    contents = sorted(contents)
    if not contents:
        raise ParameterError("an RRU must carry at least one content")
    partition = init if init is not None else greedy_init_partition(
        contents, instance, rru_count, order)
    if sorted(partition.coalitions) != contents:
        raise ParameterError("init partition does not cover exactly the given contents")
    scan = list(range(instance.n_rrh)) if order is None else list(order)
    for _ in range(max_sweeps):
        moved = False
        for rrh in scan:
            for target in contents:
                if prefers(rrh, target, partition, instance, rru_count):
                    partition = partition.moved(rrh, target)
                    moved = True
                    break
        if not moved:
            return partition
    raise ConvergenceError(f"no stable RRH partition within {max_sweeps} sweeps")


def check_nash_stable(partition: RrhPartition, instance: ClusterInstance,
                      rru_count: int | None = None):
    """Exhaustive deviation check; returns (stable, witness).

    The witness is the first (rrh, target_content) move some RRH strictly
    prefers, or None when stable.
    """
    contents = sorted(partition.coalitions)
    for rrh in range(instance.n_rrh):
        for target in contents:
            if prefers(rrh, target, partition, instance, rru_count):
                return False, (rrh, target)
    return True, None


def prune_sleep_rrhs(partition: RrhPartition, instance: ClusterInstance):
    """Split a block's RRHs into serving and idle sets.

    An RRH serves iff it is the nearest coalition member (lowest index on
    ties) of at least one requester of its content.  Removing idle RRHs
    never changes any user's serving member, so capacity is unchanged.
    """
    active: set[int] = set()
    for content, members in partition.coalitions.items():
        cols = sorted(members)
        users = instance.users_of(content)
        if not cols or users.size == 0:
            continue
        sub = instance._dist[np.ix_(users, cols)]
        serving = np.argmin(sub, axis=1)  # first minimum = lowest index
        active.update(cols[j] for j in serving)
    asleep = frozenset(range(instance.n_rrh)) - active
    return frozenset(active), asleep


# -- outer game: contents to RRUs -----------------------------------------


def _canonical(partition: Iterable[frozenset]) -> tuple[frozenset, ...]:
    blocks = [frozenset(b) for b in partition if b]
    return tuple(sorted(blocks, key=min))


def _signature(partition: tuple[frozenset, ...]) -> str:
    return "|".join(",".join(str(c) for c in sorted(b)) for b in partition)


def rru_coalition_utility(coalition: Iterable[int], rrh_partition: RrhPartition,
                          instance: ClusterInstance, rru_count: int,
                          form: str = "composition") -> float:
    """Utility of one RRU: clamped net worth of its RRH coalitions.

    ``composition`` sums the per-content coalition values; ``direct``
    recomputes capacity and power in one expression.  The two agree to
    rounding, and both are kept so the identity can be watched in tests.
    """
    contents = sorted(coalition)
    if sorted(rrh_partition.coalitions) != contents:
        raise ParameterError("RRH partition does not match the RRU's contents")
    if form == "composition":
        total = sum(coalition_value(rrh_partition.members(c), c, instance, rru_count)
                    for c in contents)
    elif form == "direct":
        cap = sum(coalition_eff_cap(rrh_partition.members(c), c, instance, rru_count)
                  for c in contents)
        n_members = sum(len(rrh_partition.members(c)) for c in contents
                        if rrh_partition.members(c))
        share = sum(instance.share_power(c) for c in contents
                    if rrh_partition.members(c))
        total = cap - instance.cost_coeff * (n_members * instance.power.rrh_nominal + share)
    else:
        raise ParameterError(f"unknown utility form {form!r}")
    return max(total, 0.0)


@dataclass
class AllocationStep:
    index: int
    op: str
    partition: str
    welfare: float


@dataclass
class AllocationResult:
    """Outcome of one allocation run over the whole cluster."""

    algorithm: str
    rru_partition: tuple
    rrh_partitions: dict          # frozenset of contents -> RrhPartition
    welfare: float
    active: frozenset
    asleep: frozenset
    steps: list
    runtime_s: float
    shapley: "ShapleyTable | None" = None

    @property
    def rru_count(self) -> int:
        return len(self.rru_partition)


class _PartitionEvaluator:
    """Memoized welfare of RRU partitions under the nested inner game."""

    def __init__(self, instance: ClusterInstance):
        self.instance = instance
        self._psi: dict = {}

    def block(self, contents: frozenset, rru_count: int):
        key = (contents, rru_count)
        hit = self._psi.get(key)
        if hit is None:
            partition = hedonic_rrh_association(sorted(contents), self.instance,
                                                rru_count=rru_count)
            psi = rru_coalition_utility(contents, partition, self.instance, rru_count)
            hit = (psi, partition)
            self._psi[key] = hit
        return hit

    def welfare(self, partition: tuple) -> float:
        n = len(partition)
        return sum(self.block(b, n)[0] for b in partition)


def _bipartitions(block: frozenset, exhaustive_cap: int = 12):
    """Proper two-way splits of a block, deterministically ordered.

    All splits when the block is small; single peel-offs beyond the cap.
    """
    items = sorted(block)
    m = len(items)
    if m < 2:
        return
    if m <= exhaustive_cap:
        first, rest = items[0], items[1:]
        for mask in range(1 << (m - 1)):
            left = {first}
            for i, item in enumerate(rest):
                if mask >> i & 1:
                    left.add(item)
            if len(left) < m:
                yield frozenset(left), block - frozenset(left)
    else:
        for item in items:
            yield block - {item}, frozenset({item})


def _merge_candidates(partition: tuple, exhaustive: bool):
    n = len(partition)
    if exhaustive:
        # all groups of >= 2 blocks, smallest first
        for size in range(2, n + 1):
            yield from itertools.combinations(range(n), size)
    else:
        for i in range(n):
            for j in range(i + 1, n):
                yield (i, j)


def nested_allocate(instance: ClusterInstance,
                    init: Iterable[frozenset] | None = None,
                    exhaustive_merges: bool = False) -> AllocationResult:
    """Merge-and-split search over RRU partitions with nested RRH games.

    Starts from one block per content unless told otherwise.  A candidate
    merge or split is accepted only when the welfare of the whole candidate
    partition (every block re-evaluated at the candidate's RRU count, since
    the per-block rate requirement depends on how many blocks exist)
    strictly exceeds the current welfare.  Welfare therefore increases at
    every step, no partition can recur, and the loop ends at a partition
    stable against all scanned merges and splits.
    """
    t0 = time.perf_counter()
    all_contents = range(instance.content_count)
    state = (_canonical(init) if init is not None
             else tuple(frozenset({c}) for c in all_contents))
    if sorted(c for b in state for c in b) != list(all_contents):
        raise ParameterError("init must partition the full catalog")
    if exhaustive_merges and instance.content_count > 6:
        raise ParameterError("exhaustive merge scan supported only up to 6 contents")

    ev = _PartitionEvaluator(instance)
    welfare = ev.welfare(state)
    seen = {_signature(state)}
    steps = [AllocationStep(0, "init", _signature(state), welfare)]

    improved = True
    while improved:
        improved = False
        for combo in _merge_candidates(state, exhaustive_merges):
            merged = frozenset().union(*(state[i] for i in combo))
            cand = _canonical([b for i, b in enumerate(state) if i not in combo] + [merged])
            cand_w = ev.welfare(cand)
            if cand_w > welfare:
                sig = _signature(cand)
                if sig in seen:
                    raise StabilityViolationError(f"partition revisited: {sig}")
                state, welfare = cand, cand_w
                seen.add(sig)
                steps.append(AllocationStep(len(steps), "merge", sig, welfare))
                improved = True
                break
        if improved:
            continue
        for idx, block in enumerate(state):
            for left, right in _bipartitions(block):
                cand = _canonical([b for i, b in enumerate(state) if i != idx]
                                  + [left, right])
                cand_w = ev.welfare(cand)
                if cand_w > welfare:
                    sig = _signature(cand)
                    if sig in seen:
                        raise StabilityViolationError(f"partition revisited: {sig}")
                    state, welfare = cand, cand_w
                    seen.add(sig)
                    steps.append(AllocationStep(len(steps), "split", sig, welfare))
                    improved = True
                    break
            if improved:
                break

    return _finalize("nested", instance, state, ev, steps, t0)


def _finalize(name: str, instance: ClusterInstance, state: tuple,
              ev: _PartitionEvaluator, steps: list, t0: float,
              shapley: "ShapleyTable | None" = None) -> AllocationResult:
    n = len(state)
    rrh_parts = {}
    active: set[int] = set()
    welfare = 0.0
    for block in state:
        psi, partition = ev.block(block, n)
        rrh_parts[block] = partition
        welfare += psi
        block_active, _ = prune_sleep_rrhs(partition, instance)
        active |= block_active
    asleep = frozenset(range(instance.n_rrh)) - active
    return AllocationResult(algorithm=name, rru_partition=state,
                            rrh_partitions=rrh_parts, welfare=welfare,
                            active=frozenset(active), asleep=asleep, steps=steps,
                            runtime_s=time.perf_counter() - t0, shapley=shapley)


def evaluate_fixed_partition(name: str, instance: ClusterInstance,
                             partition: Iterable[frozenset]) -> AllocationResult:
    """Welfare of a hand-picked RRU partition (no outer search)."""
    t0 = time.perf_counter()
    state = _canonical(partition)
    if sorted(c for b in state for c in b) != list(range(instance.content_count)):
        raise ParameterError("partition must cover the full catalog")
    ev = _PartitionEvaluator(instance)
    steps = [AllocationStep(0, "fixed", _signature(state), ev.welfare(state))]
    return _finalize(name, instance, state, ev, steps, t0)


def orthogonal_allocate(instance: ClusterInstance) -> AllocationResult:
    """One content per RRU; the no-sharing baseline."""
    return evaluate_fixed_partition(
        "orthogonal", instance,
        [frozenset({c}) for c in range(instance.content_count)])


def full_reuse_allocate(instance: ClusterInstance) -> AllocationResult:
    """All contents in a single RRU; the maximal-sharing baseline."""
    return evaluate_fixed_partition(
        "full_reuse", instance, [frozenset(range(instance.content_count))])


# -- Shapley machinery -----------------------------------------------------


@dataclass(frozen=True)
class ShapleyTable:
    """Per-(content, RRH) Shapley values of the capacity game.

    Row i gives each RRH's average marginal capacity contribution to
    content i over join orders.  ``std_errors`` is present only for the
    sampled mode.
    """

    values: np.ndarray                 # (contents, rrhs)
    mode: str
    rru_count: int | None
    permutations: int | None = None
    std_errors: np.ndarray | None = None


def shapley_values(instance: ClusterInstance, rru_count: int | None = None,
                   mode: str = "auto", permutations: int = 10_000,
                   seed: int = 0, exact_cap: int = SHAPLEY_EXACT_CAP) -> ShapleyTable:
    """Shapley decomposition of each content's coalition capacity.

    ``exact`` enumerates all coalitions (capped at ``exact_cap`` RRHs,
    beyond which the 2^D sweep stops being a desk-scale computation);
    ``sampled`` averages marginals over random join orders and reports the
    per-entry sampling standard error.  ``auto`` picks whichever applies.
    Exact tables satisfy the efficiency identity: row sums equal the grand
    coalition's capacity.
    """
    d = instance.n_rrh
    if mode == "auto":
        mode = "exact" if d <= exact_cap else "sampled"
    if mode == "exact":
        if d > exact_cap:
            raise ParameterError(
                f"exact Shapley capped at {exact_cap} RRHs (got {d}); use sampled mode")
        return _shapley_exact(instance, rru_count)
    if mode == "sampled":
        if permutations < 2:
            raise ParameterError("need at least 2 permutations")
        return _shapley_sampled(instance, rru_count, permutations, seed)
    raise ParameterError(f"unknown Shapley mode {mode!r}")


def _coalition_caps_by_mask(instance: ClusterInstance, content: int,
                            rru_count: int | None) -> np.ndarray:
    """Capacity of every RRH subset (bitmask-indexed) for one content."""
    d = instance.n_rrh
    users = instance.users_of(content)
    caps = np.zeros(1 << d)
    if users.size == 0:
        return caps
    a = instance._log_moment_exponent(content, rru_count)
    k = instance._k_table(a)[users, :]
    mu = instance.mu_for(rru_count)
    best = np.zeros((1 << d, users.size))
    for mask in range(1, 1 << d):
        low = mask & -mask
        rrh = low.bit_length() - 1
        rest = mask ^ low
        best[mask] = np.maximum(best[rest], k[:, rrh]) if rest else k[:, rrh]
        caps[mask] = mu * best[mask].sum()
    return caps


def _shapley_exact(instance: ClusterInstance, rru_count: int | None) -> ShapleyTable:
    d = instance.n_rrh
    weights = np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d)
                        for s in range(d)])
    values = np.zeros((instance.content_count, d))
    masks = np.arange(1 << d)
    sizes = np.array([int(m).bit_count() for m in masks])
    for content in range(instance.content_count):
        caps = _coalition_caps_by_mask(instance, content, rru_count)
        for j in range(d):
            without = masks[(masks >> j) & 1 == 0]
            s = sizes[without]
            values[content, j] = float(
                np.sum(weights[s] * (caps[without | (1 << j)] - caps[without])))
    return ShapleyTable(values=values, mode="exact", rru_count=rru_count)


def _shapley_sampled(instance: ClusterInstance, rru_count: int | None,
                     permutations: int, seed: int,
                     batch: int = 2048) -> ShapleyTable:
    d = instance.n_rrh
    rng = substream(seed, STREAM_GAME, 0)
    mu = instance.mu_for(rru_count)
    sums = np.zeros((instance.content_count, d))
    sq_sums = np.zeros((instance.content_count, d))
    for lo in range(0, permutations, batch):
        p = min(batch, permutations - lo)
        perms = np.argsort(rng.random((p, d)), axis=1)
        for content in range(instance.content_count):
            users = instance.users_of(content)
            if users.size == 0:
                continue
            k = instance._k_table(instance._log_moment_exponent(content, rru_count))
            # capacity after each join is a running row-max over the permutation
            acc = np.maximum.accumulate(k[users][:, perms], axis=2)
            caps = mu * acc.sum(axis=0)                      # (p, d)
            marginals = np.diff(caps, axis=1, prepend=0.0)
            by_rrh = np.empty_like(marginals)
            np.put_along_axis(by_rrh, perms, marginals, axis=1)
            sums[content] += by_rrh.sum(axis=0)
            sq_sums[content] += (by_rrh ** 2).sum(axis=0)
    mean = sums / permutations
    var = np.maximum(sq_sums / permutations - mean ** 2, 0.0)
    se = np.sqrt(var / permutations)
    return ShapleyTable(values=mean, mode="sampled", rru_count=rru_count,
                        permutations=permutations, std_errors=se)


def _acquisition_cost(contents: frozenset, instance: ClusterInstance) -> float:
    """Outer-game cost of running one RRU that carries ``contents``.

    All RRHs are presumed active at this stage (association has not run
    yet).  Default accounting charges cache/backhaul power per object the
    block actually serves; the literal variant charges the full cache and
    catalog regardless, which decouples the cost from the block.
    """
    if not contents:
        return 0.0
    power = instance.power
    base = instance.n_rrh * power.rrh_nominal
    if instance.literal_power_accounting:
        fetch = (instance.cache.size * power.cache_per_object
                 + instance.catalog.count * power.backhaul)
    else:
        fetch = sum(instance.share_power(c) for c in contents)
    return instance.cost_coeff * (base + fetch)


def shapley_conflict_payoff(content: int, coalition: frozenset,
                            table: ShapleyTable, instance: ClusterInstance) -> float:
    """Payoff of a content for sharing an RRU with ``coalition``.

    Sum over members of the L1 distance between Shapley rows (dissimilar
    RRH preferences make good roommates), minus the block's acquisition
    cost evaluated on the post-join coalition.
    """
    if content in coalition:
        raise ParameterError("payoff is defined for a joining content, not a member")
    conflict = sum(float(np.abs(table.values[content] - table.values[other]).sum())
                   for other in sorted(coalition))
    return conflict - _acquisition_cost(coalition | {content}, instance)


def _conflict_utility(coalition: frozenset, table: ShapleyTable,
                      instance: ClusterInstance) -> float:
    if not coalition:
        return 0.0
    return sum(shapley_conflict_payoff(c, coalition - {c}, table, instance)
               for c in sorted(coalition))


def suboptimal_allocate(instance: ClusterInstance,
                        init: Iterable[frozenset] | None = None,
                        mode: str = "auto", permutations: int = 10_000,
                        seed: int = 0,
                        max_sweeps: int = MAX_SWEEPS) -> AllocationResult:
    """RRU allocation from Shapley conflicts instead of nested evaluation.

    Step 1: Shapley table per content (at the starting RRU count's rate
    requirement).  Step 2: contents negotiate RRU membership hedonically
    under the conflict payoff, same two-condition preference as the RRH
    game.  Step 3: the inner RRH game and idle pruning run once on the
    final partition.  Reported welfare uses the same utility as the nested
    search so results are comparable.
    """
    t0 = time.perf_counter()
    contents = list(range(instance.content_count))
    state = (_canonical(init) if init is not None
             else tuple(frozenset({c}) for c in contents))
    if sorted(c for b in state for c in b) != contents:
        raise ParameterError("init must partition the full catalog")

    table = shapley_values(instance, rru_count=len(state), mode=mode,
                           permutations=permutations, seed=seed)
    blocks: dict[int, set] = {i: set(b) for i, b in enumerate(state)}
    home = {c: i for i, b in blocks.items() for c in b}
    steps = [AllocationStep(0, "init", _signature(_canonical(
        [frozenset(b) for b in blocks.values()])), math.nan)]

    for _ in range(max_sweeps):
        moved = False
        for c in contents:
            cur = home[c]
            cur_rest = frozenset(blocks[cur]) - {c}
            stay_own = (sum(float(np.abs(table.values[c] - table.values[o]).sum())
                            for o in cur_rest)
                        - _acquisition_cost(frozenset(blocks[cur]), instance))
            for tgt in sorted(blocks):
                if tgt == cur:
                    continue
                tgt_set = frozenset(blocks[tgt])
                own_there = shapley_conflict_payoff(c, tgt_set, table, instance)
                if own_there <= stay_own:
                    continue
                joint_now = (_conflict_utility(tgt_set, table, instance)
                             + _conflict_utility(frozenset(blocks[cur]), table, instance))
                joint_then = (_conflict_utility(tgt_set | {c}, table, instance)
                              + _conflict_utility(cur_rest, table, instance))
                if joint_then > joint_now:
                    blocks[cur].discard(c)
                    blocks[tgt].add(c)
                    home[c] = tgt
                    moved = True
                    break
        if not moved:
            break
    else:
        raise ConvergenceError(f"no stable RRU partition within {max_sweeps} sweeps")

    final = _canonical([frozenset(b) for b in blocks.values() if b])
    ev = _PartitionEvaluator(instance)
    steps.append(AllocationStep(1, "final", _signature(final), ev.welfare(final)))
    return _finalize("suboptimal", instance, final, ev, steps, t0, shapley=table)


# -- instance generation ----------------------------------------------------


def random_instance(seed: int, n_rrh: int, n_users: int, content_count: int = 5,
                    cache_size: int | None = None, radius: float = 1000.0,
                    zipf_exponent: float = 1.0, theta_cluster: float = 0.1,
                    theta_cloud: float = 0.6, object_bits: float = 1e6,
                    bandwidth_hz: float = 1000.0, slot_s: float = 1e-3,
                    pathloss_exponent: float = 4.0, noise: float = 0.0,
                    snr: float = 1.0, cost_coeff: float = DEFAULT_COST_COEFF,
                    quantizer: Quantizer | None = None,
                    power: PowerModel | None = None) -> ClusterInstance:
    """A reproducible small instance for game experiments.

    Exact point counts (not Poisson) keep instance sizes controlled; the
    analytic field intensity is the one implied by the drawn count.
    """
    if n_rrh < 1 or n_users < 1:
        raise ParameterError("need at least one RRH and one user")
    pos_rng = substream(seed, STREAM_GAME, 1)

    def uniform_disk(n):
        r = radius * np.sqrt(pos_rng.uniform(size=n))
        phi = pos_rng.uniform(0, 2 * np.pi, size=n)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi)])

    catalog = ContentCatalog.zipf(object_bits, zipf_exponent, content_count)
    rrh_xy = uniform_disk(n_rrh)
    user_xy = uniform_disk(n_users)
    mark_rng = substream(seed, STREAM_GAME, 2)
    rrh_content = mark_rng.choice(content_count, size=n_rrh, p=catalog.popularity)
    user_content = mark_rng.choice(content_count, size=n_users, p=catalog.popularity)
    realization = NetworkRealization(radius, rrh_xy, rrh_content, user_xy,
                                     user_content, seed)

    k = content_count if cache_size is None else cache_size
    power = power if power is not None else PowerModel()
    cache = ClusterCache(stored=frozenset(range(k)),
                         power_per_object_w=power.cache_per_object)
    qos = QosProfile.uniform(theta_cluster, theta_cloud, content_count)
    mu = required_spectral_efficiency(content_count, object_bits, content_count,
                                      bandwidth_hz, slot_s)
    params = RadioParams(snr=snr, pathloss_exponent=pathloss_exponent, noise=noise,
                         bandwidth_hz=bandwidth_hz, slot_s=slot_s,
                         spectral_efficiency=mu)
    quantizer = quantizer if quantizer is not None else Quantizer.geometric(512)
    lambda_rrh = n_rrh / (np.pi * radius ** 2)
    return ClusterInstance(realization=realization, catalog=catalog, cache=cache,
                           qos=qos, params=params, power=power,
                           lambda_rrh=lambda_rrh, quantizer=quantizer,
                           cost_coeff=cost_coeff)


def instance_from_scenario(realization: NetworkRealization, catalog: ContentCatalog,
                           cache: ClusterCache, qos: QosProfile, params: RadioParams,
                           power: PowerModel, lambda_rrh: float, quantizer: Quantizer,
                           cost_coeff: float = DEFAULT_COST_COEFF,
                           literal_power_accounting: bool = False) -> ClusterInstance:
    return ClusterInstance(realization=realization, catalog=catalog, cache=cache,
                           qos=qos, params=params, power=power,
                           lambda_rrh=lambda_rrh, quantizer=quantizer,
                           cost_coeff=cost_coeff,
                           literal_power_accounting=literal_power_accounting)
