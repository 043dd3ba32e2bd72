"""Two-species bond percolation with cluster weights, and its spin dictionary.

Each bond of a finite graph carries a pair of occupation bits, one per
species.  The four channels are weighted per bond by (a0, a_sigma, a_tau,
a_sigmatau) for bit pairs (0,0), (1,0), (0,1), (1,1) respectively, and the
cluster-weighted measure multiplies the product weight by
q_sigma^(sigma components) * q_tau^(tau components).  A word of caution:
a common typographical variant swaps the (1,1) and (0,1) labels; every
identity in this module depends on the assignment used here, in which the
(1,1) channel carries the joint weight a_sigmatau.

Plus boundary conditions are realized by a ghost vertex: the augmented
graph adds one bond per (site, outside neighbour) pair, all wired to the
ghost, and components are counted on the augmented vertex set.  Boundary
clusters therefore merge exactly when they reach the ghost through open
bonds, which is the counting that makes the connectivity identities with
the plus-boundary spin model come out exactly.

The coupled-spin side is a pair of +-1 fields with per-bond weight
exp(Js*ss' + Jt*tt' + Jst*ss'tt').  Dividing the four cells of that 2x2
weight table by its all-plus cell gives the channel weights of the
dictionary, which consequently sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import checks
from ._util import UnionFind

__all__ = [
    "MAX_NU_BONDS",
    "MAX_LATTICE_BONDS",
    "MAX_COMPARISON_BONDS",
    "BondGraph",
    "BondConfig",
    "GRCMParams",
    "CubicParams",
    "DictionaryResult",
    "NuMeasure",
    "ComparisonReport",
    "free_site_graph",
    "wired_site_graph",
    "cycle_graph",
    "path_graph",
    "lambda_weight",
    "cluster_counts",
    "nu_measure",
    "at_to_grcm",
    "fkg_lattice_check_grcm",
    "comparison_check",
    "es_identity_check",
    "random_cluster_measure",
    "cubic_energy",
    "cubic_measure_exact",
]

# 4**12 configurations is a ~130 MB probability table and a few seconds of
# component counting; anything larger does not fit a test-sized budget.
MAX_NU_BONDS = 12
MAX_LATTICE_BONDS = 8
MAX_COMPARISON_BONDS = 6
_LITERAL_LATTICE_BONDS = 4
_JIT_THRESHOLD_BONDS = 9


@dataclass(frozen=True)
class BondGraph:
    """A finite multigraph of sites; ghost is the wired boundary vertex.

    Sites are integers 0..n_sites-1.  Parallel bonds are allowed (a box
    corner reaches the outside twice, so wired graphs need them) and each
    entry of `bonds` is an independent bond with its own channel pair.
    """

    n_sites: int
    bonds: tuple[tuple[int, int], ...]
    ghost: int | None = None
    coords: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bonds", tuple((int(u), int(v)) for u, v in self.bonds))
        for u, v in self.bonds:
            if not (0 <= u < self.n_sites and 0 <= v < self.n_sites):
                raise ValueError(f"bond ({u}, {v}) leaves the site range")
            if u == v:
                raise ValueError("self-loops are not bonds")
        if self.ghost is not None and not 0 <= self.ghost < self.n_sites:
            raise ValueError("ghost index out of range")

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def site_at(self, x: int, y: int) -> int:
        if self.coords is None:
            raise ValueError("graph carries no site coordinates")
        return self.coords.index((x, y))


def free_site_graph(n_cols: int, n_rows: int) -> BondGraph:
    """Nearest-neighbour bonds inside an n_cols x n_rows block of sites."""
    if n_cols < 1 or n_rows < 1:
        raise ValueError("site block must be nonempty")
    coords = tuple((x, y) for y in range(n_rows) for x in range(n_cols))
    index = {c: i for i, c in enumerate(coords)}
    bonds = []
    for x, y in coords:
        if (x + 1, y) in index:
            bonds.append((index[(x, y)], index[(x + 1, y)]))
        if (x, y + 1) in index:
            bonds.append((index[(x, y)], index[(x, y + 1)]))
    return BondGraph(len(coords), tuple(bonds), None, coords)


def wired_site_graph(n_cols: int, n_rows: int) -> BondGraph:
    """The free graph plus one ghost bond per (site, outside neighbour) pair.

    Internal bonds come first, in the free graph's order, so marginals on
    the internal bond set use the same indices either way.
    """
    base = free_site_graph(n_cols, n_rows)
    index = {c: i for i, c in enumerate(base.coords)}
    ghost = base.n_sites
    bonds = list(base.bonds)
    for x, y in base.coords:
        for dx, dy in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            if (x + dx, y + dy) not in index:
                bonds.append((index[(x, y)], ghost))
    return BondGraph(ghost + 1, tuple(bonds), ghost, base.coords)


def cycle_graph(n: int) -> BondGraph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 sites")
    return BondGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n_bonds: int) -> BondGraph:
    if n_bonds < 1:
        raise ValueError("a path needs at least 1 bond")
    return BondGraph(n_bonds + 1, tuple((i, i + 1) for i in range(n_bonds)))


# channel code = n_sigma + 2 * n_tau; column order of every weight table
_CODE_TO_PAIR = ((0, 0), (1, 0), (0, 1), (1, 1))
_PAIR_TO_CODE = {p: c for c, p in enumerate(_CODE_TO_PAIR)}


@dataclass(frozen=True)
class BondConfig:
    """Channel codes per bond of a graph; code = n_sigma + 2*n_tau."""

    graph: BondGraph
    channels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if len(self.channels) != self.graph.n_bonds:
            raise ValueError("one channel per bond required")
        if any(c not in (0, 1, 2, 3) for c in self.channels):
            raise ValueError("channel codes are 0..3")

    @classmethod
    def from_pairs(cls, graph: BondGraph, pairs: Iterable[tuple[int, int]]) -> "BondConfig":
        return cls(graph, tuple(_PAIR_TO_CODE[(int(s), int(t))] for s, t in pairs))

    def pair(self, b: int) -> tuple[int, int]:
        return _CODE_TO_PAIR[self.channels[b]]

    def n_sigma(self, b: int) -> int:
        return self.channels[b] & 1

    def n_tau(self, b: int) -> int:
        return (self.channels[b] >> 1) & 1

    def as_dict(self) -> dict[tuple[int, int], tuple[int, int]]:
        """Bond -> (n_sigma, n_tau); parallel bonds collapse to their max."""
        out: dict[tuple[int, int], tuple[int, int]] = {}
        for b, (u, v) in enumerate(self.graph.bonds):
            key = (u, v) if u <= v else (v, u)
            s, t = _CODE_TO_PAIR[self.channels[b]]
            if key in out:
                s = max(s, out[key][0])
                t = max(t, out[key][1])
            out[key] = (s, t)
        return out


def _as_weight_row(value, n_bonds: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_bonds, float(arr))
    if arr.shape != (n_bonds,):
        raise ValueError(f"{name}: expected a scalar or {n_bonds} per-bond values")
    if np.any(arr < 0):
        raise ValueError(f"{name}: channel weights must be nonnegative")
    return arr


@dataclass(frozen=True)
class GRCMParams:
    """Per-bond channel weights (scalars broadcast) and global cluster weights."""

    a0: object = 1.0
    a_sigma: object = 1.0
    a_tau: object = 1.0
    a_sigmatau: object = 1.0
    q_sigma: float = 1.0
    q_tau: float = 1.0

    def __post_init__(self) -> None:
        if self.q_sigma <= 0 or self.q_tau <= 0:
            raise ValueError("cluster weights must be positive")
        for name in ("a0", "a_sigma", "a_tau", "a_sigmatau"):
            v = getattr(self, name)
            arr = np.asarray(v, dtype=float)
            if np.any(arr < 0):
                raise ValueError(f"{name}: channel weights must be nonnegative")

    def channel_table(self, n_bonds: int) -> np.ndarray:
        """(n_bonds, 4) weights in channel-code order."""
        cols = [
            _as_weight_row(self.a0, n_bonds, "a0"),
            _as_weight_row(self.a_sigma, n_bonds, "a_sigma"),
            _as_weight_row(self.a_tau, n_bonds, "a_tau"),
            _as_weight_row(self.a_sigmatau, n_bonds, "a_sigmatau"),
        ]
        table = np.stack(cols, axis=1)
        if np.any(table.max(axis=1) <= 0):
            raise ValueError("every bond needs at least one positive channel weight")
        return table


def lambda_weight(config: BondConfig, params: GRCMParams) -> float:
    """Log product weight of a bond configuration; -inf on a zero channel."""
    table = params.channel_table(config.graph.n_bonds)
    total = 0.0
    for b, code in enumerate(config.channels):
        w = table[b, code]
        if w == 0.0:
            return -math.inf
        total += math.log(w)
    return total


def cluster_counts(config: BondConfig) -> tuple[int, int]:
    """Connected-component counts (sigma, tau) on the config's vertex set.

    Wired graphs count on sites plus the ghost, so boundary-touching
    clusters merge through open ghost bonds; with every bond closed the
    ghost contributes one extra singleton.  The extra component is
    configuration-independent, so the measures below do not see it.
    """
    out = []
    for species in (0, 1):
        uf = UnionFind(config.graph.n_sites)
        for b, (u, v) in enumerate(config.graph.bonds):
            if (config.channels[b] >> species) & 1:
                uf.union(u, v)
        out.append(uf.n_sets)
    return out[0], out[1]


# -- exhaustive cluster-weighted measure -------------------------------------


def _component_labels(open_bits: np.ndarray, bonds: Sequence[tuple[int, int]], n_vertices: int) -> np.ndarray:
    """Min-label components, vectorized over rows of open_bits.

    open_bits is (n_configs, n_bonds) boolean.  Labels converge to the
    least vertex index of each component within n_vertices sweeps because
    every sweep walks all bonds once.
    """
    n_cfg = open_bits.shape[0]
    labels = np.broadcast_to(
        np.arange(n_vertices, dtype=np.int16), (n_cfg, n_vertices)
    ).copy()
    cols = [np.ascontiguousarray(open_bits[:, b]) for b in range(len(bonds))]
    for _ in range(n_vertices):
        for b, (u, v) in enumerate(bonds):
            ob = cols[b]
            m = np.minimum(labels[:, u], labels[:, v])
            labels[ob, u] = m[ob]
            labels[ob, v] = m[ob]
    return labels


def _count_kernel(n_bonds, eu, ev, n_sites, out_sigma, out_tau, parent):
    # One union-find pass per configuration and species; root = smallest
    # member so the merge direction below keeps parents decreasing.
    n_cfg = out_sigma.shape[0]
    for t in range(n_cfg):
        for species in range(2):
            for s in range(n_sites):
                parent[s] = s
            comps = n_sites
            for b in range(n_bonds):
                code = (t >> (2 * b)) & 3
                bit = (code >> species) & 1
                if bit == 1:
                    u = eu[b]
                    while parent[u] != u:
                        u = parent[u]
                    v = ev[b]
                    while parent[v] != v:
                        v = parent[v]
                    if u != v:
                        if u < v:
                            parent[v] = u
                        else:
                            parent[u] = v
                        comps -= 1
            if species == 0:
                out_sigma[t] = comps
            else:
                out_tau[t] = comps


_jit_cache: dict = {}


def _jitted_count():
    if "count" not in _jit_cache:
        import numba

        _jit_cache["count"] = numba.njit(cache=False)(_count_kernel)
    return _jit_cache["count"]


def _all_counts(graph: BondGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-species component counts for every channel configuration."""
    B = graph.n_bonds
    n_cfg = 4**B
    if B >= _JIT_THRESHOLD_BONDS:
        out_s = np.empty(n_cfg, np.uint8)
        out_t = np.empty(n_cfg, np.uint8)
        eu = np.array([u for u, _ in graph.bonds], np.int64)
        ev = np.array([v for _, v in graph.bonds], np.int64)
        parent = np.empty(graph.n_sites, np.int64)
        _jitted_count()(B, eu, ev, graph.n_sites, out_s, out_t, parent)
        return out_s, out_t
    idx = np.arange(n_cfg, dtype=np.int64)
    counts = []
    for species in (0, 1):
        bits = np.empty((n_cfg, B), dtype=bool)
        for b in range(B):
            bits[:, b] = ((idx >> (2 * b + species)) & 1).astype(bool)
        labels = _component_labels(bits, graph.bonds, graph.n_sites)
        counts.append(
            (labels == np.arange(graph.n_sites, dtype=np.int16)).sum(axis=1).astype(np.uint8)
        )
    return counts[0], counts[1]


@dataclass
class NuMeasure:
    """Exhaustive cluster-weighted law over channel configurations.

    probs[m] is the probability of the configuration whose bond-b channel
    code is (m >> 2b) & 3.
    """

    graph: BondGraph
    params: GRCMParams
    probs: np.ndarray
    log_weights: np.ndarray

    def config(self, m: int) -> BondConfig:
        return BondConfig(
            self.graph,
            tuple((m >> (2 * b)) & 3 for b in range(self.graph.n_bonds)),
        )

    def as_dict(self) -> dict[tuple[int, ...], float]:
        B = self.graph.n_bonds
        return {
            tuple((m >> (2 * b)) & 3 for b in range(B)): float(p)
            for m, p in enumerate(self.probs)
        }

    def prob(self, event: Callable[[BondConfig], bool]) -> float:
        return float(
            sum(p for m, p in enumerate(self.probs) if p > 0 and event(self.config(m)))
        )

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))

    def marginal(self, bond_ids: Sequence[int]) -> dict[tuple[int, ...], float]:
        """Joint channel law of the selected bonds."""
        m = np.arange(len(self.probs), dtype=np.int64)
        sub = np.zeros_like(m)
        for k, b in enumerate(bond_ids):
            sub |= ((m >> (2 * b)) & 3) << (2 * k)
        sums = np.bincount(sub, weights=self.probs, minlength=4 ** len(bond_ids))
        return {
            tuple((s >> (2 * k)) & 3 for k in range(len(bond_ids))): float(p)
            for s, p in enumerate(sums)
        }

    def sigma_mask_marginal(self) -> np.ndarray:
        """Law of the sigma occupation bits, indexed by bitmask."""
        B = self.graph.n_bonds
        m = np.arange(len(self.probs), dtype=np.int64)
        mask = np.zeros_like(m)
        for b in range(B):
            mask |= ((m >> (2 * b)) & 1) << b
        return np.bincount(mask, weights=self.probs, minlength=2**B)


def _resolve_graph(domain, bc: str | None) -> BondGraph:
    if isinstance(domain, BondGraph):
        if bc == "++" and domain.ghost is None:
            raise ValueError("graph has no ghost vertex; build it wired")
        if bc == "free" and domain.ghost is not None:
            raise ValueError("graph is wired; free boundary wants the plain graph")
        return domain
    n_cols, n_rows = domain
    if bc == "++":
        return wired_site_graph(n_cols, n_rows)
    if bc == "free" or bc is None:
        return free_site_graph(n_cols, n_rows)
    raise ValueError(f"unknown boundary class {bc!r}")


def nu_measure(domain, params: GRCMParams, bc: str | None = None) -> NuMeasure:
    """Enumerate the cluster-weighted measure on a graph or site block.

    domain is a BondGraph or an (n_cols, n_rows) site-block shape; bc is
    "++" (ghost-wired) or "free".  Guarded at MAX_NU_BONDS bonds.
    """
    graph = _resolve_graph(domain, bc)
    B = graph.n_bonds
    if B > MAX_NU_BONDS:
        raise ValueError(f"enumeration guarded at {MAX_NU_BONDS} bonds, got {B}")
    table = params.channel_table(B)
    n_cfg = 4**B
    idx = np.arange(n_cfg, dtype=np.int64)
    with np.errstate(divide="ignore"):
        log_table = np.log(table)
    logw = np.zeros(n_cfg)
    for b in range(B):
        logw += log_table[b, (idx >> (2 * b)) & 3]
    ns, nt = _all_counts(graph)
    logw += ns.astype(float) * math.log(params.q_sigma)
    logw += nt.astype(float) * math.log(params.q_tau)
    finite = np.isfinite(logw)
    if not finite.any():
        raise ValueError("measure has empty support")
    probs = np.zeros(n_cfg)
    shift = logw[finite].max()
    probs[finite] = np.exp(logw[finite] - shift)
    probs /= probs.sum()
    total = probs.sum()
    assert abs(total - 1.0) <= 1e-12, f"normalization off by {total - 1.0:.3e}"
    return NuMeasure(graph, params, probs, logw)


# -- spin dictionary ---------------------------------------------------------


@dataclass(frozen=True)
class DictionaryResult:
    """Channel weights induced by a coupled-spin model; may leave the regime.

    alphas is (a0, a_sigma, a_tau, a_sigmatau).  A negative entry means
    the couplings have no percolation representation; params() then
    refuses rather than clamping.
    """

    alphas: tuple[float, float, float, float]
    in_regime: bool
    couplings: tuple[float, float, float]

    def params(self) -> GRCMParams:
        if not self.in_regime:
            raise ValueError(
                f"couplings {self.couplings} give a negative channel weight {self.alphas}"
            )
        a0, a_s, a_t, a_st = self.alphas
        return GRCMParams(a0, a_s, a_t, a_st, q_sigma=2.0, q_tau=2.0)


def at_to_grcm(j_sigma: float, j_tau: float, j_sigmatau: float) -> DictionaryResult:
    """Channel weights of the two-species representation of coupled spins.

    The table is the 2x2 cell table exp(Js*s + Jt*t + Jst*s*t) over
    s, t in {-1, +1}, divided by its (+,+) cell, written as cumulative
    channel sums; the four weights therefore add to one.  Cluster weights
    are 2 for both species (one sign per cluster).
    """
    a0 = math.exp(-2.0 * (j_sigma + j_tau))
    a_s = math.exp(-2.0 * j_tau) * (math.exp(-2.0 * j_sigmatau) - math.exp(-2.0 * j_sigma))
    a_t = math.exp(-2.0 * j_sigma) * (math.exp(-2.0 * j_sigmatau) - math.exp(-2.0 * j_tau))
    a_st = (
        1.0
        - math.exp(-2.0 * (j_sigma + j_sigmatau))
        - math.exp(-2.0 * (j_tau + j_sigmatau))
        + math.exp(-2.0 * (j_sigma + j_tau))
    )
    alphas = (a0, a_s, a_t, a_st)
    return DictionaryResult(alphas, all(a >= 0.0 for a in alphas), (j_sigma, j_tau, j_sigmatau))


# -- FKG lattice condition ---------------------------------------------------


def _partition(table: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...], np.ndarray]:
    """B_> / B_< split: bond slacks a_sigmatau*a0 - a_sigma*a_tau."""
    slack = table[:, 3] * table[:, 0] - table[:, 1] * table[:, 2]
    greater = tuple(int(b) for b in np.flatnonzero(slack >= 0))
    less = tuple(int(b) for b in np.flatnonzero(slack < 0))
    return greater, less, slack


def _code_meet(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a & b for a, b in zip(x, y))


def _code_join(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a | b for a, b in zip(x, y))


def _code_leq(x: tuple[int, ...], y: tuple[int, ...]) -> bool:
    # componentwise on both species bits; codes are bit pairs, so the
    # bitwise test is the product order
    return all((a & b) == a for a, b in zip(x, y))


def fkg_lattice_check_grcm(
    params: GRCMParams, n_bonds: int, tol: float = checks.DEFAULT_TOL
) -> checks.CheckReport:
    """Product-weight lattice condition over all configuration pairs.

    The weight is a product over bonds and meet/join act per bond, so the
    pair inequality factorizes: comparable channel pairs give equality and
    the only incomparable pair, (1,0) against (0,1), gives the per-bond
    slack a_sigmatau*a0 - a_sigma*a_tau.  The factorized slacks are the
    verdict; on small instances a literal scan over all pairs of the 4^B
    configurations cross-checks the reduction, violations included.
    """
    if n_bonds > MAX_LATTICE_BONDS:
        raise ValueError(f"guarded at {MAX_LATTICE_BONDS} bonds, got {n_bonds}")
    table = params.channel_table(n_bonds)
    greater, less, slack = _partition(table)
    notes = [f"B_> bonds {greater}", f"B_< bonds {less}"]
    if less:
        notes.append("out-of-hypothesis: some bonds weight the joint channel lightly")
    factor = checks.CheckReport(
        "per-bond factorized lattice condition",
        bool(np.all(slack >= -tol)),
        n_bonds,
        float(slack.min()) if n_bonds else math.inf,
        int(slack.argmin()) if n_bonds else None,
    )
    reports = [factor]
    if n_bonds <= _LITERAL_LATTICE_BONDS:
        dist = {}
        for m in range(4**n_bonds):
            codes = tuple((m >> (2 * b)) & 3 for b in range(n_bonds))
            dist[codes] = float(np.prod(table[np.arange(n_bonds), codes])) if n_bonds else 1.0
        literal = checks.lattice_condition_check(
            "literal scan over configuration pairs", dist, _code_meet, _code_join, tol
        )
        agree = literal.passed == factor.passed
        notes.append(
            "literal pair scan agrees with the factorized verdict"
            if agree
            else "literal pair scan DISAGREES with the factorized verdict"
        )
        reports.append(literal)
        if not agree:
            reports.append(checks.CheckReport("factorization consistency", False, 1, -math.inf))
    return checks.merge_reports(
        f"two-species lattice condition ({n_bonds} bonds)", reports, notes
    )


# -- comparison of two parameter sets ----------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    """Hypothesis chain evaluation plus, when it holds, the domination check."""

    hypothesis: checks.CheckReport
    b_greater: tuple[int, ...]
    b_less: tuple[int, ...]
    conclusion: checks.CheckReport | None

    @property
    def hypothesis_ok(self) -> bool:
        return self.hypothesis.passed

    @property
    def skipped(self) -> bool:
        return self.conclusion is None

    def summary(self) -> str:
        head = self.hypothesis.summary()
        tail = "skipped (hypothesis failed)" if self.skipped else self.conclusion.summary()
        return f"{head}\n{tail}"


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.empty_like(num)
    for i, (a, b) in enumerate(zip(num, den)):
        if b > 0:
            out[i] = a / b
        elif a == 0:
            out[i] = math.nan
        else:
            out[i] = math.inf
    return out


def comparison_check(
    params: GRCMParams,
    params_tilde: GRCMParams,
    n_bonds: int,
    graph: BondGraph | None = None,
    tol: float = checks.DEFAULT_TOL,
) -> ComparisonReport:
    """Printed comparison hypothesis, then domination of the tilde measure.

    The hypothesis is taken literally, bond by bond, with channel ratios
    alpha = a/a~ and cluster-weight ratio rho_tau = q_tau/q_tau~:

      * q_sigma <= q_sigma~;
      * on B_> bonds, a_sigmatau's ratio is at least both single-species
        ratios (the trailing max >= min link is recorded although it can
        never bind);
      * on B_< bonds, rho_tau*alpha_sigma >= max(alpha_sigmatau,
        rho_tau*alpha_0) >= min(...) >= alpha_tau.

    The partition comes from the untilded weights.  A ratio with zero
    denominator and nonzero numerator is +inf; 0/0 is recorded as not
    evaluable and fails the hypothesis rather than guessing.

    When the hypothesis holds, the claimed conclusion - the first measure
    gives every increasing event at least as much mass - is checked on the
    supplied graph (default: a cycle, so cluster counts do not factorize
    over bonds).  All-increasing-events domination is equivalent to the
    existence of a monotone coupling, which is what the domination checker
    certifies, exactly on tiny supports and by max-flow beyond that.  The
    outcome is reported either way; holding the hypothesis does not get to
    assume the conclusion.
    """
    if n_bonds > MAX_COMPARISON_BONDS:
        raise ValueError(f"guarded at {MAX_COMPARISON_BONDS} bonds, got {n_bonds}")
    if graph is None:
        graph = cycle_graph(n_bonds) if n_bonds >= 3 else path_graph(n_bonds)
    if graph.n_bonds != n_bonds:
        raise ValueError("graph bond count disagrees with n_bonds")
    table = params.channel_table(n_bonds)
    table_t = params_tilde.channel_table(n_bonds)
    greater, less, _ = _partition(table)

    alpha = np.stack([_ratio(table[:, c], table_t[:, c]) for c in range(4)], axis=1)
    rho_tau = params.q_tau / params_tilde.q_tau
    pairs = [
        (params_tilde.q_sigma - params.q_sigma, ("q_sigma <= q_sigma~",)),
    ]
    notes = []
    for b in greater:
        a0, a_s, a_t, a_st = alpha[b]
        pairs.append((a_st - max(a_s, a_t), ("B_>", b, "joint ratio >= max")))
        pairs.append((max(a_s, a_t) - min(a_s, a_t), ("B_>", b, "max >= min")))
    for b in less:
        a0, a_s, a_t, a_st = alpha[b]
        hi, lo = max(a_st, rho_tau * a0), min(a_st, rho_tau * a0)
        pairs.append((rho_tau * a_s - hi, ("B_<", b, "rho*sigma ratio >= max")))
        pairs.append((hi - lo, ("B_<", b, "max >= min")))
        pairs.append((lo - a_t, ("B_<", b, "min >= tau ratio")))
    if np.isnan(alpha[list(greater) + list(less)]).any():
        pairs.append((-math.inf, ("ratio 0/0 not evaluable",)))
        notes.append("some channel ratios are 0/0; hypothesis not evaluable")
    hyp = checks._finish("comparison hypothesis chain", pairs, tol, notes)

    conclusion = None
    if hyp.passed:
        mu = nu_measure(graph, params)
        mu_t = nu_measure(graph, params_tilde)
        conclusion = checks.stochastic_domination_check(
            f"increasing events favor the untilded measure ({n_bonds} bonds)",
            hi=mu.as_dict(),
            lo=mu_t.as_dict(),
            leq=_code_leq,
        )
    return ComparisonReport(hyp, greater, less, conclusion)


# -- coupled-spin enumeration and the connectivity identities ----------------


def _pm_assignments(n: int) -> np.ndarray:
    """(2^n, n) matrix of +-1 spins, assignment index little-endian."""
    m = 1 << n
    return ((np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1) * 2 - 1


def _bond_products(spins: np.ndarray, bonds: Sequence[tuple[int, int]], ghost: int | None) -> np.ndarray:
    """(assignments, bonds) products s_u * s_v with the ghost pinned to +1."""
    cols = []
    for u, v in bonds:
        if ghost is not None and v == ghost:
            cols.append(spins[:, u])
        elif ghost is not None and u == ghost:
            cols.append(spins[:, v])
        else:
            cols.append(spins[:, u] * spins[:, v])
    return np.stack(cols, axis=1).astype(float)


def _coupled_spin_weights(
    graph: BondGraph, j_sigma: float, j_tau: float, j_sigmatau: float
) -> tuple[np.ndarray, np.ndarray]:
    """Boltzmann weights exp(sum Js ss' + Jt tt' + Jst ss'tt') over spin pairs.

    Returns (W, spins): W[a, b] for sigma-assignment a and tau-assignment
    b over the free sites, ghost spins +1 in both fields.
    """
    n_free = graph.n_sites - (1 if graph.ghost is not None else 0)
    spins = _pm_assignments(n_free)
    ss = _bond_products(spins, graph.bonds, graph.ghost)
    logw = (
        j_sigma * ss.sum(axis=1)[:, None]
        + j_tau * ss.sum(axis=1)[None, :]
        + j_sigmatau * (ss @ ss.T)
    )
    logw -= logw.max()
    return np.exp(logw), spins


def _sigma_occupation_weights(graph: BondGraph, table: np.ndarray) -> np.ndarray:
    """Unnormalized law of the sigma bond bits, tau and spins summed out.

    For a fixed sigma occupation pattern the joint weight factors as
    (number of compatible sigma-sign assignments) x (sum over tau signs of
    per-bond channel sums), because the tau bit of a bond only couples to
    whether its endpoint tau spins agree.  This is the route that avoids
    enumerating 4^bonds states.
    """
    B = graph.n_bonds
    n_free = graph.n_sites - (1 if graph.ghost is not None else 0)
    idx = np.arange(1 << B, dtype=np.int64)
    bits = np.empty((1 << B, B), dtype=bool)
    for b in range(B):
        bits[:, b] = ((idx >> b) & 1).astype(bool)

    spins = _pm_assignments(n_free)
    prods = _bond_products(spins, graph.bonds, graph.ghost)
    sigma_counts = np.zeros(1 << B, dtype=np.int64)
    for a in range(spins.shape[0]):
        bad = np.int64(0)
        for b in range(B):
            if prods[a, b] < 0:
                bad |= np.int64(1) << b
        sigma_counts += (idx & bad) == 0

    tau_sums = np.zeros(1 << B)
    open_eq = table[:, 1] + table[:, 3]  # channel sum when bit=1 and taus agree
    open_ne = table[:, 1]
    closed_eq = table[:, 0] + table[:, 2]
    closed_ne = table[:, 0]
    for a in range(spins.shape[0]):
        eq = prods[a] > 0
        w1 = np.where(eq, open_eq, open_ne)
        w0 = np.where(eq, closed_eq, closed_ne)
        tau_sums += np.prod(np.where(bits, w1[None, :], w0[None, :]), axis=1)
    return sigma_counts.astype(float) * tau_sums


def es_identity_check(
    shape: tuple[int, int],
    j_sigma: float,
    j_tau: float,
    j_sigmatau: float,
    atol: float = 1e-10,
) -> checks.CheckReport:
    """Connectivity probabilities against plus-boundary spin moments.

    For every site i, the chance that i reaches the ghost through open
    sigma bonds must equal the spin expectation <sigma_i>, and for every
    pair the chance of joint connection (ghost paths allowed) must equal
    <sigma_i sigma_j>.  Couplings must admit nonnegative channel weights.
    """
    result = at_to_grcm(j_sigma, j_tau, j_sigmatau)
    if not result.in_regime:
        raise ValueError(f"couplings {result.couplings} are out of regime: {result.alphas}")
    graph = wired_site_graph(*shape)
    table = result.params().channel_table(graph.n_bonds)

    weights = _sigma_occupation_weights(graph, table)
    z = weights.sum()
    B = graph.n_bonds
    idx = np.arange(1 << B, dtype=np.int64)
    bits = np.empty((1 << B, B), dtype=bool)
    for b in range(B):
        bits[:, b] = ((idx >> b) & 1).astype(bool)
    labels = _component_labels(bits, graph.bonds, graph.n_sites)

    wmat, spins = _coupled_spin_weights(graph, j_sigma, j_tau, j_sigmatau)
    z_spin = wmat.sum()
    row = wmat.sum(axis=1)  # tau summed out; moments of sigma need only this

    n_free = graph.n_sites - 1
    pairs = []
    for i in range(n_free):
        lhs = float(weights[labels[:, i] == labels[:, graph.ghost]].sum() / z)
        rhs = float((row * spins[:, i]).sum() / z_spin)
        pairs.append((atol - abs(lhs - rhs), ("one-point", i, lhs, rhs)))
    for i in range(n_free):
        for j in range(i + 1, n_free):
            lhs = float(weights[labels[:, i] == labels[:, j]].sum() / z)
            rhs = float((row * spins[:, i] * spins[:, j]).sum() / z_spin)
            pairs.append((atol - abs(lhs - rhs), ("two-point", (i, j), lhs, rhs)))
    return checks._finish(
        f"connectivity identities on {shape[0]}x{shape[1]} sites ({B} bonds)",
        pairs,
        0.0,
        (f"tolerance {atol:g}",),
    )


# -- single-species collapse -------------------------------------------------


def random_cluster_measure(graph: BondGraph, p_edge: float, q: float) -> dict[int, float]:
    """One-species cluster-weighted law, keyed by open-edge bitmask.

    Weight (p/(1-p))^open * q^components on the graph's vertex set; a
    wired graph contributes its ghost exactly as in the two-species case.
    """
    if not 0 < p_edge < 1:
        raise ValueError("edge weight must lie strictly between 0 and 1")
    if q <= 0:
        raise ValueError("cluster weight must be positive")
    B = graph.n_bonds
    if B > MAX_NU_BONDS:
        raise ValueError(f"enumeration guarded at {MAX_NU_BONDS} bonds, got {B}")
    ratio = p_edge / (1.0 - p_edge)
    out = {}
    for mask in range(1 << B):
        uf = UnionFind(graph.n_sites)
        n_open = 0
        for b, (u, v) in enumerate(graph.bonds):
            if (mask >> b) & 1:
                uf.union(u, v)
                n_open += 1
        out[mask] = ratio**n_open * q**uf.n_sets
    z = sum(out.values())
    return {mask: w / z for mask, w in out.items()}


# -- integer-spin cubic models -----------------------------------------------


@dataclass(frozen=True)
class CubicParams:
    """Couplings and alphabet sizes for the two-field integer-spin model."""

    j_sigma: float
    j_tau: float
    j_sigmatau: float
    q_sigma: int
    q_tau: int

    def __post_init__(self) -> None:
        if self.q_sigma < 1 or self.q_tau < 1:
            raise ValueError("alphabet sizes are positive integers")


def _grid_bonds(shape: tuple[int, int]) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    n_cols, n_rows = shape
    out = []
    for y in range(n_rows):
        for x in range(n_cols):
            if x + 1 < n_cols:
                out.append(((x, y), (x + 1, y)))
            if y + 1 < n_rows:
                out.append(((x, y), (x, y + 1)))
    return out


def cubic_energy(sigma, tau, params: CubicParams) -> float:
    """Nearest-neighbour energy of integer spin fields on a grid.

    sigma and tau are equal-shape 2D arrays indexed [x][y] with entries in
    {1..q_sigma} and {1..q_tau}.  Each bond contributes
    -2(Js-Jst)*[sigmas agree] - 2(Jt-Jst)*[taus agree] - 4Jst*[both agree].
    """
    s = np.asarray(sigma)
    t = np.asarray(tau)
    if s.shape != t.shape or s.ndim != 2:
        raise ValueError("spin fields must be 2D arrays of equal shape")
    if np.any((s < 1) | (s > params.q_sigma)):
        raise ValueError("sigma spin outside its alphabet")
    if np.any((t < 1) | (t > params.q_tau)):
        raise ValueError("tau spin outside its alphabet")
    total = 0.0
    for (x1, y1), (x2, y2) in _grid_bonds(s.shape):
        ds = 1.0 if s[x1, y1] == s[x2, y2] else 0.0
        dt = 1.0 if t[x1, y1] == t[x2, y2] else 0.0
        total += (
            -2.0 * (params.j_sigma - params.j_sigmatau) * ds
            - 2.0 * (params.j_tau - params.j_sigmatau) * dt
            - 4.0 * params.j_sigmatau * ds * dt
        )
    return total


MAX_CUBIC_STATES = 65536


def cubic_measure_exact(shape: tuple[int, int], params: CubicParams) -> dict[tuple, float]:
    """Exact Boltzmann law exp(-energy)/Z keyed by (sigma tuple, tau tuple).

    Spins are listed row-major; the state count q_sigma^n * q_tau^n is
    guarded at MAX_CUBIC_STATES.
    """
    n_cols, n_rows = shape
    n = n_cols * n_rows
    n_states = params.q_sigma**n * params.q_tau**n
    if n_states > MAX_CUBIC_STATES:
        raise ValueError(f"enumeration guarded at {MAX_CUBIC_STATES} states, got {n_states}")
    sites = [(x, y) for y in range(n_rows) for x in range(n_cols)]
    site_index = {c: k for k, c in enumerate(sites)}
    bonds = [(site_index[a], site_index[b]) for a, b in _grid_bonds(shape)]

    def assignments(q: int) -> np.ndarray:
        m = q**n
        out = np.empty((m, n), dtype=np.int64)
        for k in range(n):
            out[:, k] = (np.arange(m) // q**k) % q + 1
        return out

    def deltas(assign: np.ndarray) -> np.ndarray:
        return np.stack(
            [(assign[:, u] == assign[:, v]).astype(float) for u, v in bonds], axis=1
        )

    sig = assignments(params.q_sigma)
    ta = assignments(params.q_tau)
    dsig = deltas(sig)
    dta = deltas(ta)
    js, jt, jst = params.j_sigma, params.j_tau, params.j_sigmatau
    energy = (
        -2.0 * (js - jst) * dsig.sum(axis=1)[:, None]
        - 2.0 * (jt - jst) * dta.sum(axis=1)[None, :]
        - 4.0 * jst * (dsig @ dta.T)
    )
    logw = -energy
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    out = {}
    for a in range(sig.shape[0]):
        sa = tuple(int(v) for v in sig[a])
        for b in range(ta.shape[0]):
            out[(sa, tuple(int(v) for v in ta[b]))] = float(w[a, b])
    return out
