"""Order-theoretic verification helpers shared by the model engines.

All checkers work on fully enumerated distributions and return a
:class:`CheckReport` instead of raising on mathematical failure: a failed
inequality is a *result*, recorded with its worst witness, so callers can
distinguish "the hypothesis holds and the conclusion was verified" from
"the hypothesis was violated and here is where".  Guard violations and
malformed inputs still raise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import sixvertex as sv
from .lattice import Domain

__all__ = [
    "CheckReport",
    "merge_reports",
    "lattice_condition_check",
    "principal_upset",
    "all_upsets",
    "positive_association_check",
    "stochastic_domination_check",
    "single_site_monotonicity_check",
    "height_distribution",
    "height_event_family",
    "height_fkg_check",
    "height_cbc_check",
    "abs_height_event_family",
]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification pass.

    worst_slack is the minimum over all checked instances of (lhs - rhs)
    for inequalities stated as lhs >= rhs, so anything >= -tol passes.
    """

    name: str
    passed: bool
    n_checked: int
    worst_slack: float
    witness: object = None
    notes: tuple[str, ...] = ()

    def summary(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"[{tag}] {self.name}: {self.n_checked} checks, worst slack {self.worst_slack:.3e}"
        if not self.passed and self.witness is not None:
            s += f", witness {self.witness!r}"
        return s

    def require(self) -> "CheckReport":
        if not self.passed:
            raise AssertionError(self.summary())
        return self


def merge_reports(name: str, reports: Sequence[CheckReport], notes: Iterable[str] = ()) -> CheckReport:
    """Combine sub-checks into one verdict keeping the worst witness."""
    reports = list(reports)
    if not reports:
        return CheckReport(name, True, 0, math.inf, None, tuple(notes) + ("vacuous",))
    worst = min(reports, key=lambda r: r.worst_slack)
    all_notes = tuple(notes) + tuple(n for r in reports for n in r.notes)
    return CheckReport(
        name,
        all(r.passed for r in reports),
        sum(r.n_checked for r in reports),
        worst.worst_slack,
        worst.witness,
        all_notes,
    )


def _finish(name, slack_witness_pairs, tol, notes=()) -> CheckReport:
    worst = math.inf
    witness = None
    n = 0
    for slack, wit in slack_witness_pairs:
        n += 1
        if slack < worst:
            worst, witness = slack, wit
    if n == 0:
        return CheckReport(name, True, 0, math.inf, None, tuple(notes) + ("vacuous",))
    return CheckReport(name, worst >= -tol, n, worst, witness, tuple(notes))


# -- FKG lattice condition ---------------------------------------------------


def lattice_condition_check(
    name: str,
    dist: Mapping[Hashable, float],
    meet: Callable,
    join: Callable,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """mu(x v y) mu(x ^ y) >= mu(x) mu(y) over all support pairs.

    States outside the support count as probability zero, so a meet or
    join escaping the support shows up as a genuine violation whenever
    both generators carry mass.
    """
    states = sorted(dist, key=repr)
    p = dict(dist)

    def gen():
        for i, x in enumerate(states):
            for y in states[i + 1 :]:
                lhs = p.get(join(x, y), 0.0) * p.get(meet(x, y), 0.0)
                rhs = p[x] * p[y]
                yield lhs - rhs, (x, y)

    return _finish(name, gen(), tol)


# -- increasing events -------------------------------------------------------


def principal_upset(states: Iterable, x, leq: Callable) -> frozenset:
    return frozenset(s for s in states if leq(x, s))


def all_upsets(states: Sequence, leq: Callable, cap: int = 500_000) -> list[frozenset]:
    """Every upward-closed subset of a small finite poset.

    Brute force over subsets; raises beyond 20 states rather than
    sampling, since a silent fallback would weaken exhaustive claims.
    """
    states = list(states)
    n = len(states)
    if n > 20:
        raise ValueError(f"upset enumeration over {n} states is infeasible")
    above_mask = []
    for i, x in enumerate(states):
        m = 0
        for j, y in enumerate(states):
            if i != j and leq(x, y):
                m |= 1 << j
        above_mask.append(m)
    out = []
    for mask in range(1 << n):
        ok = True
        rest = mask
        while rest:
            i = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            if mask & above_mask[i] != above_mask[i]:
                ok = False
                break
        if ok:
            out.append(frozenset(states[i] for i in range(n) if mask >> i & 1))
            if len(out) > cap:
                raise ValueError("upset family exceeded cap")
    return out


def positive_association_check(
    name: str,
    dist: Mapping[Hashable, float],
    events: Sequence[frozenset],
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """P(A and B) >= P(A) P(B) over all pairs from the given event list.

    The events must be increasing for the conclusion to be meaningful;
    this function does not re-verify that.
    """
    probs = [sum(dist.get(s, 0.0) for s in ev) for ev in events]

    def gen():
        for i in range(len(events)):
            for j in range(i, len(events)):
                inter = events[i] & events[j]
                pij = sum(dist.get(s, 0.0) for s in inter)
                yield pij - probs[i] * probs[j], (i, j)

    return _finish(name, gen(), tol)


# -- stochastic domination ---------------------------------------------------


# scipy's maximum_flow mishandles capacities beyond int32, so mass is
# scaled to fit; the flow verdict is therefore ~1e-9-grained and every
# witness gets re-scored in exact float arithmetic
_FLOW_SCALE = 10**9


def _domination_flow(
    hi: Mapping, lo: Mapping, leq: Callable
) -> tuple[bool, float, frozenset]:
    """Monotone-coupling feasibility via max flow.

    hi dominates lo iff mass can flow from every lo-state to hi-states
    above it.  Returns (feasible, deficit, witness_upset): the deficit is
    the unroutable mass and the witness an increasing set A with
    hi(A) < lo(A) read off the min cut (empty when feasible).
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_flow

    scale = _FLOW_SCALE
    lo_states = [s for s, p in sorted(lo.items(), key=lambda kv: repr(kv[0])) if p > 0]
    hi_states = [s for s, p in sorted(hi.items(), key=lambda kv: repr(kv[0])) if p > 0]
    nl, nh = len(lo_states), len(hi_states)
    src, snk = 0, 1 + nl + nh
    rows: list[int] = []
    cols: list[int] = []
    caps: list[int] = []
    lo_caps = []
    for i, s in enumerate(lo_states):
        c = round(lo[s] * scale)
        lo_caps.append(c)
        rows.append(src)
        cols.append(1 + i)
        caps.append(c)
    for j, t in enumerate(hi_states):
        rows.append(1 + nl + j)
        cols.append(snk)
        caps.append(round(hi[t] * scale))
    big = scale + 1
    for i, s in enumerate(lo_states):
        for j, t in enumerate(hi_states):
            if leq(s, t):
                rows.append(1 + i)
                cols.append(1 + nl + j)
                caps.append(big)
    n = snk + 1
    graph = csr_matrix((caps, (rows, cols)), shape=(n, n), dtype=np.int32)
    res = maximum_flow(graph, src, snk)
    total = sum(lo_caps)
    deficit = (total - res.flow_value) / scale
    feasible = res.flow_value >= total - (nl + nh)  # integer rounding head-room
    witness: frozenset = frozenset()
    if not feasible:
        # residual BFS from the source; the lo-states still reachable are
        # undersupplied, and the upset they generate is where hi is light
        residual = graph - res.flow
        reach = {src}
        frontier = [src]
        adj = residual.tolil()
        while frontier:
            nxt = []
            for u in frontier:
                for v, cap in zip(adj.rows[u], adj.data[u]):
                    if cap > 0 and v not in reach:
                        reach.add(v)
                        nxt.append(v)
            frontier = nxt
        cut_lo = [lo_states[i] for i in range(nl) if 1 + i in reach]
        states = set(lo_states) | set(hi_states)
        witness = frozenset(
            t for t in states if any(leq(s, t) for s in cut_lo)
        )
    return bool(feasible), deficit, witness


def stochastic_domination_check(
    name: str,
    hi: Mapping[Hashable, float],
    lo: Mapping[Hashable, float],
    leq: Callable,
    events: Sequence[frozenset] = (),
    tol: float = DEFAULT_TOL,
    max_exhaustive_states: int = 20,
) -> CheckReport:
    """hi(A) >= lo(A) for all increasing A.

    On small joint supports every upset is enumerated, so the verdict and
    slack are float-exact.  On larger supports the all-events question is
    settled by monotone-coupling feasibility (1e-9-grained) and any cut
    witness is re-scored exactly; the supplied events are always scored
    exactly as well.
    """
    states = sorted(set(hi) | set(lo), key=repr)

    def score(ev) -> float:
        ph = sum(hi.get(s, 0.0) for s in ev)
        pl = sum(lo.get(s, 0.0) for s in ev)
        return ph - pl

    pairs = [(score(ev), ("event", ev)) for ev in events]
    notes = []
    if len(states) <= max_exhaustive_states:
        for ev in all_upsets(states, leq):
            pairs.append((score(ev), ("upset", ev)))
        notes.append("exhaustive over all increasing events")
    else:
        feasible, deficit, witness = _domination_flow(hi, lo, leq)
        if feasible:
            pairs.append((0.0, ("coupling", None)))
            notes.append(f"monotone coupling feasible (granularity {1.0 / _FLOW_SCALE:g})")
        else:
            pairs.append((score(witness), ("coupling", witness)))
            notes.append(f"no monotone coupling, deficit ~{deficit:.3e}")
        tol = max(tol, 2.0 / _FLOW_SCALE)
    return _finish(name, pairs, tol, notes)


# -- single-site conditional monotonicity ------------------------------------


def single_site_monotonicity_check(
    name: str,
    dist: Mapping[tuple, float],
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Conditioned on comparable environments, each coordinate's law is ordered.

    States are tuples of numbers; for every coordinate i, every pair of
    environments (the state with coordinate i removed) comparable under
    the pointwise order, and every attained level k, the conditional
    probability of {coordinate >= k} must be monotone in the environment.
    """
    states = list(dist)
    if not states:
        return CheckReport(name, True, 0, math.inf, None, ("vacuous",))
    width = len(states[0])

    def gen():
        for i in range(width):
            groups: dict[tuple, dict] = {}
            for s in states:
                env = s[:i] + s[i + 1 :]
                cell = groups.setdefault(env, {})
                cell[s[i]] = cell.get(s[i], 0.0) + dist[s]
            envs = sorted(groups)
            levels = sorted({s[i] for s in states})
            for ra in envs:
                for rb in envs:
                    if ra == rb or not _tuple_leq(ra, rb):
                        continue
                    glo, ghi = groups[ra], groups[rb]
                    zlo, zhi = sum(glo.values()), sum(ghi.values())
                    for k in levels[1:]:
                        plo = sum(p for v, p in glo.items() if v >= k) / zlo
                        phi = sum(p for v, p in ghi.items() if v >= k) / zhi
                        yield phi - plo, (i, ra, rb, k)

    return _finish(name, gen(), tol)


# -- height-function instantiations ------------------------------------------


def height_distribution(
    domain: Domain, bc: sv.BoundaryCondition, w: sv.Weights
) -> dict[tuple, float]:
    """Normalized Boltzmann law over height tuples (in domain.faces order)."""
    heights = sv.enumerate_heights(domain, bc)
    logs = [sv.height_log_weight(h, w) for h in heights]
    z = sv.log_sum_exp(logs)
    if z == float("-inf"):
        raise ValueError("empty or zero-weight height ensemble")
    return {
        tuple(h.at(f) for f in domain.faces): math.exp(lw - z)
        for h, lw in zip(heights, logs)
    }


def _tuple_min(x: tuple, y: tuple) -> tuple:
    return tuple(map(min, x, y))


def _tuple_max(x: tuple, y: tuple) -> tuple:
    return tuple(map(max, x, y))


def _tuple_leq(x: tuple, y: tuple) -> bool:
    return all(u <= v for u, v in zip(x, y))


def height_event_family(
    domain: Domain, dist: Mapping[tuple, float], max_pairs: int = 40
) -> list[frozenset]:
    """Increasing events used by the exhaustive correlation checks.

    Single-face threshold events {h(f) >= k} for every face and every
    attained level, then conjunctions and disjunctions of the first
    max_pairs threshold pairs.  All are increasing by construction.
    """
    states = list(dist)
    thresholds: list[frozenset] = []
    for i, f in enumerate(domain.faces):
        levels = sorted({s[i] for s in states})
        for k in levels[1:]:
            thresholds.append(frozenset(s for s in states if s[i] >= k))
    events = list(dict.fromkeys(thresholds))
    base = events[:max_pairs]
    for a in range(len(base)):
        for b in range(a + 1, len(base)):
            events.append(base[a] & base[b])
            events.append(base[a] | base[b])
    return list(dict.fromkeys(events))


def abs_height_event_family(
    domain: Domain, dist: Mapping[tuple, float]
) -> list[frozenset]:
    """Events {|h(f)| >= k}: increasing for |h| comparisons, not for h."""
    states = list(dist)
    out = []
    for i, f in enumerate(domain.faces):
        levels = sorted({abs(s[i]) for s in states})
        for k in levels[1:]:
            out.append(frozenset(s for s in states if abs(s[i]) >= k))
    return list(dict.fromkeys(out))


def height_fkg_check(
    domain: Domain,
    w: sv.Weights,
    bc: sv.BoundaryCondition,
    tol: float = DEFAULT_TOL,
    with_events: bool = True,
) -> tuple[CheckReport, ...]:
    """Lattice condition and event-level positive association for heights."""
    dist = height_distribution(domain, bc, w)
    reports = [
        lattice_condition_check(
            f"height lattice condition ({domain.shape}, c={w.c:g})",
            dist, _tuple_min, _tuple_max, tol,
        )
    ]
    if with_events:
        events = height_event_family(domain, dist)
        reports.append(
            positive_association_check(
                f"height event correlations ({domain.shape}, c={w.c:g}, {len(events)} events)",
                dist, events, tol,
            )
        )
    return tuple(reports)


def height_cbc_check(
    domain: Domain,
    w: sv.Weights,
    bc_low: sv.BoundaryCondition,
    bc_high: sv.BoundaryCondition,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Raising the boundary raises every increasing event's probability."""
    if bc_low.support != bc_high.support:
        raise ValueError("boundary comparison needs matching supports")
    lo_vals = [bc_low.value(f) for f in bc_low.support]
    hi_vals = [bc_high.value(f) for f in bc_high.support]
    if any(a > b for a, b in zip(lo_vals, hi_vals)):
        raise ValueError("boundary conditions are not ordered low <= high")
    dist_lo = height_distribution(domain, bc_low, w)
    dist_hi = height_distribution(domain, bc_high, w)
    events = height_event_family(domain, {**dist_lo, **dist_hi})
    return stochastic_domination_check(
        f"height boundary comparison ({domain.shape}, c={w.c:g})",
        dist_hi, dist_lo, _tuple_leq, events, tol=max(tol, 1e-9),
    )
