"""Two coupled sign fields with a four-spin term, and the spin image of heights.

The energy of a configuration (tau, tau') on a graph is

    H = sum over bonds ij of  J (tau_i tau_j + tau'_i tau'_j)
                            + U (tau_i tau_j tau'_i tau'_j)

and the measure is exp(-H) / Z; note the sign convention: H as written
enters the exponent negated, so positive J here is *antiferromagnetic*
under the usual physics convention.  Kept verbatim because every derived
identity in this package (self-dual line, bond-representation dictionary)
is stated for this exact form.

Heights map to spins by the mod-4 rule: chi(v) = +1 when v mod 4 is 0 or 1.
Two same-parity faces that touch at a corner differ in height by 0 or 2,
and chi flips exactly on the difference-2 case, so spin agreement encodes
height-level agreement along each parity class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import checks
from .lattice import Domain, Face
from .sixvertex import BoundaryCondition, HeightFunction, Weights

__all__ = [
    "ATParams",
    "SpinPair",
    "ATBoundary",
    "MixedSpinConfig",
    "MAX_FREE_SITES",
    "domain_bonds",
    "at_energy",
    "at_measure_exact",
    "selfdual_params",
    "chi",
    "sixv_to_mixed_spin",
    "spin_marginal_distribution",
    "marginal_fkg_check",
    "at_criterion_check",
]

MAX_FREE_SITES = 12


@dataclass(frozen=True)
class ATParams:
    J: float
    U: float


@dataclass(frozen=True)
class SpinPair:
    """A (tau, tau') assignment over an ordered site tuple."""

    sites: tuple[Hashable, ...]
    tau: tuple[int, ...]
    tau_prime: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.sites) == len(self.tau) == len(self.tau_prime)):
            raise ValueError("sites and spin tuples must align")
        if any(t not in (-1, 1) for t in self.tau + self.tau_prime):
            raise ValueError("spins must be +-1")

    def maps(self) -> tuple[dict, dict]:
        return dict(zip(self.sites, self.tau)), dict(zip(self.sites, self.tau_prime))


@dataclass(frozen=True)
class ATBoundary:
    """Boundary spin assignment: all-plus, all-minus, or an explicit map."""

    kind: str  # "++", "--", or "mixed"
    spins: tuple[tuple[Hashable, tuple[int, int]], ...] = ()

    def pinned(self, boundary_sites: Sequence[Hashable]) -> dict:
        if self.kind == "++":
            return {s: (1, 1) for s in boundary_sites}
        if self.kind == "--":
            return {s: (-1, -1) for s in boundary_sites}
        if self.kind == "mixed":
            return dict(self.spins)
        raise ValueError(f"unknown boundary kind {self.kind!r}")


def domain_bonds(domain: Domain) -> list[tuple[Face, Face]]:
    """Nearest-neighbour face bonds of a domain, each pair listed once."""
    out = []
    seen = set()
    for f in domain.faces:
        for g in domain.neighbors(f, "edge"):
            key = (f, g) if f <= g else (g, f)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def at_energy(
    spins: SpinPair | tuple[Mapping, Mapping],
    bonds: Iterable[tuple[Hashable, Hashable]],
    p: ATParams,
) -> float:
    """The displayed two-field energy, summed bond by bond."""
    if isinstance(spins, SpinPair):
        tau, tp = spins.maps()
    else:
        tau, tp = spins
    h = 0.0
    for i, j in bonds:
        tt = tau[i] * tau[j]
        ss = tp[i] * tp[j]
        h += p.J * (tt + ss) + p.U * (tt * ss)
    return h


def _resolve_system(system) -> tuple[list, list[tuple]]:
    """Accept a Domain (faces + nearest-neighbour bonds) or (sites, bonds)."""
    if isinstance(system, Domain):
        return list(system.faces), domain_bonds(system)
    sites, bonds = system
    return list(sites), [tuple(b) for b in bonds]


def at_measure_exact(
    system,
    p: ATParams,
    bc: ATBoundary | None = None,
    boundary_sites: Sequence | None = None,
) -> dict[tuple, float]:
    """Exact Boltzmann law, keyed by (tau, tau') pairs over the free sites.

    For a Domain the boundary sites default to its boundary faces; pass
    boundary_sites explicitly for raw (sites, bonds) systems.  States are
    tuples of (tau_i, tau'_i) in free-site order, matching the layout the
    brute-force reference distribution uses.
    """
    sites, bonds = _resolve_system(system)
    if boundary_sites is None:
        boundary_sites = system.boundary_faces if isinstance(system, Domain) else ()
    pinned = bc.pinned(boundary_sites) if bc is not None else {}
    free = [s for s in sites if s not in pinned]
    n = len(free)
    if n > MAX_FREE_SITES:
        raise ValueError(f"enumeration guarded at {MAX_FREE_SITES} free sites, got {n}")

    idx = {s: k for k, s in enumerate(free)}
    m = 1 << n
    # bits[a, k] = tau of free site k under tau-assignment a (same table
    # indexes the independent tau' assignment)
    bits = ((np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1) * 2 - 1

    # The energy splits into a tau-only part, a tau'-only part, and the
    # four-spin cross term, which is a sum of rank-1 outer products: per
    # bond, (tau_i tau_j) depends on the tau assignment alone and
    # (tau'_i tau'_j) on the tau' assignment alone.
    tt_cols, ss_cols = [], []
    const = 0.0
    for i, j in bonds:
        pi, pj = pinned.get(i), pinned.get(j)
        if pi is not None and pj is not None:
            tt0 = pi[0] * pj[0]
            ss0 = pi[1] * pj[1]
            const += p.J * (tt0 + ss0) + p.U * tt0 * ss0
            continue
        ti = np.full(m, pi[0]) if pi is not None else bits[:, idx[i]]
        tj = np.full(m, pj[0]) if pj is not None else bits[:, idx[j]]
        si = np.full(m, pi[1]) if pi is not None else bits[:, idx[i]]
        sj = np.full(m, pj[1]) if pj is not None else bits[:, idx[j]]
        tt_cols.append(ti * tj)
        ss_cols.append(si * sj)
    if tt_cols:
        TT = np.stack(tt_cols, axis=1).astype(float)
        SS = np.stack(ss_cols, axis=1).astype(float)
        e_tau = p.J * TT.sum(axis=1)
        e_tp = p.J * SS.sum(axis=1)
        cross = p.U * (TT @ SS.T)
    else:
        e_tau = np.zeros(m)
        e_tp = np.zeros(m)
        cross = np.zeros((m, m))
    energy = e_tau[:, None] + e_tp[None, :] + cross + const

    logw = -energy
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()

    out: dict[tuple, float] = {}
    for a in range(m):
        ta = bits[a]
        for b in range(m):
            sb = bits[b]
            state = tuple((int(ta[k]), int(sb[k])) for k in range(n))
            out[state] = float(w[a, b])
    return out


def selfdual_params(J: float) -> tuple[float, float]:
    """The (U, c) pair on the self-dual line for a given J > 0.

    U = -(1/2) log sinh(2J) and c = coth(2J); the coupled model at these
    parameters corresponds to isotropic vertex weights a = b = 1.  Note
    c lies in [1, 2] exactly when J >= (1/4) log 3.
    """
    if J <= 0:
        raise ValueError("self-dual parametrization needs J > 0")
    U = -0.5 * math.log(math.sinh(2.0 * J))
    c = 1.0 / math.tanh(2.0 * J)
    return U, c


# -- spin image of heights ---------------------------------------------------


def chi(v: int) -> int:
    """Level sign: +1 on heights congruent to 0 or 1 mod 4, else -1."""
    return 1 if v % 4 in (0, 1) else -1


@dataclass(frozen=True)
class MixedSpinConfig:
    """Signs per face, split by face parity."""

    even_faces: tuple[Face, ...]
    odd_faces: tuple[Face, ...]
    sigma_even: tuple[int, ...]
    sigma_odd: tuple[int, ...]

    def sign(self, f: Face) -> int:
        try:
            return self.sigma_even[self.even_faces.index(f)]
        except ValueError:
            return self.sigma_odd[self.odd_faces.index(f)]

    def as_dict(self) -> dict[Face, int]:
        d = dict(zip(self.even_faces, self.sigma_even))
        d.update(zip(self.odd_faces, self.sigma_odd))
        return d


def sixv_to_mixed_spin(
    h: HeightFunction,
    gauge: Iterable[tuple[Face, int]] = (),
) -> MixedSpinConfig:
    """Push a height function to face signs via the mod-4 rule.

    gauge entries (face, sign) request a specific sign at that face; each
    parity class can be flipped wholesale to honor one request, and two
    requests in the same class that disagree about the flip are an error.
    """
    domain = h.domain
    evens = tuple(f for f in domain.faces if domain.parity(f) == 0)
    odds = tuple(f for f in domain.faces if domain.parity(f) == 1)
    flip = {0: None, 1: None}  # None = unconstrained
    for f, want in gauge:
        if want not in (-1, 1):
            raise ValueError("gauge sign must be +-1")
        par = domain.parity(f)
        need = 1 if chi(h.at(f)) == want else -1
        if flip[par] is None:
            flip[par] = need
        elif flip[par] != need:
            raise ValueError(f"inconsistent gauge request at {f}")
    fe = flip[0] or 1
    fo = flip[1] or 1
    return MixedSpinConfig(
        evens,
        odds,
        tuple(fe * chi(h.at(f)) for f in evens),
        tuple(fo * chi(h.at(f)) for f in odds),
    )


def spin_marginal_distribution(
    domain: Domain,
    w: Weights,
    bc: BoundaryCondition,
    parity: int = 0,
) -> dict[tuple, float]:
    """Pushforward of the height law onto one parity class's sign tuple."""
    if parity not in (0, 1):
        raise ValueError("parity must be 0 or 1")
    dist = checks.height_distribution(domain, bc, w)
    cls = [i for i, f in enumerate(domain.faces) if domain.parity(f) == parity]
    out: dict[tuple, float] = {}
    for state, prob in dist.items():
        key = tuple(chi(state[i]) for i in cls)
        out[key] = out.get(key, 0.0) + prob
    return out


def marginal_fkg_check(
    domain: Domain,
    w: Weights,
    bc: BoundaryCondition,
    tol: float = checks.DEFAULT_TOL,
) -> checks.CheckReport:
    """Lattice condition and positive association for the even-spin marginal.

    Runs regardless of whether a, b <= c holds; when it does not, the
    report is tagged out-of-hypothesis so a failure there is a recorded
    observation rather than a bug.
    """
    notes = []
    if not (w.a <= w.c and w.b <= w.c):
        notes.append("out-of-hypothesis: a, b <= c violated")
    dist = spin_marginal_distribution(domain, w, bc, parity=0)
    states = sorted(dist, key=repr)

    def tmin(x, y):
        return tuple(map(min, x, y))

    def tmax(x, y):
        return tuple(map(max, x, y))

    def leq(x, y):
        return all(u <= v for u, v in zip(x, y))

    sub = [
        checks.lattice_condition_check(
            "even-spin lattice condition", dist, tmin, tmax, tol
        )
    ]
    if len(states) <= 20:
        events = checks.all_upsets(states, leq)
        notes.append(f"all {len(events)} increasing events")
    else:
        events = [checks.principal_upset(states, x, leq) for x in states]
        pairs = [
            (events[i] & events[j], events[i] | events[j])
            for i in range(min(len(events), 25))
            for j in range(i + 1, min(len(events), 25))
        ]
        events = events + [e for pair in pairs for e in pair]
        notes.append(f"principal upsets and pairwise combinations ({len(events)})")
    sub.append(
        checks.positive_association_check(
            "even-spin increasing-event correlations", dist, events, tol
        )
    )
    return checks.merge_reports(
        f"even-spin marginal FKG ({domain.shape}, c={w.c:g})", sub, notes
    )


def at_criterion_check(
    domain: Domain,
    p: Weights,
    bc: BoundaryCondition,
    tol: float = checks.DEFAULT_TOL,
) -> checks.CheckReport:
    """Single-face conditional monotonicity of the height law.

    For every face, every pair of comparable outside configurations, and
    every level, conditioning on the higher environment can only raise
    the chance of {height >= level}.
    """
    dist = checks.height_distribution(domain, bc, p)
    rep = checks.single_site_monotonicity_check(
        f"height single-site criterion ({domain.shape}, c={p.c:g})", dist, tol
    )
    return rep
