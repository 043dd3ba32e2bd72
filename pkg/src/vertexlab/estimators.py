"""Derived quantities on top of the engines: height-variance profiles over a
documented boundary-condition family, logarithmic growth fits, per-sector
free-energy curves, and Monte Carlo event frequencies with batch-mean errors.

The variance profile supports four readings of "boundary":

* ``flat``: the 0/1 checkerboard pinning alone;
* ``min-family`` / ``max-family``: minimum or maximum over the family below,
  a finite stand-in for the optimum over all admissible pinnings;
* ``torus``: no pinning; the observable is the height difference between the
  wrapped domain's center face and its pinned origin, which is invariant
  under the global shift mode.

The family is the flat pinning, its two unit shifts, and four sloped
representatives; it is deliberately small and fixed so that profiles are
reproducible.  Shifting a pinning by a constant cannot change a centered
variance, so the shifted members only matter as a guard against accidental
asymmetries in the sloped constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import checks
from .lattice import Domain, box, torus
from .sampler import run_chain
from .sixvertex import (
    BoundaryCondition,
    HeightFunction,
    Weights,
    enumerate_heights,
    explicit_bc,
    flat01,
    flat_shifted,
    height_log_weight,
    is_admissible,
    sloped_bc,
)
from .transfer import sector_free_energy

# slopes of the four sloped family members; recorded, not configurable
SLOPED_REPRESENTATIVES = (
    (Fraction(1, 2), Fraction(0)),
    (Fraction(0), Fraction(1, 2)),
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(-1, 2), Fraction(1, 2)),
)

_BC_FAMILIES = ("flat", "min-family", "max-family", "torus")

DEFAULT_BATCHES = 20


@dataclass(frozen=True)
class VarianceProfile:
    """Center-height variance per size, with standard errors (0 when exact)."""

    sizes: tuple[int, ...]
    variances: tuple[float, ...]
    stderrs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        object.__setattr__(self, "stderrs", tuple(float(e) for e in self.stderrs))
        if not (len(self.sizes) == len(self.variances) == len(self.stderrs)):
            raise ValueError("sizes, variances and stderrs must align")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        if any(e < 0 for e in self.stderrs):
            raise ValueError("standard errors are nonnegative")


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log size, variance) points."""

    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self) -> None:
        if not -1e-9 <= self.r_squared <= 1.0 + 1e-9:
            raise ValueError(f"r_squared {self.r_squared} outside [0, 1]")


def bc_family_members(domain: Domain, family: str) -> list[tuple[str, BoundaryCondition]]:
    """The admissible pinnings a profile optimizes over, with labels."""
    if family == "flat":
        return [("flat", flat01(domain))]
    if family in ("min-family", "max-family"):
        # the height parity class is fixed, so the smallest legal shifts are
        # +-2; a shift cannot move a centered variance, the members are a
        # symmetry guard
        members = [
            ("flat", flat01(domain)),
            ("flat+2", flat_shifted(domain, 2)),
            ("flat-2", flat_shifted(domain, -2)),
        ]
        for s in SLOPED_REPRESENTATIVES:
            members.append((f"slope({s[0]},{s[1]})", sloped_bc(domain, s)))
        kept = [(lbl, bc) for lbl, bc in members if is_admissible(domain, bc)[0]]
        if not kept:
            raise ValueError("no admissible member in the boundary family")
        return kept
    raise ValueError(f"unknown bc family {family!r}; choose from {_BC_FAMILIES}")


def _mean_with_error(series: np.ndarray, n_batches: int) -> tuple[float, float]:
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("no samples recorded")
    b = max(1, min(n_batches, series.size))
    m = series.size // b
    batch_means = series[: b * m].reshape(b, m).mean(axis=1)
    est = float(batch_means.mean())
    se = float(batch_means.std(ddof=1) / math.sqrt(b)) if b > 1 else 0.0
    return est, se


def _variance_with_error(series: np.ndarray, n_batches: int) -> tuple[float, float]:
    """Batch-mean estimate of Var[X] from a correlated series.

    Each batch contributes its own centered variance; the spread of those
    per-batch values gives the error bar.  Batches must be long relative
    to the autocorrelation time for the error to be trustworthy, which the
    quadratic burn-in/batch defaults aim at.
    """
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError("need at least 2 samples for a variance")
    b = max(1, min(n_batches, series.size // 2))
    m = series.size // b
    # ddof=1 inside each batch: the biased estimator is off by Var/m, which
    # dominates the error bar when the observable has rigid two-point support
    batch_vars = series[: b * m].reshape(b, m).var(axis=1, ddof=1)
    est = float(batch_vars.mean())
    se = float(batch_vars.std(ddof=1) / math.sqrt(b)) if b > 1 else 0.0
    return est, se


def _exact_variance(
    domain: Domain, bc: BoundaryCondition, w: Weights, value_of: Callable[[HeightFunction], float]
) -> float:
    hs = enumerate_heights(domain, bc)
    if not hs:
        raise ValueError("boundary condition admits no height functions")
    logw = np.array([height_log_weight(h, w) for h in hs])
    p = np.exp(logw - logw.max())
    p /= p.sum()
    vals = np.array([value_of(h) for h in hs], dtype=float)
    mean = float(p @ vals)
    return float(p @ (vals - mean) ** 2)


def _default_burn_in(n_free: int) -> int:
    # quadratic in the linear size: the slow mode of the surface diffuses
    return max(100, 2 * n_free)


def _mcmc_variance(
    domain: Domain,
    bc: BoundaryCondition | None,
    w: Weights,
    observable: Callable,
    samples: int,
    seed,
    burn_in: int | None,
    thin: int,
    n_batches: int,
    engine: str,
) -> tuple[float, float]:
    n_free = len(domain.faces) - (len(bc.support) if bc is not None else 1)
    burn = _default_burn_in(n_free) if burn_in is None else burn_in
    _, rec = run_chain(
        domain, bc, w,
        sweeps=samples, burn_in=burn, thin=thin, seed=seed,
        observables={"x": observable}, engine=engine,
    )
    return _variance_with_error(rec["x"], n_batches)


def variance_profile(
    sizes: Sequence[int],
    w: Weights,
    bc_family: str = "flat",
    method: str = "exact",
    samples: int = 200_000,
    seed: int = 0,
    burn_in: int | None = None,
    thin: int = 1,
    n_batches: int = DEFAULT_BATCHES,
    engine: str = "auto",
) -> VarianceProfile:
    """Var[h(center)] against size, exactly or by heat-bath Monte Carlo.

    A size n means the n x n box of faces (outer ring pinned by the family
    member) or the n x n torus.  The center face is (n//2, n//2); on the
    torus the variance is of h(center) - h(origin).  Exact evaluation
    enumerates heights and fails loudly beyond the enumeration guard.
    """
    if method not in ("exact", "mcmc"):
        raise ValueError(f"unknown method {method!r}")
    if bc_family not in _BC_FAMILIES:
        raise ValueError(f"unknown bc family {bc_family!r}; choose from {_BC_FAMILIES}")
    variances, errors = [], []
    for j, n in enumerate(sizes):
        if bc_family == "torus":
            domain = torus(n)
            origin = domain.faces[0]
            center = domain.canon_face((n // 2, n // 2))
            oi, ci = domain.face_index[origin], domain.face_index[center]
            if method == "exact":
                pin = explicit_bc(domain, {origin: 0})
                var = _exact_variance(
                    domain, pin, w, lambda h: h.at(center) - h.at(origin)
                )
                err = 0.0
            else:
                var, err = _mcmc_variance(
                    domain, None, w,
                    lambda st: float(st.heights[ci] - st.heights[oi]),
                    samples, seed + j, burn_in, thin, n_batches, engine,
                )
        else:
            domain = box(n, n)
            center = (n // 2, n // 2)
            ci = domain.face_index[center]
            per_member = []
            for k, (_, bc) in enumerate(bc_family_members(domain, bc_family)):
                if method == "exact":
                    per_member.append(
                        (_exact_variance(domain, bc, w, lambda h: h.at(center)), 0.0)
                    )
                else:
                    per_member.append(
                        _mcmc_variance(
                            domain, bc, w,
                            lambda st: float(st.heights[ci]),
                            samples, seed + j * 131 + k, burn_in, thin, n_batches, engine,
                        )
                    )
            pick = min if bc_family != "max-family" else max
            var, err = pick(per_member, key=lambda pair: pair[0])
        variances.append(var)
        errors.append(err)
    return VarianceProfile(tuple(sizes), tuple(variances), tuple(errors))


def log_fit(profile: VarianceProfile) -> FitResult:
    """Least squares of variance against log size.

    A constant profile fits the flat line exactly, so it reports slope 0
    with r_squared 1 rather than a 0/0.
    """
    if len(profile.sizes) < 3:
        raise ValueError("need at least 3 sizes to fit")
    x = np.log(np.asarray(profile.sizes, dtype=float))
    y = np.asarray(profile.variances, dtype=float)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return FitResult(0.0, float(y[0]), 1.0)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float((resid**2).sum()) / ss_tot
    return FitResult(float(slope), float(intercept), min(max(r2, 0.0), 1.0))


# -- free-energy curves ------------------------------------------------------


def feasible_alphas(N: int) -> list[Fraction]:
    """The unbalance grid 2j/N, j = -N/2 .. N/2, on an even circumference."""
    if N < 2 or N % 2:
        raise ValueError("circumference must be even and >= 2")
    return [Fraction(2 * j, N) for j in range(-N // 2, N // 2 + 1)]


def free_energy_curve(
    N: int, w: Weights, alphas: Sequence | None = None
) -> list[tuple[float, float]]:
    """Per-site sector free energies as (alpha, f_N(alpha)) pairs.

    alpha = 2j/N fixes the per-row up-arrow count at N/2 + j; values off
    that grid have no sector to restrict to and are rejected.
    """
    grid = feasible_alphas(N)
    if alphas is None:
        chosen = grid
    else:
        chosen = []
        for a in alphas:
            fa = Fraction(a).limit_denominator(10**9)
            if fa not in grid:
                raise ValueError(f"infeasible unbalance {a!r}: grid is 2j/{N}")
            chosen.append(fa)
    out = []
    for fa in chosen:
        k = N // 2 + int(fa * N / 2)
        out.append((float(fa), sector_free_energy(N, w, k)))
    return out


def concavity_check(
    points: Sequence[tuple[float, float]], tol: float = 1e-12
) -> checks.CheckReport:
    """Nonnegative slack 2f(a_i) - f(a_{i-1}) - f(a_{i+1}) along the curve.

    Finite-size curves are expected concave on the feasible grid; this
    reports any deviation instead of asserting it away.
    """
    pts = sorted((float(a), float(f)) for a, f in points)
    if len(pts) < 3:
        raise ValueError("need at least 3 grid points")
    pairs = []
    for i in range(1, len(pts) - 1):
        slack = 2 * pts[i][1] - pts[i - 1][1] - pts[i + 1][1]
        pairs.append((slack, ("midpoint", pts[i][0])))
    return checks._finish("free-energy concavity", pairs, tol, ())


# -- Monte Carlo event frequencies -------------------------------------------


def event_frequency(
    domain: Domain,
    bc: BoundaryCondition | None,
    w: Weights,
    event: Callable[[HeightFunction], bool],
    samples: int,
    seed: int = 0,
    burn_in: int | None = None,
    thin: int = 1,
    n_batches: int = DEFAULT_BATCHES,
    engine: str = "auto",
) -> tuple[float, float]:
    """Frequency of a height-function event with a batch-mean error bar."""
    n_free = len(domain.faces) - (len(bc.support) if bc is not None else 1)
    burn = _default_burn_in(n_free) if burn_in is None else burn_in
    _, rec = run_chain(
        domain, bc, w,
        sweeps=samples, burn_in=burn, thin=thin, seed=seed,
        observables={"hit": lambda st: 1.0 if event(st.height_function()) else 0.0},
        engine=engine,
    )
    return _mean_with_error(rec["hit"], n_batches)
