"""Golden digests of oracle distributions, pinned into the repository.

Each entry freezes the parameter digest plus a fingerprint of the
normalized probabilities (rounded to 12 decimals, so honest refactors
survive while formula changes surface).  Regenerate after a deliberate
change with::

    python3 tests/test_golden.py --write
"""

import hashlib
import json
import sys
from pathlib import Path

from vertexlab import oracle, sixvertex as sv
from vertexlab.lattice import box, torus

GOLDEN_PATH = Path(__file__).parent / "golden" / "distributions.json"


def _square(n):
    sites = [(x, y) for y in range(n) for x in range(n)]
    bonds = []
    for y in range(n):
        for x in range(n):
            if x + 1 < n:
                bonds.append(((x, y), (x + 1, y)))
            if y + 1 < n:
                bonds.append(((x, y), (x, y + 1)))
    return sites, bonds


def _heights(width, height, a, b, c, delta=0):
    domain = box(width, height)
    bc = sv.flat01(domain) if delta == 0 else sv.flat_shifted(domain, delta)
    return oracle.sixv_height_distribution(domain, dict(bc.as_dict()), a, b, c)


def _instances():
    """Name -> freshly built oracle distribution, spanning all five models."""
    sq_sites, sq_bonds = _square(2)
    return {
        "heights-box22-c1.5": lambda: _heights(2, 2, 1.0, 1.0, 1.5),
        "heights-box33-c2": lambda: _heights(3, 3, 1.0, 1.0, 2.0),
        "heights-box33-shift2-c1.25": lambda: _heights(3, 3, 1.0, 1.0, 1.25, delta=2),
        "heights-box32-ab-c1.3": lambda: _heights(3, 2, 1.2, 0.8, 1.3),
        "ice-torus22-uniform": lambda: oracle.sixv_ice_distribution(
            torus(2, 2), 1.0, 1.0, 1.0
        ),
        "ice-torus22-c1.3": lambda: oracle.sixv_ice_distribution(
            torus(2, 2), 1.0, 1.0, 1.3
        ),
        "at-path3": lambda: oracle.at_distribution(
            [0, 1, 2], [(0, 1), (1, 2)], J=0.4, U=0.15
        ),
        "at-square-pinned": lambda: oracle.at_distribution(
            sq_sites, sq_bonds, J=0.3, U=0.1, pinned={(0, 0): (1, 1)}
        ),
        "grcm-single-bond": lambda: oracle.grcm_distribution(
            [0, 1],
            [(0, 1)],
            {(0, 0): 2.0, (1, 0): 3.0, (0, 1): 5.0, (1, 1): 7.0},
            q_sigma=2.0,
            q_tau=2.0,
        ),
        "grcm-cycle4": lambda: oracle.grcm_distribution(
            [0, 1, 2, 3],
            [(0, 1), (1, 2), (2, 3), (3, 0)],
            {(0, 0): 1.0, (1, 0): 0.5, (0, 1): 0.8, (1, 1): 1.7},
            q_sigma=1.5,
            q_tau=2.0,
        ),
        "grcm-square-wired-edge": lambda: oracle.grcm_distribution(
            [0, 1, 2, 3],
            [(0, 1), (1, 2), (2, 3), (3, 0)],
            {(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 2.0},
            q_sigma=2.0,
            q_tau=2.0,
            wired=(0, 3),
        ),
        "cubic-22-q22": lambda: oracle.cubic_distribution(
            sq_sites, sq_bonds, 0.3, 0.2, 0.1, 2, 2
        ),
        "cubic-12-q23": lambda: oracle.cubic_distribution(
            [(0, 0), (1, 0)], [((0, 0), (1, 0))], 0.25, 0.15, 0.05, 2, 3
        ),
    }


def _fingerprint(dist):
    lines = [f"{s!r}|{p:.12e}" for s, p in zip(dist.support, dist.probs)]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def _entry(dist):
    return {
        "model": dist.model,
        "digest": dist.digest,
        "n_states": len(dist.support),
        "prob_fingerprint": _fingerprint(dist),
        "max_prob": round(max(dist.probs), 12),
        "min_prob": round(min(dist.probs), 12),
    }


def _current():
    return {name: _entry(build()) for name, build in sorted(_instances().items())}


def test_golden_file_exists_and_is_complete():
    assert GOLDEN_PATH.exists(), "golden file missing; run tests/test_golden.py --write"
    stored = json.loads(GOLDEN_PATH.read_text())["entries"]
    assert sorted(stored) == sorted(_instances())


def test_distributions_match_golden_digests():
    stored = json.loads(GOLDEN_PATH.read_text())["entries"]
    current = _current()
    mismatches = [
        name
        for name in current
        if name in stored and stored[name] != current[name]
    ]
    assert not mismatches, f"oracle output drifted for: {mismatches}"


def test_fingerprint_is_order_sensitive():
    dist = _instances()["grcm-single-bond"]()
    flipped = oracle.ExactDistribution(
        dist.model, dist.digest, tuple(reversed(dist.support)), tuple(reversed(dist.probs))
    )
    assert _fingerprint(dist) != _fingerprint(flipped)


if __name__ == "__main__":
    if "--write" not in sys.argv:
        print(__doc__)
        raise SystemExit(1)
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema": "v1", "entries": _current()}
    GOLDEN_PATH.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {GOLDEN_PATH} with {len(payload['entries'])} entries")
