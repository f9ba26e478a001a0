"""Shared test utilities: random instance generation and enumeration oracles."""

import itertools

import numpy as np

from branchsite.candidates import existing_site
from branchsite.geo import Point
from branchsite.mclp import DemandArea, MclpInstance


def random_instance(rng, max_areas=30, max_cands=12, density=0.4):
    """Random MCLP instance with integer populations (so float sums are exact)."""
    n_areas = rng.randint(3, max_areas)
    n_cands = rng.randint(2, max_cands)
    matrix = np.array(
        [[rng.random() < density for _ in range(n_cands)] for _ in range(n_areas)]
    )
    areas = tuple(
        DemandArea(id=f"d{i:02d}", population=float(rng.randint(1, 1000)),
                   centroid=Point(float(i), 0.0))
        for i in range(n_areas)
    )
    cands = tuple(existing_site(f"c{j:02d}", Point(float(j), 1.0)) for j in range(n_cands))
    return MclpInstance(areas=areas, candidates=cands, matrix=matrix)


def enumerate_optimum(inst, p):
    """Full C(|J|, p) enumeration; returns (z, lexicographically smallest set)."""
    pops = inst.populations
    n = len(inst.candidates)
    ids = [c.id for c in inst.candidates]
    id_order = sorted(range(n), key=lambda j: ids[j])
    best_z = -1.0
    best_sel = None
    for subset in itertools.combinations(id_order, p):
        covered = inst.matrix[:, list(subset)].any(axis=1)
        z = float(pops[covered].sum())
        sel = tuple(sorted(ids[j] for j in subset))
        if z > best_z:
            best_z = z
            best_sel = sel
    return best_z, best_sel
