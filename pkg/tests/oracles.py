"""Independent reference computations shared by the tests."""
from __future__ import annotations

import itertools
from fractions import Fraction as F

import numpy as np

from esmck.runseq import ComponentDecl, Exchange, Run, RunSequence, validate_sequence


# run sequences -------------------------------------------------------------------

def _blocks(decls):
    """Per component: its Run followed by one Exchange per consumer of its exports."""
    owner = {f: d.name for d in decls for f in d.exports}
    blocks = {}
    for c in (d.name for d in decls):
        entries = [Run(c)]
        for d in sorted(decls, key=lambda d: d.name):
            fields = sorted(f for f, _ in d.imports if owner[f] == c and d.name != c)
            if fields:
                entries.append(Exchange(tuple(fields), c, d.name))
        blocks[c] = entries
    return blocks


def sequence_for(order, decls, interval=3600, blocks=None):
    """Runs in ``order``, each followed by exchanges to every consumer of its exports."""
    blocks = blocks or _blocks(decls)
    return RunSequence(interval, tuple(e for c in order for e in blocks[c]))


def some_order_valid(decls) -> bool:
    """Brute force: does any permutation of all components validate?"""
    blocks = _blocks(decls)
    return any(validate_sequence(sequence_for(p, decls, blocks=blocks), decls).ok
               for p in itertools.permutations(blocks))


def drop_lagged(decls):
    return [ComponentDecl(d.name, d.exports, frozenset(i for i in d.imports if not i[1])) for d in decls]


NAMES = "ABCD"


def _field_configs(n, modes):
    """Every way one field can be exported by one component and imported by the others."""
    out = []
    for p in range(n):
        others = [c for c in range(n) if c != p]
        for ms in itertools.product(modes, repeat=len(others)):
            out.append((p, tuple(sorted((c, m) for c, m in zip(others, ms) if m is not None))))
    return out


def canonical_decl_sets(n, k, modes=(None, False, True)):
    """Declaration sets with ``n`` components and ``k`` fields, one per symmetry class.

    Fields are interchangeable (multisets of per-field configurations) and so
    are components (only the lexicographically least relabeling is kept).
    ``modes`` lists the import kinds: None (no import), False (unlagged),
    True (lagged).
    """
    cfgs = _field_configs(n, modes)
    index = {c: i for i, c in enumerate(cfgs)}
    relabel = np.array([
        [index[(pi[p], tuple(sorted((pi[c], m) for c, m in imps)))] for p, imps in cfgs]
        for pi in itertools.permutations(range(n))
    ])
    rows = list(itertools.combinations_with_replacement(range(len(cfgs)), k))
    combos = np.array(rows, dtype=np.int64).reshape(len(rows), k)
    weights = len(cfgs) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    key = combos @ weights
    keep = np.ones(len(combos), dtype=bool)
    for pm in relabel:
        keep &= np.sort(pm[combos], axis=1) @ weights >= key
    for combo in combos[keep]:
        exports = {c: set() for c in range(n)}
        imports = {c: set() for c in range(n)}
        for fi, ci in enumerate(combo):
            p, imps = cfgs[ci]
            exports[p].add(f"f{fi}")
            for c, m in imps:
                imports[c].add((f"f{fi}", m))
        yield [ComponentDecl(NAMES[c], frozenset(exports[c]), frozenset(imports[c])) for c in range(n)]


# KPP by hand ---------------------------------------------------------------------

def kpp_hand_replay(D, zw, w, dt, iterations, K0, defective: bool):
    """Straight-line exact evaluation of the model; ``iterations`` holds (alpha, nu, dnu, m)."""
    zCr, K = zw, K0
    for alpha, nu, dnu, m in iterations:
        h = D - zCr
        sigma = (D - zw) / h
        zCr = alpha * zCr
        a2 = F(-2) + 3 * nu / (h * w)
        a3 = F(1) - nu / (h * w)
        if defective:
            a2 += dnu / w
            a3 -= dnu / w
        K = h * w * (sigma + a2 * sigma * sigma + a3 * sigma * sigma * sigma)
        for _ in range(m):
            zCr = zCr - zCr * dt
    return K, zCr
