from __future__ import annotations

import itertools
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from esmck.grid import (
    STAGGERS, TOPOLOGIES, BoundaryPosition, GridError, GridSpec, OwnedRef, build_owner_map,
    check_topology, halo_exchange, load_grid_spec, owner_of,
)

SMALL = [
    GridSpec(nx, ny, h, topo, st_)
    for nx, ny, h, topo, st_ in itertools.product((4, 6, 8), (4, 6), (1, 2), TOPOLOGIES, STAGGERS)
]


def brute_force_fold(nx, ny, stagger):
    """Fold owners from the point reflection (x, y) -> (nx - x, 2ny - y) on continuous coordinates."""
    ox = {"center": 0.5, "eastEdge": 0.0, "northEdge": 0.5, "corner": 0.0}[stagger]
    oy = {"center": 0.5, "eastEdge": 0.5, "northEdge": 0.0, "corner": 0.0}[stagger]
    rows = ny + 1 if oy == 0.0 else ny
    table = {}
    for j in range(rows, rows + 3):
        for i in range(nx):
            x, y = (nx - (i + ox)) % nx, 2 * ny - (j + oy)
            table[(i, j)] = (round(x - ox) % nx, round(y - oy))
    return table


def test_spec_validation():
    with pytest.raises(GridError):
        GridSpec(7, 6, 1, "tripolar")
    with pytest.raises(GridError):
        GridSpec(8, 2, 2, "periodicX")
    with pytest.raises(GridError):
        GridSpec(8, 6, 0)
    with pytest.raises(GridError):
        GridSpec(8, 6, 1, "torus")
    with pytest.raises(GridError):
        GridSpec(8, 6, 1, "tripolar", "vertex")


def test_owner_examples():
    assert owner_of(GridSpec(8, 6, 2, "periodicX"), -1, 3) == OwnedRef(7, 3, 1)
    assert owner_of(GridSpec(8, 6, 2, "tripolar", "center"), 0, 6) == OwnedRef(7, 5, -1)
    for topo in TOPOLOGIES:
        assert owner_of(GridSpec(8, 6, 2, topo), 3, 3) == OwnedRef(3, 3, 1)


def test_owner_errors():
    closed = GridSpec(4, 4, 1, "closed")
    with pytest.raises(BoundaryPosition):
        owner_of(closed, -1, 0)
    with pytest.raises(GridError):
        owner_of(closed, -2, 0)
    with pytest.raises(BoundaryPosition):
        owner_of(GridSpec(8, 6, 2, "tripolar"), 0, -1)


@pytest.mark.parametrize("stagger", STAGGERS)
def test_fold_matches_continuous_reflection(stagger):
    spec = GridSpec(8, 6, 2, "tripolar", stagger)
    for (i, j), (oi, oj) in brute_force_fold(8, 6, stagger).items():
        if j < spec.rows + spec.halo:
            assert owner_of(spec, i, j) == OwnedRef(oi, oj, -1)


def test_closed_map_marks_halo_as_boundary():
    spec = GridSpec(4, 4, 1, "closed")
    m = build_owner_map(spec)
    assert all((ref is None) != spec.is_interior(*p) for p, ref in m.items())
    report = check_topology(spec)
    assert report.ok and report.boundary_positions == 20


def test_periodic_west_halo_is_east_column():
    spec = GridSpec(4, 4, 1, "periodicX")
    m = build_owner_map(spec)
    assert [m[(-1, j)] for j in range(4)] == [OwnedRef(3, j, 1) for j in range(4)]


def test_tripolar_halo_fully_owned():
    spec = GridSpec(8, 6, 2, "tripolar")
    m = build_owner_map(spec)
    for (i, j), ref in m.items():
        if j >= 0:
            assert ref is not None and spec.is_interior(ref.i, ref.j)


@pytest.mark.parametrize("spec", SMALL, ids=lambda s: f"{s.nx}x{s.ny}h{s.halo}-{s.topology}-{s.stagger}")
def test_small_grids_pass(spec):
    assert check_topology(spec).ok


def _alternatives(spec, ref):
    positions = list(spec.positions())
    rng = random.Random(f"{spec}{ref}")
    alts = {None, OwnedRef(0, 0, 1), OwnedRef(0, 0, -1)}
    if ref is not None:
        alts |= {OwnedRef(ref.i, ref.j, -ref.sign), OwnedRef((ref.i + 1) % spec.nx, ref.j, ref.sign),
                 OwnedRef(ref.i, (ref.j + 1) % spec.rows, ref.sign)}
    for _ in range(4):
        i, j = rng.choice(positions)
        alts.add(OwnedRef(i, j, rng.choice((1, -1))))
    alts.discard(ref)
    return alts


@pytest.mark.parametrize("stagger", STAGGERS)
def test_single_entry_mutations_are_caught(stagger):
    spec = GridSpec(8, 6, 2, "tripolar", stagger)
    base = build_owner_map(spec)
    for p, ref in base.items():
        for alt in _alternatives(spec, ref):
            m = dict(base)
            m[p] = alt
            assert not check_topology(spec, m).ok, (p, ref, alt)


def test_missing_entry_is_caught():
    spec = GridSpec(6, 4, 1, "tripolar")
    m = build_owner_map(spec)
    del m[(2, 4)]
    report = check_topology(spec, m)
    assert not report.ok
    assert report.laws[0].name == "total" and report.laws[0].counterexample == (2, 4)


def test_report_json():
    spec = GridSpec.from_dict({"nx": 8, "ny": 6, "halo": 2, "topology": "tripolar", "stagger": "center"})
    doc = check_topology(spec).to_dict()
    assert doc["ok"] and {law["name"] for law in doc["laws"]} >= {"fold-involution", "coverage", "wrap"}
    json.dumps(doc)


def test_load_grid_spec_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nx": 8, "ny": 6, "depth": 3}')
    with pytest.raises(GridError):
        load_grid_spec(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(GridError):
        load_grid_spec(bad)


def _interior_field(spec, values):
    return {p: v for p, v in zip(spec.interior(), values)}


fields = st.integers(0, len(SMALL) - 1).flatmap(
    lambda k: st.tuples(
        st.just(SMALL[k]),
        st.lists(st.integers(-1000, 1000), min_size=SMALL[k].nx * SMALL[k].rows, max_size=SMALL[k].nx * SMALL[k].rows),
        st.booleans(),
    )
)


@given(fields)
def test_exchange_idempotent_and_interior_untouched(case):
    spec, values, vector = case
    f = _interior_field(spec, values)
    once = halo_exchange(spec, f, vector)
    assert halo_exchange(spec, once, vector) == once
    assert all(once[p] == f[p] for p in spec.interior())


def test_exchange_constant_fields():
    spec = GridSpec(8, 6, 2, "tripolar")
    f = {p: 5 for p in spec.interior()}
    scalar = halo_exchange(spec, f)
    vector = halo_exchange(spec, f, vector=True)
    for (i, j), v in scalar.items():
        assert v == 5
    for (i, j), v in vector.items():
        assert v == (-5 if j >= spec.rows else 5)


def test_exchange_needs_interior():
    spec = GridSpec(4, 4, 1, "periodicX")
    with pytest.raises(GridError):
        halo_exchange(spec, {(0, 0): 1})
