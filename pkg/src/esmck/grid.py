"""Logically rectangular grids with east-west wrap and a tripolar north fold.

Index conventions (0-based).  Each stagger places its points at continuous
coordinates relative to cell (i, j) occupying [i, i+1] x [j, j+1]:

    stagger     point            rows        north fold owner of (i, j)
    center      (i+1/2, j+1/2)   [0, ny)     (nx-1-i,       2ny-1-j)
    eastEdge    (i,     j+1/2)   [0, ny)     ((nx-i) % nx,  2ny-1-j)
    northEdge   (i+1/2, j)       [0, ny]     (nx-1-i,       2ny-j)
    corner      (i,     j)       [0, ny]     ((nx-i) % nx,  2ny-j)

Every stagger has nx columns; the column at x = nx is the column at x = 0.
The fold is the point reflection (x, y) -> (nx - x, 2ny - y) about the
middle of the top edge, so for northEdge and corner the row j = ny lies
on the fold line and belongs to the interior.  Positions reached across
the fold carry sign -1, which a vector field applies on exchange.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field

TOPOLOGIES = ("closed", "periodicX", "tripolar")
STAGGERS = ("center", "eastEdge", "northEdge", "corner")


class GridError(ValueError):
    pass


class BoundaryPosition(GridError):
    """The position is a physical boundary and has no owner."""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    halo: int = 1
    topology: str = "tripolar"
    stagger: str = "center"

    def __post_init__(self):
        for name in ("nx", "ny", "halo"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise GridError(f"{name} must be an integer, got {v!r}")
        if self.nx < 1 or self.ny < 1:
            raise GridError("nx and ny must be positive")
        if self.halo < 1:
            raise GridError("halo width must be at least 1")
        if self.halo >= min(self.nx, self.ny):
            raise GridError(f"halo width {self.halo} must be below min(nx, ny) = {min(self.nx, self.ny)}")
        if self.topology not in TOPOLOGIES:
            raise GridError(f"unknown topology {self.topology!r}; expected one of {', '.join(TOPOLOGIES)}")
        if self.stagger not in STAGGERS:
            raise GridError(f"unknown stagger {self.stagger!r}; expected one of {', '.join(STAGGERS)}")
        if self.topology == "tripolar" and self.nx % 2:
            raise GridError("tripolar grids need an even nx")

    @property
    def rows(self) -> int:
        """Number of interior rows for this stagger."""
        return self.ny + 1 if self.stagger in ("northEdge", "corner") else self.ny

    @property
    def wraps(self) -> bool:
        return self.topology in ("periodicX", "tripolar")

    def is_interior(self, i: int, j: int) -> bool:
        return 0 <= i < self.nx and 0 <= j < self.rows

    def in_ring(self, i: int, j: int) -> bool:
        h = self.halo
        return -h <= i < self.nx + h and -h <= j < self.rows + h

    def positions(self):
        """All interior and halo positions, row-major from the south-west."""
        h = self.halo
        for j in range(-h, self.rows + h):
            for i in range(-h, self.nx + h):
                yield (i, j)

    def interior(self):
        for j in range(self.rows):
            for i in range(self.nx):
                yield (i, j)

    def fold_column(self, i: int) -> int:
        """Column reflection across the fold (on wrapped indices)."""
        if self.stagger in ("center", "northEdge"):
            return self.nx - 1 - i
        return (self.nx - i) % self.nx

    def fold_row(self, j: int) -> int:
        if self.stagger in ("center", "eastEdge"):
            return 2 * self.ny - 1 - j
        return 2 * self.ny - j

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> GridSpec:
        unknown = set(data) - {"nx", "ny", "halo", "topology", "stagger"}
        if unknown:
            raise GridError(f"unknown grid keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as e:
            raise GridError(str(e)) from None


def load_grid_spec(path) -> GridSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise GridError(f"{path}: {e}") from None
    if not isinstance(data, dict):
        raise GridError(f"{path}: expected a JSON object")
    return GridSpec.from_dict(data)


@dataclass(frozen=True)
class OwnedRef:
    i: int
    j: int
    sign: int = 1


def owner_of(spec: GridSpec, i: int, j: int) -> OwnedRef:
    """Interior position whose value a halo position mirrors."""
    if not spec.in_ring(i, j):
        raise GridError(f"position ({i}, {j}) lies outside the halo ring")
    if spec.is_interior(i, j):
        return OwnedRef(i, j, 1)
    if not 0 <= i < spec.nx:
        if not spec.wraps:
            raise BoundaryPosition(f"position ({i}, {j}) is on a closed boundary")
        i %= spec.nx
    if j < 0 or (j >= spec.rows and spec.topology != "tripolar"):
        raise BoundaryPosition(f"position ({i}, {j}) is on a closed boundary")
    if j >= spec.rows:
        return OwnedRef(spec.fold_column(i), spec.fold_row(j), -1)
    return OwnedRef(i, j, 1)


def build_owner_map(spec: GridSpec) -> dict:
    """Owner of every interior and halo position; ``None`` marks boundary positions."""
    out = {}
    for p in spec.positions():
        try:
            out[p] = owner_of(spec, *p)
        except BoundaryPosition:
            out[p] = None
    return out


def halo_exchange(spec: GridSpec, values: dict, vector: bool = False, owner_map: dict | None = None) -> dict:
    """Fill every owned halo position from its owner.

    ``values`` maps positions to numbers and must cover the interior.  A
    vector field picks up the owner's sign.  Boundary positions keep
    whatever value they had, if any.
    """
    owners = build_owner_map(spec) if owner_map is None else owner_map
    missing = [p for p in spec.interior() if p not in values]
    if missing:
        raise GridError(f"field has no value at interior position {missing[0]}")
    out = dict(values)
    for p, ref in owners.items():
        if ref is None or spec.is_interior(*p):
            continue
        v = values[(ref.i, ref.j)]
        out[p] = -v if vector and ref.sign < 0 else v
    return out


# topology laws ---------------------------------------------------------------

@dataclass
class LawResult:
    name: str
    ok: bool
    counterexample: tuple | None = None
    detail: str = ""
    checked: int = 0


@dataclass
class TopologyReport:
    spec: GridSpec
    laws: list = field(default_factory=list)
    boundary_positions: int = 0

    @property
    def ok(self) -> bool:
        return all(law.ok for law in self.laws)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "ok": self.ok,
            "boundary_positions": self.boundary_positions,
            "laws": [
                {
                    "name": law.name,
                    "ok": law.ok,
                    "checked": law.checked,
                    "counterexample": list(law.counterexample) if law.counterexample else None,
                    "detail": law.detail,
                }
                for law in self.laws
            ],
        }

    def to_text(self) -> str:
        s = self.spec
        lines = [f"grid {s.nx}x{s.ny} halo {s.halo} {s.topology} {s.stagger}"]
        for law in self.laws:
            line = f"  {'pass' if law.ok else 'FAIL'}  {law.name} ({law.checked} checked)"
            if not law.ok:
                line += f": at {law.counterexample}: {law.detail}"
            lines.append(line)
        lines.append(f"  boundary positions: {self.boundary_positions}")
        lines.append("all topology laws pass" if self.ok else "topology check failed")
        return "\n".join(lines)


class _Law:
    def __init__(self, name):
        self.result = LawResult(name, True)

    def check(self, cond: bool, pos, detail: str):
        self.result.checked += 1
        if not cond and self.result.ok:
            self.result.ok = False
            self.result.counterexample = tuple(pos)
            self.result.detail = detail


def _expected_boundary(spec: GridSpec, i: int, j: int) -> bool:
    if spec.is_interior(i, j):
        return False
    if spec.topology == "closed":
        return True
    if spec.topology == "periodicX":
        return not 0 <= j < spec.rows
    return j < 0


def check_topology(spec: GridSpec, owner_map: dict | None = None) -> TopologyReport:
    """Check the topology laws exhaustively over ``owner_map`` (built if omitted)."""
    owners = build_owner_map(spec) if owner_map is None else owner_map
    nx, rows = spec.nx, spec.rows
    report = TopologyReport(spec)

    total = _Law("total")
    for p in spec.positions():
        total.check(p in owners, p, "position missing from owner map")
    extra = sorted(set(owners) - set(spec.positions()))
    if extra:
        total.check(False, extra[0], "entry outside the halo ring")

    boundary = _Law("boundary")
    interior = _Law("interior-identity")
    closure = _Law("owner-of-owner")
    sign = _Law("sign-consistency")
    for p in spec.positions():
        if p not in owners:
            continue
        ref = owners[p]
        i, j = p
        boundary.check((ref is None) == _expected_boundary(spec, i, j), p,
                       "boundary marking disagrees with topology")
        if ref is None:
            report.boundary_positions += 1
            continue
        if spec.is_interior(i, j):
            interior.check(ref == OwnedRef(i, j, 1), p, f"interior position owned by {_fmt(ref)}")
            continue
        closure.check(spec.is_interior(ref.i, ref.j) and owners.get((ref.i, ref.j)) == OwnedRef(ref.i, ref.j, 1),
                      p, f"owner {_fmt(ref)} is not a self-owned interior position")
        crossed = spec.topology == "tripolar" and j >= rows
        sign.check(ref.sign == (-1 if crossed else 1), p,
                   f"sign {ref.sign:+d} but the position {'does' if crossed else 'does not'} cross the fold")

    wrap = _Law("wrap")
    if spec.wraps:
        for j in range(rows):
            for i in list(range(-spec.halo, 0)) + list(range(nx, nx + spec.halo)):
                ref = owners.get((i, j))
                wrap.check(ref == OwnedRef(i % nx, j, 1), (i, j), f"expected ({i % nx}, {j}, +1), got {_fmt(ref)}")
        # one halo column maps bijectively onto one interior column
        for i in list(range(-spec.halo, 0)) + list(range(nx, nx + spec.halo)):
            cells = {(owners[(i, j)].i, owners[(i, j)].j) for j in range(rows) if owners.get((i, j))}
            wrap.check(cells == {(i % nx, j) for j in range(rows)}, (i, 0),
                       f"halo column {i} is not a bijection onto interior column {i % nx}")

    fold = _Law("fold-involution")
    coverage = _Law("coverage")
    if spec.topology == "tripolar":
        for i in range(nx):
            fold.check(spec.fold_column(spec.fold_column(i)) == i, (i, rows), "column reflection is not an involution")
        for j in range(rows, rows + spec.halo):
            fj = spec.fold_row(j)
            fold.check(spec.fold_row(fj) == j, (0, j), "row reflection is not an involution")
            for i in range(-spec.halo, nx + spec.halo):
                ref = owners.get((i, j))
                if ref is None:
                    continue
                back = (spec.fold_column(ref.i), spec.fold_row(ref.j))
                fold.check(back == (i % nx, j), (i, j),
                           f"owner {_fmt(ref)} reflects back to {back}, not ({i % nx}, {j})")
            # each halo row, restricted to the central columns, covers one interior row once
            owned = [owners.get((i, j)) for i in range(nx)]
            cells = Counter((r.i, r.j) for r in owned if r is not None)
            expect = {(i, fj) for i in range(nx)}
            bad = next((i for i, r in enumerate(owned)
                        if r is None or (r.i, r.j) not in expect or cells[(r.i, r.j)] > 1), None)
            coverage.check(bad is None, (bad, j), f"halo row {j} does not cover interior row {fj} exactly once")

    report.laws = [total.result, boundary.result, interior.result, closure.result, wrap.result,
                   fold.result, coverage.result, sign.result]
    if spec.topology != "tripolar":
        fold.result.detail = coverage.result.detail = "no fold in this topology"
    if not spec.wraps:
        wrap.result.detail = "no wrap in this topology"
    return report


def _fmt(ref) -> str:
    if ref is None:
        return "boundary"
    return f"({ref.i}, {ref.j}, {ref.sign:+d})"
