"""Coupled-component run sequences: declarations, validation and generation.

Component files have one declaration per line::

    OCN exports sst imports pressure,windstress lagged runoff

Sequence files bracket one coupling interval::

    @3600
      ATM
      ATM -> LND :precip,radiation
      LND
    @

``#`` starts a comment in both formats.
"""
from __future__ import annotations

import heapq
import re
from collections import deque
from dataclasses import dataclass, field

NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")

CONSUMED_BEFORE_PRODUCED = "consumed-before-produced"
CONSUMED_BEFORE_EXCHANGED = "consumed-before-exchanged"
UNKNOWN_FIELD = "unknown-field"
DUPLICATE_PRODUCER = "duplicate-producer"
UNKNOWN_COMPONENT = "unknown-component"
COMPONENT_NOT_RUN = "component-not-run"


class RunseqError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    exports: frozenset = frozenset()
    imports: frozenset = frozenset()  # of (field, lagged)

    @classmethod
    def make(cls, name: str, exports=(), imports=(), lagged=()) -> ComponentDecl:
        return cls(name, frozenset(exports),
                   frozenset((f, False) for f in imports) | frozenset((f, True) for f in lagged))

    @property
    def unlagged(self) -> list[str]:
        return sorted(f for f, lag in self.imports if not lag)

    @property
    def lagged(self) -> list[str]:
        return sorted(f for f, lag in self.imports if lag)

    def imported_fields(self) -> set[str]:
        return {f for f, _ in self.imports}


@dataclass(frozen=True)
class Run:
    component: str


@dataclass(frozen=True)
class Exchange:
    fields: tuple
    src: str
    dst: str


@dataclass(frozen=True)
class RunSequence:
    interval: int
    entries: tuple = ()


@dataclass(frozen=True)
class Violation:
    index: int | None  # entry index; None for declaration problems
    field: str
    reason: str
    component: str = ""


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"index": v.index, "field": v.field, "reason": v.reason, "component": v.component}
                for v in self.violations
            ],
        }

    def to_text(self) -> str:
        if self.ok:
            return "run sequence valid"
        lines = ["run sequence invalid"]
        for v in self.violations:
            where = "declarations" if v.index is None else f"entry {v.index}"
            what = f" field {v.field}" if v.field else ""
            lines.append(f"  {where}: {v.reason}{what}" + (f" ({v.component})" if v.component else ""))
        return "\n".join(lines)


@dataclass(frozen=True)
class CycleReport:
    """Shortest cycle of unlagged dependencies, as ``(producer, field, consumer)`` edges."""

    components: tuple
    edges: tuple

    def to_dict(self) -> dict:
        return {"cycle": list(self.components),
                "edges": [{"from": a, "field": f, "to": b} for a, f, b in self.edges]}

    def to_text(self) -> str:
        lines = ["unlagged dependency cycle: " + " -> ".join(self.components + self.components[:1])]
        for a, f, b in self.edges:
            lines.append(f"  {b} needs {f} from {a}")
        return "\n".join(lines)


def producers(decls) -> tuple[dict, list]:
    """Map field -> exporting component, plus any duplicate-producer violations."""
    owner: dict[str, str] = {}
    dups = []
    for d in decls:
        for f in sorted(d.exports):
            if f in owner and owner[f] != d.name:
                dups.append(Violation(None, f, DUPLICATE_PRODUCER, d.name))
            else:
                owner.setdefault(f, d.name)
    return owner, dups


def validate_sequence(seq: RunSequence, decls) -> ValidationReport:
    """Check that every unlagged import is produced and delivered before its consumer runs."""
    by_name = {d.name: d for d in decls}
    unlagged = {d.name: d.unlagged for d in decls}
    imported = {d.name: d.imported_fields() for d in decls}
    owner, violations = producers(decls)
    produced: set[str] = set()
    delivered: set[tuple[str, str]] = set()
    ran: set[str] = set()
    for idx, entry in enumerate(seq.entries):
        if isinstance(entry, Run):
            d = by_name.get(entry.component)
            if d is None:
                violations.append(Violation(idx, "", UNKNOWN_COMPONENT, entry.component))
                continue
            for f in unlagged[d.name]:
                if f not in owner:
                    violations.append(Violation(idx, f, UNKNOWN_FIELD, d.name))
                elif f not in produced:
                    violations.append(Violation(idx, f, CONSUMED_BEFORE_PRODUCED, d.name))
                elif (f, d.name) not in delivered:
                    violations.append(Violation(idx, f, CONSUMED_BEFORE_EXCHANGED, d.name))
            ran.add(d.name)
            produced.update(d.exports)
        elif isinstance(entry, Exchange):
            bad = [c for c in (entry.src, entry.dst) if c not in by_name]
            for c in bad:
                violations.append(Violation(idx, "", UNKNOWN_COMPONENT, c))
            if bad:
                continue
            for f in entry.fields:
                if owner.get(f) != entry.src or f not in imported[entry.dst]:
                    violations.append(Violation(idx, f, UNKNOWN_FIELD, f"{entry.src} -> {entry.dst}"))
                elif f in produced:
                    delivered.add((f, entry.dst))
        else:
            raise TypeError(f"not a run-sequence entry: {entry!r}")
    end = len(seq.entries)
    for d in decls:
        if d.name not in ran and unlagged[d.name]:
            violations.append(Violation(end, "", COMPONENT_NOT_RUN, d.name))
    return ValidationReport(violations)


def _check_decls(decls) -> dict:
    names = [d.name for d in decls]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise RunseqError(f"component {dup} declared twice")
    owner, dups = producers(decls)
    if dups:
        raise RunseqError(f"field {dups[0].field} exported by both {owner[dups[0].field]} and {dups[0].component}")
    for d in decls:
        for f, _ in sorted(d.imports):
            if f not in owner:
                raise RunseqError(f"{d.name} imports {f}, which no component exports")
    return owner


def dependency_edges(decls) -> dict:
    """Unlagged dependencies as ``{(producer, consumer): [fields]}``."""
    owner = _check_decls(decls)
    edges: dict[tuple[str, str], list[str]] = {}
    for d in decls:
        for f in d.unlagged:
            edges.setdefault((owner[f], d.name), []).append(f)
    return edges


def generate_sequence(decls, interval: int = 3600) -> RunSequence | CycleReport:
    """Topological run order (lexicographic tie-break) with exchanges after each producer."""
    owner = _check_decls(decls)
    edges = dependency_edges(decls)
    names = sorted(d.name for d in decls)
    succ = {n: set() for n in names}
    indeg = dict.fromkeys(names, 0)
    loops = sorted(a for a, b in edges if a == b)
    if loops:
        a = loops[0]
        return CycleReport((a,), ((a, edges[(a, a)][0], a),))
    for (a, b) in edges:
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    heap = [n for n in names if indeg[n] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for m in sorted(succ[n]):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(order) < len(names):
        cycle = shortest_cycle([n for n in names if n not in order], succ)
        ring = list(zip(cycle, cycle[1:] + cycle[:1]))
        return CycleReport(tuple(cycle), tuple((a, edges[(a, b)][0], b) for a, b in ring))
    by_name = {d.name: d for d in decls}
    entries = []
    for n in order:
        entries.append(Run(n))
        for m in names:
            if m == n:
                continue
            fields = sorted(f for f in by_name[m].imported_fields() if owner[f] == n)
            if fields:
                entries.append(Exchange(tuple(fields), n, m))
    return RunSequence(interval, tuple(entries))


def shortest_cycle(nodes, succ) -> list:
    """Shortest directed cycle through ``nodes`` (BFS from each; ties broken by name)."""
    best = None
    allowed = set(nodes)
    for start in sorted(nodes):
        prev = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            u = queue.popleft()
            for v in sorted(succ[u]):
                if v not in allowed:
                    continue
                if v == start:
                    found = u
                    break
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        if found is None:
            continue
        path = [found]
        while path[-1] != start:
            path.append(prev[path[-1]])
        path.reverse()
        if best is None or len(path) < len(best):
            best = path
    if best is None:
        raise ValueError("no cycle among the given nodes")
    return best


# text formats ----------------------------------------------------------------

_CLAUSE = re.compile(r"\b(exports|imports|lagged)\b")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _names(text: str, lineno: int, what: str) -> list[str]:
    items = [x.strip() for x in text.split(",")]
    for x in items:
        if not NAME.match(x):
            raise RunseqError(f"bad {what} name {x!r}", lineno)
    return items


def parse_components(text: str) -> list[ComponentDecl]:
    decls = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if not NAME.match(head):
            raise RunseqError(f"bad component name {head!r}", lineno)
        if head in seen:
            raise RunseqError(f"component {head} declared twice", lineno)
        seen.add(head)
        parts = _CLAUSE.split(rest.strip())
        if parts[0].strip():
            raise RunseqError(f"expected exports, imports or lagged, got {parts[0].strip()!r}", lineno)
        clauses: dict[str, list[str]] = {}
        for kw, body in zip(parts[1::2], parts[2::2]):
            if kw in clauses:
                raise RunseqError(f"repeated {kw} clause", lineno)
            if not body.strip():
                raise RunseqError(f"empty {kw} clause", lineno)
            clauses[kw] = _names(body, lineno, "field")
        both = set(clauses.get("imports", ())) & set(clauses.get("lagged", ()))
        if both:
            raise RunseqError(f"field {sorted(both)[0]} is both imported and lagged", lineno)
        decls.append(ComponentDecl.make(head, clauses.get("exports", ()), clauses.get("imports", ()),
                                        clauses.get("lagged", ())))
    return decls


def print_components(decls) -> str:
    lines = []
    for d in decls:
        parts = [d.name]
        if d.exports:
            parts.append("exports " + ",".join(sorted(d.exports)))
        if d.unlagged:
            parts.append("imports " + ",".join(d.unlagged))
        if d.lagged:
            parts.append("lagged " + ",".join(d.lagged))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


_EXCHANGE = re.compile(r"(\S+)\s*->\s*(\S+)\s*:\s*(.+)\Z")


def parse_run_sequence(text: str, decls=None) -> RunSequence:
    """Parse one ``@<seconds> ... @`` block; with ``decls``, reject unknown components."""
    known = None if decls is None else {d.name for d in decls}
    interval = None
    entries = []
    closed = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if closed:
            raise RunseqError("text after closing @", lineno)
        if interval is None:
            m = re.fullmatch(r"@\s*(\d+)", line)
            if not m:
                raise RunseqError("expected @<seconds> header", lineno)
            interval = int(m.group(1))
            if interval <= 0:
                raise RunseqError("coupling interval must be positive", lineno)
            continue
        if line == "@":
            closed = True
            continue
        m = _EXCHANGE.match(line)
        if m:
            src, dst = m.group(1), m.group(2)
            for c in (src, dst):
                _component(c, known, lineno)
            entries.append(Exchange(tuple(_names(m.group(3), lineno, "field")), src, dst))
        else:
            entries.append(Run(_component(line, known, lineno)))
    if interval is None:
        raise RunseqError("missing @<seconds> header")
    if not closed:
        raise RunseqError("missing closing @")
    return RunSequence(interval, tuple(entries))


def _component(name: str, known, lineno: int) -> str:
    if not NAME.match(name):
        raise RunseqError(f"bad component name {name!r}", lineno)
    if known is not None and name not in known:
        raise RunseqError(f"unknown component {name}", lineno)
    return name


def print_run_sequence(seq: RunSequence) -> str:
    lines = [f"@{seq.interval}"]
    for e in seq.entries:
        if isinstance(e, Run):
            lines.append(f"  {e.component}")
        else:
            lines.append(f"  {e.src} -> {e.dst} :{','.join(e.fields)}")
    lines.append("@")
    return "\n".join(lines) + "\n"
