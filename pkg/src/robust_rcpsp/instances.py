"""Project instances, PSPLib I/O and budgeted uncertainty sets.

All time quantities (durations, deviations, start times, deadlines, big-M
values) are stored as integers in *half-units*: an original duration of 3 is
stored as 6.  With this scale a deviation of half the nominal duration is
always integral, so every comparison in the package is exact.

Node numbering follows PSPLib: node 0 is the dummy source ``s``, nodes
``1..n`` are the real jobs and node ``n + 1`` is the dummy sink ``t``.
"""
from __future__ import annotations

import heapq
import logging
import re
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

#: Number of internal time steps per original time unit.
HALF = 2


def to_half(value) -> int:
    """Convert a value in original units to half-units, refusing rounding."""
    scaled = Fraction(str(value) if isinstance(value, float) else value) * HALF
    if scaled.denominator != 1:
        raise ValueError(f"{value} is not representable on the half-unit grid")
    return int(scaled)


def to_units(value: int) -> int | float:
    """Convert half-units back to original units (int when exact)."""
    return value // HALF if value % HALF == 0 else value / HALF


class InstanceError(ValueError):
    """Raised for structurally invalid instances."""


class PsplibSyntaxError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class ProjectInstance:
    """An RCPSP instance ``((V, A, p), r, R)``.

    ``durations`` and ``demands`` are indexed over all nodes (dummies
    included, with zero entries); durations are in half-units.
    """

    n: int
    arcs: tuple[tuple[int, int], ...]
    durations: tuple[int, ...]
    demands: tuple[tuple[int, ...], ...]
    capacities: tuple[int, ...]
    name: str = "instance"
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(sorted({(int(i), int(j)) for i, j in self.arcs})))
        object.__setattr__(self, "durations", tuple(int(d) for d in self.durations))
        object.__setattr__(self, "demands", tuple(tuple(int(v) for v in row) for row in self.demands))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if len(self.durations) != self.n + 2:
            raise InstanceError(f"expected {self.n + 2} durations, got {len(self.durations)}")
        if len(self.demands) != self.n + 2:
            raise InstanceError(f"expected {self.n + 2} demand rows, got {len(self.demands)}")
        for row in self.demands:
            if len(row) != len(self.capacities):
                raise InstanceError("demand row length differs from resource count")
        for i, j in self.arcs:
            if not (0 <= i < self.n + 2 and 0 <= j < self.n + 2):
                raise InstanceError(f"arc ({i}, {j}) references an unknown node")

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.n + 1

    @property
    def num_nodes(self) -> int:
        return self.n + 2

    @property
    def nodes(self) -> range:
        return range(self.n + 2)

    @property
    def jobs(self) -> range:
        return range(1, self.n + 1)

    @property
    def num_resources(self) -> int:
        return len(self.capacities)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        succ: list[list[int]] = [[] for _ in self.nodes]
        for i, j in self.arcs:
            succ[i].append(j)
        return tuple(tuple(s) for s in succ)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        pred: list[list[int]] = [[] for _ in self.nodes]
        for i, j in self.arcs:
            pred[j].append(i)
        return tuple(tuple(p) for p in pred)

    def flow_amount(self, i: int, k: int) -> int:
        """``r~_ik``: the capacity for dummies, the demand otherwise."""
        if i == self.source or i == self.sink:
            return self.capacities[k]
        return self.demands[i][k]

    def with_durations(self, durations: Sequence[int]) -> "ProjectInstance":
        return replace(self, durations=tuple(durations), metadata=dict(self.metadata))

    def with_arcs(self, arcs: Iterable[tuple[int, int]]) -> "ProjectInstance":
        return replace(self, arcs=tuple(arcs), metadata=dict(self.metadata))


@dataclass(frozen=True)
class UncertaintySet:
    """Budgeted set: at most ``gamma`` jobs deviate, job ``i`` by ``dhat[i]``.

    ``dhat`` is indexed over all nodes with zeros at the dummies.
    """

    dhat: tuple[int, ...]
    gamma: int

    def __post_init__(self):
        object.__setattr__(self, "dhat", tuple(int(v) for v in self.dhat))
        if any(v < 0 for v in self.dhat):
            raise ValueError("deviations must be non-negative")
        if self.gamma < 0:
            raise ValueError("budget must be non-negative")

    @property
    def num_jobs(self) -> int:
        return len(self.dhat) - 2

    def with_gamma(self, gamma: int) -> "UncertaintySet":
        if not 0 <= gamma <= self.num_jobs:
            raise ValueError(f"gamma={gamma} outside [0, {self.num_jobs}]")
        return UncertaintySet(self.dhat, gamma)


def make_uncertainty(instance: ProjectInstance, dhat_jobs: Sequence[int], gamma: int) -> UncertaintySet:
    """Uncertainty set from per-job deviations in half-units (jobs 1..n)."""
    if len(dhat_jobs) != instance.n:
        raise ValueError(f"expected {instance.n} deviations, got {len(dhat_jobs)}")
    if not 0 <= gamma <= instance.n:
        raise ValueError(f"gamma={gamma} outside [0, {instance.n}]")
    return UncertaintySet((0, *dhat_jobs, 0), gamma)


def build_uncertainty(instance: ProjectInstance, alpha, gamma: int) -> UncertaintySet:
    """Deviation ``dhat_i = alpha * p_i`` with budget ``gamma``."""
    if not 0 <= gamma <= instance.n:
        raise ValueError(f"gamma={gamma} outside [0, {instance.n}]")
    a = Fraction(str(alpha) if isinstance(alpha, float) else alpha)
    if a < 0:
        raise ValueError("alpha must be non-negative")
    dhat = []
    for i in instance.jobs:
        v = a * instance.durations[i]
        if v.denominator != 1:
            raise ValueError(
                f"alpha={alpha} gives a deviation of {v / HALF} for job {i}, off the half-unit grid"
            )
        dhat.append(int(v))
    return UncertaintySet((0, *dhat, 0), gamma)


def inflate_instance(instance: ProjectInstance, delta: Sequence[int]) -> ProjectInstance:
    """Instance with durations ``p + delta``.

    ``delta`` is given per real job (length n) or per node (length n + 2,
    dummy entries must be zero).
    """
    if len(delta) == instance.n:
        delta = (0, *delta, 0)
    if len(delta) != instance.num_nodes:
        raise ValueError("deviation vector has the wrong length")
    if any(d < 0 for d in delta):
        raise ValueError("deviations must be non-negative")
    if delta[instance.source] or delta[instance.sink]:
        raise ValueError("dummy jobs cannot deviate")
    return instance.with_durations([p + d for p, d in zip(instance.durations, delta)])


def topological_order(num_nodes: int, arcs: Iterable[tuple[int, int]]) -> list[int]:
    """Kahn's algorithm; smallest available index first.  Raises on cycles."""
    succ: list[list[int]] = [[] for _ in range(num_nodes)]
    indeg = [0] * num_nodes
    for i, j in arcs:
        succ[i].append(j)
        indeg[j] += 1
    ready = [v for v in range(num_nodes) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != num_nodes:
        raise InstanceError("precedence graph contains a cycle")
    return order


def transitive_closure(instance: ProjectInstance) -> list[set[int]]:
    """``reach[i]`` is the set of nodes reachable from ``i`` by a non-empty path."""
    order = topological_order(instance.num_nodes, instance.arcs)
    reach: list[set[int]] = [set() for _ in instance.nodes]
    for v in reversed(order):
        for w in instance.successors[v]:
            reach[v].add(w)
            reach[v] |= reach[w]
    return reach


def validate(instance: ProjectInstance) -> list[Issue]:
    """Every violated instance invariant; an empty list means valid."""
    issues: list[Issue] = []
    s, t = instance.source, instance.sink
    for i, j in instance.arcs:
        if i == j:
            issues.append(Issue("self-loop", f"arc ({i}, {j})"))
    try:
        order = topological_order(instance.num_nodes, instance.arcs)
    except InstanceError:
        issues.append(Issue("cycle", "precedence graph contains a cycle"))
        order = None
    if instance.predecessors[s]:
        issues.append(Issue("source-indegree", f"source has predecessors {list(instance.predecessors[s])}"))
    if instance.successors[t]:
        issues.append(Issue("sink-outdegree", f"sink has successors {list(instance.successors[t])}"))
    if order is not None:
        from_s = _reachable(s, instance.successors)
        to_t = _reachable(t, instance.predecessors)
        for v in instance.jobs:
            if v not in from_s or v not in to_t:
                issues.append(Issue("off-path", f"job {v} is not on an s-t path"))
        if instance.n == 0 and t not in from_s:
            issues.append(Issue("off-path", "sink not reachable from source"))
    for v in (s, t):
        if instance.durations[v] != 0:
            issues.append(Issue("dummy-duration", f"dummy {v} has duration {instance.durations[v]}"))
        if any(instance.demands[v]):
            issues.append(Issue("dummy-demand", f"dummy {v} has non-zero demand"))
    for v in instance.nodes:
        if instance.durations[v] < 0:
            issues.append(Issue("negative-duration", f"node {v}"))
    for k, cap in enumerate(instance.capacities):
        if cap < 0:
            issues.append(Issue("negative-capacity", f"resource {k}"))
        for i in instance.jobs:
            r = instance.demands[i][k]
            if r < 0:
                issues.append(Issue("negative-demand", f"job {i}, resource {k}"))
            elif r > cap:
                issues.append(Issue("demand-exceeds-capacity", f"job {i} needs {r} of resource {k}, capacity {cap}"))
    return issues


def _reachable(start: int, adj) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


# ---------------------------------------------------------------------------
# PSPLib single-mode format

_PSPLIB_PARAMS = {
    # family -> (NC values, RF values, RS values); RS varies fastest
    "j30": ((1.5, 1.8, 2.1), (0.25, 0.5, 0.75, 1.0), (0.2, 0.5, 0.7, 1.0)),
    "j60": ((1.5, 1.8, 2.1), (0.25, 0.5, 0.75, 1.0), (0.2, 0.5, 0.7, 1.0)),
    "j90": ((1.5, 1.8, 2.1), (0.25, 0.5, 0.75, 1.0), (0.2, 0.5, 0.7, 1.0)),
    "j120": ((1.5, 1.8, 2.1), (0.25, 0.5, 0.75, 1.0), (0.1, 0.2, 0.3, 0.4, 0.5)),
}


def psplib_parameters(name: str) -> dict:
    """NC/RF/RS of a PSPLib instance from its file stem (e.g. ``j3020_7``)."""
    m = re.fullmatch(r"j(30|60|90|120)(\d+)_(\d+)", name)
    if not m:
        return {}
    family = f"j{m.group(1)}"
    param = int(m.group(2))
    ncs, rfs, rss = _PSPLIB_PARAMS[family]
    if not 1 <= param <= len(ncs) * len(rfs) * len(rss):
        return {}
    idx = param - 1
    rs = rss[idx % len(rss)]
    rf = rfs[(idx // len(rss)) % len(rfs)]
    nc = ncs[idx // (len(rss) * len(rfs))]
    return {"family": family, "parameter": param, "NC": nc, "RF": rf, "RS": rs}


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise PsplibSyntaxError(f"expected integers, got {line.strip()!r}", lineno) from None


def parse_psplib(text: str, name: str = "instance") -> ProjectInstance:
    """Parse a single-mode PSPLib ``.sm`` file given as text."""
    lines = text.splitlines()
    n_nodes = n_res = None
    prec_start = req_start = avail_line = None
    for no, line in enumerate(lines):
        low = line.lower()
        if low.startswith("jobs (incl. supersource/sink"):
            n_nodes = _ints(line.split(":", 1)[1], no + 1)[0]
        elif low.strip().startswith("- renewable"):
            n_res = _ints(line.split(":", 1)[1].split()[0], no + 1)[0]
        elif low.startswith("precedence relations"):
            prec_start = no + 2
        elif low.startswith("requests/durations"):
            req_start = no + 3
        elif low.startswith("resourceavailabilities"):
            avail_line = no + 2
    if n_nodes is None:
        raise PsplibSyntaxError("missing 'jobs (incl. supersource/sink)' header")
    if n_res is None:
        raise PsplibSyntaxError("missing renewable resource count")
    for label, pos in (("PRECEDENCE RELATIONS", prec_start), ("REQUESTS/DURATIONS", req_start),
                       ("RESOURCEAVAILABILITIES", avail_line)):
        if pos is None:
            raise PsplibSyntaxError(f"missing section {label}")
    if n_nodes < 2:
        raise PsplibSyntaxError("an instance needs at least the two dummy jobs")

    arcs = []
    for offset in range(n_nodes):
        no = prec_start + offset
        if no >= len(lines):
            raise PsplibSyntaxError("truncated precedence section", no + 1)
        row = _ints(lines[no], no + 1)
        if len(row) < 3 or row[0] != offset + 1:
            raise PsplibSyntaxError(f"malformed precedence row for job {offset + 1}", no + 1)
        if row[1] != 1:
            raise PsplibSyntaxError("multi-mode instances are not supported", no + 1)
        nsucc = row[2]
        succ = row[3:]
        if len(succ) != nsucc:
            raise PsplibSyntaxError(f"job {row[0]} declares {nsucc} successors, lists {len(succ)}", no + 1)
        for j in succ:
            if not 1 <= j <= n_nodes:
                raise PsplibSyntaxError(f"successor {j} of job {row[0]} out of range 1..{n_nodes}", no + 1)
            arcs.append((row[0] - 1, j - 1))

    durations = []
    demands = []
    for offset in range(n_nodes):
        no = req_start + offset
        if no >= len(lines):
            raise PsplibSyntaxError("truncated requests section", no + 1)
        row = _ints(lines[no], no + 1)
        if len(row) != 3 + n_res or row[0] != offset + 1:
            raise PsplibSyntaxError(f"malformed request row for job {offset + 1}", no + 1)
        durations.append(row[2] * HALF)
        demands.append(tuple(row[3:]))
    if avail_line >= len(lines):
        raise PsplibSyntaxError("truncated availability section", avail_line + 1)
    capacities = _ints(lines[avail_line], avail_line + 1)
    if len(capacities) != n_res:
        raise PsplibSyntaxError(f"expected {n_res} availabilities, got {len(capacities)}", avail_line + 1)

    # dummy rows are ignored; the corpus always has zeros there
    demands[0] = (0,) * n_res
    demands[-1] = (0,) * n_res
    meta = psplib_parameters(name)
    instance = ProjectInstance(
        n=n_nodes - 2, arcs=tuple(arcs), durations=tuple(durations), demands=tuple(demands),
        capacities=tuple(capacities), name=name, metadata=meta,
    )
    issues = validate(instance)
    soft = [i for i in issues if i.kind == "demand-exceeds-capacity"]
    hard = [i for i in issues if i.kind != "demand-exceeds-capacity"]
    if hard:
        raise InstanceError("; ".join(str(i) for i in hard))
    for issue in soft:
        warnings.warn(f"{name}: {issue}", stacklevel=2)
    return instance


def read_psplib(path) -> ProjectInstance:
    path = Path(path)
    return parse_psplib(path.read_text(), name=path.stem)


def to_psplib(instance: ProjectInstance) -> str:
    """Render as a single-mode PSPLib file (durations must be whole units)."""
    for v in instance.nodes:
        if instance.durations[v] % HALF:
            raise ValueError(f"duration of node {v} is not a whole number of units")
    n_nodes = instance.num_nodes
    K = instance.num_resources
    horizon = sum(instance.durations) // HALF
    star = "*" * 72
    out = [
        star,
        f"file with basedata            : {instance.name}.bas",
        "initial value random generator: 0",
        star,
        "projects                      :  1",
        f"jobs (incl. supersource/sink ):  {n_nodes}",
        f"horizon                       :  {horizon}",
        "RESOURCES",
        f"  - renewable                 :  {K}   R",
        "  - nonrenewable              :  0   N",
        "  - doubly constrained        :  0   D",
        star,
        "PROJECT INFORMATION:",
        "pronr.  #jobs rel.date duedate tardcost  MPM-Time",
        f"    1     {instance.n}      0        0        0        0",
        star,
        "PRECEDENCE RELATIONS:",
        "jobnr.    #modes  #successors   successors",
    ]
    for v in instance.nodes:
        succ = sorted(instance.successors[v])
        out.append(f"{v + 1:>4}        1{len(succ):>11}   " + "".join(f"{j + 1:>4}" for j in succ))
    out += [
        star,
        "REQUESTS/DURATIONS:",
        "jobnr. mode duration  " + "  ".join(f"R {k + 1}" for k in range(K)),
        "-" * 72,
    ]
    for v in instance.nodes:
        out.append(f"{v + 1:>3}      1{instance.durations[v] // HALF:>6}  "
                   + "".join(f"{r:>5}" for r in instance.demands[v]))
    out += [
        star,
        "RESOURCEAVAILABILITIES:",
        "  " + "  ".join(f"R {k + 1}" for k in range(K)),
        "  " + "".join(f"{c:>5}" for c in instance.capacities),
        star,
    ]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Canonical line-oriented format (see README, "Instance text format")

def dump_instance(instance: ProjectInstance, uncertainty: UncertaintySet | None = None) -> str:
    lines = [
        "# robust-rcpsp instance v1 (times in half-units)",
        f"name {instance.name}",
        f"jobs {instance.n}",
        f"resources {instance.num_resources}",
        "capacity " + " ".join(map(str, instance.capacities)),
    ]
    for v in instance.nodes:
        lines.append(f"node {v} {instance.durations[v]} " + " ".join(map(str, instance.demands[v])))
    for i, j in instance.arcs:
        lines.append(f"arc {i} {j}")
    if uncertainty is not None:
        lines.append("dhat " + " ".join(map(str, uncertainty.dhat)))
        lines.append(f"gamma {uncertainty.gamma}")
    return "\n".join(lines) + "\n"


def load_instance(text: str) -> tuple[ProjectInstance, UncertaintySet | None]:
    name = "instance"
    n = K = None
    caps: list[int] = []
    nodes: dict[int, tuple[int, tuple[int, ...]]] = {}
    arcs = []
    dhat = gamma = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "name":
                name = rest[0] if rest else name
            elif key == "jobs":
                n = int(rest[0])
            elif key == "resources":
                K = int(rest[0])
            elif key == "capacity":
                caps = [int(v) for v in rest]
            elif key == "node":
                vals = [int(v) for v in rest]
                nodes[vals[0]] = (vals[1], tuple(vals[2:]))
            elif key == "arc":
                arcs.append((int(rest[0]), int(rest[1])))
            elif key == "dhat":
                dhat = tuple(int(v) for v in rest)
            elif key == "gamma":
                gamma = int(rest[0])
            else:
                raise PsplibSyntaxError(f"unknown record {key!r}", no)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, PsplibSyntaxError):
                raise
            raise PsplibSyntaxError(f"malformed record {line!r}", no) from None
    if n is None or K is None:
        raise PsplibSyntaxError("missing 'jobs' or 'resources' record")
    if sorted(nodes) != list(range(n + 2)):
        raise PsplibSyntaxError("node records must cover 0..n+1")
    instance = ProjectInstance(
        n=n, arcs=tuple(arcs),
        durations=tuple(nodes[v][0] for v in range(n + 2)),
        demands=tuple(nodes[v][1] for v in range(n + 2)),
        capacities=tuple(caps), name=name, metadata=psplib_parameters(name),
    )
    unc = None
    if dhat is not None:
        unc = UncertaintySet(dhat, gamma or 0)
    return instance, unc


# ---------------------------------------------------------------------------
# Test fixtures used throughout the package

def chain3() -> tuple[ProjectInstance, UncertaintySet]:
    """Jobs 1, 2 in a chain s->1->2->t, p=(2,3), R=1, r=(1,1), dhat=(1,1)."""
    inst = ProjectInstance(
        n=2, arcs=((0, 1), (1, 2), (2, 3)), durations=(0, 4, 6, 0),
        demands=((0,), (1,), (1,), (0,)), capacities=(1,), name="CHAIN3",
    )
    return inst, make_uncertainty(inst, (2, 2), 1)


def par2() -> tuple[ProjectInstance, UncertaintySet]:
    """Jobs 1, 2 in parallel, p=(2,3), R=1, r=(1,1), dhat=(1,1)."""
    inst = ProjectInstance(
        n=2, arcs=((0, 1), (0, 2), (1, 3), (2, 3)), durations=(0, 4, 6, 0),
        demands=((0,), (1,), (1,), (0,)), capacities=(1,), name="PAR2",
    )
    return inst, make_uncertainty(inst, (2, 2), 1)
