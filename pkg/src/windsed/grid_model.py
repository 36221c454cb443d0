"""Deterministic dispatch instance: network data, generator parameters, loads,
and the sectioned case-file parser (docs/case_format.md)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class CaseFormatError(Exception):
    """Malformed case file; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Bus:
    id: int
    load: tuple  # MW demand per period, length T

    def __post_init__(self):
        if any(d < 0 for d in self.load):
            raise ValueError(f"bus {self.id}: negative load")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float  # per unit; susceptance is 1/reactance
    flow_min: float   # MW
    flow_max: float   # MW

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise ValueError("line endpoints must differ")
        if self.reactance <= 0:
            raise ValueError("reactance must be positive")
        if self.flow_min > self.flow_max:
            raise ValueError("flow_min exceeds flow_max")

    @property
    def susceptance(self) -> float:
        return 1.0 / self.reactance


@dataclass(frozen=True)
class ThermalGenerator:
    bus: int
    p_min: float
    p_max: float
    cost_const: float   # a_g, $ per on-period
    cost_linear: float  # b_g, $/MW
    cost_quad: float    # c_g, $/MW^2
    ramp_up: float
    ramp_down: float
    startup: float
    shutdown: float
    commitment: tuple   # binary, length T

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise ValueError("generator limits must satisfy 0 <= p_min <= p_max")
        if self.cost_quad < 0:
            raise ValueError("quadratic cost coefficient must be nonnegative")
        if min(self.ramp_up, self.ramp_down, self.startup, self.shutdown) < 0:
            raise ValueError("ramp and startup rates must be nonnegative")
        if any(x not in (0, 1) for x in self.commitment):
            raise ValueError("commitment entries must be 0/1")

    def quadratic_cost(self, p):
        return self.cost_const + self.cost_linear * p + self.cost_quad * p * p


@dataclass(frozen=True)
class RenewableSite:
    bus: int
    site_label: str
    nameplate: float  # MW


@dataclass(frozen=True)
class GridCase:
    buses: tuple
    lines: tuple
    generators: tuple
    renewable_sites: tuple
    periods: int
    shed_penalty: float = 5000.0  # $/MWh
    base_mva: float = 100.0

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("periods must be >= 1")
        if self.shed_penalty <= 0:
            raise ValueError("shed penalty must be positive")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bus id")
        idset = set(ids)
        for ln in self.lines:
            for b in (ln.from_bus, ln.to_bus):
                if b not in idset:
                    raise ValueError(f"line references unknown bus {b}")
        for g in self.generators:
            if g.bus not in idset:
                raise ValueError(f"generator references unknown bus {g.bus}")
            if len(g.commitment) != self.periods:
                raise ValueError("commitment vector length != periods")
        for s in self.renewable_sites:
            if s.bus not in idset:
                raise ValueError(f"renewable site references unknown bus {s.bus}")
        for b in self.buses:
            if len(b.load) != self.periods:
                raise ValueError(f"bus {b.id}: load vector length != periods")
        if not self._connected():
            warnings.warn("case network is not connected", stacklevel=2)

    def _connected(self):
        if not self.buses:
            return True
        adj = {b.id: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        seen = {self.buses[0].id}
        stack = [self.buses[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.buses)

    @property
    def reference_bus(self) -> int:
        """Lowest-id bus carrying a generator (thermal or renewable)."""
        gen_buses = {g.bus for g in self.generators} | {s.bus for s in self.renewable_sites}
        if not gen_buses:
            return self.buses[0].id
        return min(gen_buses)

    def bus_index(self) -> dict:
        return {b.id: k for k, b in enumerate(self.buses)}

    def total_load(self) -> float:
        return float(sum(sum(b.load) for b in self.buses))


@dataclass(frozen=True)
class PiecewiseLinearCost:
    """Convex piecewise-linear interpolant of the quadratic production cost."""

    breakpoints: tuple
    slopes: tuple      # one per segment, nondecreasing
    value_at_first: float

    def __call__(self, p):
        bp = self.breakpoints
        if not bp[0] - 1e-9 <= p <= bp[-1] + 1e-9:
            raise ValueError(f"power {p} outside [{bp[0]}, {bp[-1]}]")
        val = self.value_at_first
        for k, s in enumerate(self.slopes):
            seg = min(max(p - bp[k], 0.0), bp[k + 1] - bp[k])
            val += s * seg
        return val


def linearize_cost(gen: ThermalGenerator, segments: int = 3) -> PiecewiseLinearCost:
    """Secant interpolation of the quadratic cost at equally spaced breakpoints
    on [p_min, p_max]; slopes are nondecreasing because cost_quad >= 0."""
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if gen.p_max == gen.p_min:
        return PiecewiseLinearCost(
            (gen.p_min, gen.p_max), (gen.cost_linear,), gen.quadratic_cost(gen.p_min)
        )
    bp = np.linspace(gen.p_min, gen.p_max, segments + 1)
    vals = [gen.quadratic_cost(p) for p in bp]
    slopes = tuple(
        (vals[k + 1] - vals[k]) / (bp[k + 1] - bp[k]) for k in range(segments)
    )
    return PiecewiseLinearCost(tuple(bp.tolist()), slopes, vals[0])


# ---------------------------------------------------------------------------
# case file parsing (sectioned whitespace tables, '#' comments)

_SECTIONS = ("CASE", "BUS", "BRANCH", "GEN", "RENEWABLE", "COMMITMENT")


def parse_case(text: str) -> GridCase:
    """Parse the documented case format into a validated GridCase."""
    periods = None
    shed = 5000.0
    base_mva = 100.0
    bus_rows, branch_rows, gen_rows, ren_rows, commit_rows = [], [], [], [], []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        token = line.split()[0].upper()
        if token in _SECTIONS:
            section = token
            if token == "CASE":
                for kv in line.split()[1:]:
                    if "=" not in kv:
                        raise CaseFormatError(f"bad CASE option {kv!r}", lineno)
                    key, val = kv.split("=", 1)
                    key = key.upper()
                    try:
                        if key == "T":
                            periods = int(val)
                        elif key == "SHED_PENALTY":
                            shed = float(val)
                        elif key == "BASE_MVA":
                            base_mva = float(val)
                        else:
                            raise CaseFormatError(f"unknown CASE option {key}", lineno)
                    except ValueError as exc:
                        raise CaseFormatError(str(exc), lineno) from None
            continue
        if section is None:
            raise CaseFormatError("data before any section header", lineno)
        if section == "RENEWABLE":
            parts = line.split()
        else:
            try:
                parts = [float(tok) for tok in line.split()]
            except ValueError:
                raise CaseFormatError(f"non-numeric token in {section}", lineno) from None
        {
            "BUS": bus_rows, "BRANCH": branch_rows, "GEN": gen_rows,
            "RENEWABLE": ren_rows, "COMMITMENT": commit_rows, "CASE": [],
        }[section].append((lineno, parts))

    if periods is None:
        raise CaseFormatError("missing CASE section with T=<periods>")

    buses = []
    for lineno, row in bus_rows:
        if len(row) != 1 + periods:
            raise CaseFormatError(
                f"BUS row needs id plus {periods} load values, got {len(row)}", lineno)
        try:
            buses.append(Bus(int(row[0]), tuple(row[1:])))
        except ValueError as exc:
            raise CaseFormatError(str(exc), lineno) from None
    bus_ids = [b.id for b in buses]
    if len(set(bus_ids)) != len(bus_ids):
        dup = sorted({i for i in bus_ids if bus_ids.count(i) > 1})
        raise CaseFormatError(f"duplicate bus id {dup[0]}")
    idset = set(bus_ids)

    lines = []
    for lineno, row in branch_rows:
        if len(row) != 5:
            raise CaseFormatError("BRANCH row needs: from to x_pu fmin fmax", lineno)
        f, t, x, fmin, fmax = row
        if int(f) not in idset or int(t) not in idset:
            raise CaseFormatError(f"branch references unknown bus {int(f) if int(f) not in idset else int(t)}", lineno)
        try:
            lines.append(Line(int(f), int(t), x, fmin, fmax))
        except ValueError as exc:
            raise CaseFormatError(str(exc), lineno) from None

    commitments = {}
    for lineno, row in commit_rows:
        if len(row) != 1 + periods:
            raise CaseFormatError(
                f"COMMITMENT row needs gen index plus {periods} binaries", lineno)
        commitments[int(row[0])] = tuple(int(v) for v in row[1:])

    gens = []
    for k, (lineno, row) in enumerate(gen_rows):
        if len(row) != 10:
            raise CaseFormatError(
                "GEN row needs: bus pmin pmax a b c ramp_up ramp_down startup shutdown",
                lineno)
        bus = int(row[0])
        if bus not in idset:
            raise CaseFormatError(f"generator references unknown bus {bus}", lineno)
        commit = commitments.get(k, tuple([1] * periods))
        try:
            gens.append(ThermalGenerator(bus, *row[1:], commitment=commit))
        except ValueError as exc:
            raise CaseFormatError(str(exc), lineno) from None
    for gidx in commitments:
        if gidx < 0 or gidx >= len(gens):
            raise CaseFormatError(f"COMMITMENT references unknown generator {gidx}")

    sites = []
    for lineno, row in ren_rows:
        if len(row) != 3:
            raise CaseFormatError("RENEWABLE row needs: bus label nameplate_mw", lineno)
        bus = int(row[0])
        if bus not in idset:
            raise CaseFormatError(f"renewable site references unknown bus {bus}", lineno)
        sites.append(RenewableSite(bus, row[1], float(row[2])))
    labels = [s.site_label for s in sites]
    if len(set(labels)) != len(labels):
        raise CaseFormatError("duplicate renewable site label")

    return GridCase(tuple(buses), tuple(lines), tuple(gens), tuple(sites),
                    periods, shed, base_mva)


def serialize_case(case: GridCase) -> str:
    """Inverse of parse_case; numbers use repr so a reparse is bit-exact."""
    out = [f"CASE T={case.periods} SHED_PENALTY={case.shed_penalty!r} "
           f"BASE_MVA={case.base_mva!r}"]
    out.append("BUS")
    for b in case.buses:
        out.append(f"{b.id} " + " ".join(repr(float(v)) for v in b.load))
    out.append("BRANCH")
    for ln in case.lines:
        out.append(f"{ln.from_bus} {ln.to_bus} {float(ln.reactance)!r} "
                   f"{float(ln.flow_min)!r} {float(ln.flow_max)!r}")
    out.append("GEN")
    for g in case.generators:
        out.append(" ".join([str(g.bus)] + [
            repr(float(v)) for v in (g.p_min, g.p_max, g.cost_const,
                                     g.cost_linear, g.cost_quad, g.ramp_up,
                                     g.ramp_down, g.startup, g.shutdown)]))
    out.append("RENEWABLE")
    for s in case.renewable_sites:
        out.append(f"{s.bus} {s.site_label} {float(s.nameplate)!r}")
    out.append("COMMITMENT")
    for k, g in enumerate(case.generators):
        out.append(f"{k} " + " ".join(str(v) for v in g.commitment))
    return "\n".join(out) + "\n"


def load_case(path) -> GridCase:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())
