# -*- coding: utf-8 -*-

"""
CASE FILE PARSER
================

Plain-text case format, one section per table, whitespace-separated columns.
Lines starting with '#' and blank lines are ignored.

  [case]        key value            (name, base_mva, frequency_hz)
  [bus]         id type pd qd gs bs vm vmax vmin
  [branch]      from to r x b rate tap
  [gen]         bus pg pmax pmin qmax qmin H D xd xd' xq xq' Td0' Tq0'
  [renewable]   bus p q capacity
  [pmu]         bus [to_bus ...]      ('*' reports every incident line)

Units on disk: MW / MVAr / MVA for powers and ratings, per-unit impedances on
the system base, seconds for H and time constants, D in per-unit torque per
per-unit speed. Bus type is 1|PQ, 2|PV or 3|slack. A tap of 0 means 1.
In memory every power is per-unit (divided by base_mva) and angles are radians.
"""

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from errors import CaseFormatError, CaseValidationError

# ============================================================
# SCHEMA CONTRACT
# ============================================================

SECTION_COLUMNS = {
    "bus": ["id", "type", "pd", "qd", "gs", "bs", "vm", "vmax", "vmin"],
    "branch": ["from", "to", "r", "x", "b", "rate", "tap"],
    "gen": [
        "bus", "pg", "pmax", "pmin", "qmax", "qmin",
        "H", "D", "xd", "xd_prime", "xq", "xq_prime", "Td0_prime", "Tq0_prime",
    ],
    "renewable": ["bus", "p", "q", "capacity"],
}

BUS_TYPES = {"1": "PQ", "pq": "PQ", "2": "PV", "pv": "PV", "3": "slack", "slack": "slack"}

# ============================================================
# DOMAIN TYPES
# ============================================================


@dataclass(frozen=True)
class GeneratorParams:
    M: float
    D: float
    x_d: float
    x_d_prime: float
    x_q: float
    x_q_prime: float
    T_d0_prime: float
    T_q0_prime: float
    omega_0: float

    def check(self, label: str):
        positive = {
            "x_d": self.x_d, "x_d_prime": self.x_d_prime,
            "x_q": self.x_q, "x_q_prime": self.x_q_prime,
            "T_d0_prime": self.T_d0_prime, "T_q0_prime": self.T_q0_prime,
            "M": self.M, "omega_0": self.omega_0,
        }
        for name, value in positive.items():
            if not value > 0:
                raise CaseValidationError(f"{label}: {name} must be > 0, got {value}")
        if self.D < 0:
            raise CaseValidationError(f"{label}: D must be >= 0")
        if self.x_d < self.x_d_prime:
            raise CaseValidationError(f"{label}: x_d < x_d_prime")
        if self.x_q < self.x_q_prime:
            raise CaseValidationError(f"{label}: x_q < x_q_prime")


@dataclass(frozen=True)
class Bus:
    id: int
    type: str
    v_set: float
    p_load: float
    q_load: float
    g_shunt: float = 0.0
    b_shunt: float = 0.0
    v_max: float = 1.1
    v_min: float = 0.9
    is_zero_injection: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_shunt: float
    rating: float = 0.0
    tap: float = 1.0


@dataclass(frozen=True)
class Generator:
    bus: int
    p_set: float
    params: GeneratorParams
    p_min: float
    p_max: float
    q_min: float
    q_max: float


@dataclass(frozen=True)
class Renewable:
    bus: int
    p: float
    q: float
    capacity: float


@dataclass(frozen=True)
class PmuSite:
    bus: int
    # other endpoints of the lines whose current this PMU reports
    line_ends: tuple = ()


@dataclass(frozen=True)
class GridCase:
    name: str
    base_mva: float
    frequency_hz: float
    buses: tuple
    lines: tuple
    generators: tuple
    renewables: tuple = ()
    pmus: tuple = ()
    source_hash: str = field(default="", compare=False)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @property
    def bus_ids(self) -> list:
        return [b.id for b in self.buses]

    @property
    def bus_index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def pmu_buses(self) -> list:
        return [p.bus for p in self.pmus]

    @property
    def slack_index(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.type == "slack")

    @property
    def omega_0(self) -> float:
        return 2.0 * math.pi * self.frequency_hz

    def zero_injection_buses(self) -> set:
        return {b.id for b in self.buses if b.is_zero_injection}

# ============================================================
# TOKENIZING
# ============================================================


def _split_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise CaseFormatError(f"malformed section header '{line}'", line_no)
            current = line[1:-1].strip().lower()
            if current not in SECTION_COLUMNS and current not in ("case", "pmu"):
                raise CaseFormatError(f"unknown section [{current}]", line_no)
            if current in sections:
                raise CaseFormatError(f"duplicate section [{current}]", line_no)
            sections[current] = []
            continue
        if current is None:
            raise CaseFormatError("data before first section header", line_no)
        sections[current].append((line_no, line.split()))
    return sections


def _row_to_dict(section: str, line_no: int, tokens: list) -> dict:
    columns = SECTION_COLUMNS[section]
    if len(tokens) != len(columns):
        raise CaseFormatError(
            f"[{section}] expects {len(columns)} columns ({' '.join(columns)}), got {len(tokens)}",
            line_no,
        )
    row = {}
    for name, token in zip(columns, tokens):
        if section == "bus" and name == "type":
            key = token.lower()
            if key not in BUS_TYPES:
                raise CaseFormatError(f"unknown bus type '{token}'", line_no)
            row[name] = BUS_TYPES[key]
            continue
        try:
            row[name] = float(token)
        except ValueError:
            raise CaseFormatError(f"column '{name}' is not numeric: '{token}'", line_no) from None
    return row


def _as_id(value: float, line_no: int) -> int:
    if value != int(value):
        raise CaseFormatError(f"bus id must be an integer, got {value}", line_no)
    return int(value)

# ============================================================
# PARSER
# ============================================================


def parse_case(text: str) -> GridCase:
    sections = _split_sections(text)
    for required in ("bus", "gen"):
        if required not in sections:
            raise CaseFormatError(f"missing required section [{required}]")

    header = {"name": "case", "base_mva": "100", "frequency_hz": "60"}
    for line_no, tokens in sections.get("case", []):
        if len(tokens) != 2:
            raise CaseFormatError("[case] rows are 'key value'", line_no)
        header[tokens[0].lower()] = tokens[1]
    try:
        base = float(header["base_mva"])
        freq = float(header["frequency_hz"])
    except ValueError:
        raise CaseFormatError("[case] base_mva / frequency_hz must be numeric") from None
    if base <= 0 or freq <= 0:
        raise CaseValidationError("base_mva and frequency_hz must be positive")
    omega_0 = 2.0 * math.pi * freq

    bus_rows = [(n, _row_to_dict("bus", n, t)) for n, t in sections["bus"]]
    branch_rows = [(n, _row_to_dict("branch", n, t)) for n, t in sections.get("branch", [])]
    gen_rows = [(n, _row_to_dict("gen", n, t)) for n, t in sections["gen"]]
    ren_rows = [(n, _row_to_dict("renewable", n, t)) for n, t in sections.get("renewable", [])]

    seen = set()
    for line_no, row in bus_rows:
        bid = _as_id(row["id"], line_no)
        if bid in seen:
            raise CaseValidationError(f"duplicate bus id {bid} (line {line_no})")
        seen.add(bid)

    injecting = {_as_id(r["bus"], n) for n, r in gen_rows} | {_as_id(r["bus"], n) for n, r in ren_rows}

    buses = []
    for line_no, row in bus_rows:
        bid = int(row["id"])
        passive = (
            row["pd"] == 0 and row["qd"] == 0 and row["gs"] == 0 and row["bs"] == 0
            and bid not in injecting
        )
        buses.append(Bus(
            id=bid,
            type=row["type"],
            v_set=row["vm"],
            p_load=row["pd"] / base,
            q_load=row["qd"] / base,
            g_shunt=row["gs"] / base,
            b_shunt=row["bs"] / base,
            v_max=row["vmax"],
            v_min=row["vmin"],
            is_zero_injection=passive,
        ))

    lines = []
    for line_no, row in branch_rows:
        lines.append(Line(
            from_bus=_as_id(row["from"], line_no),
            to_bus=_as_id(row["to"], line_no),
            r=row["r"],
            x=row["x"],
            b_shunt=row["b"],
            rating=row["rate"] / base,
            tap=row["tap"] if row["tap"] != 0 else 1.0,
        ))

    generators = []
    for line_no, row in gen_rows:
        params = GeneratorParams(
            M=2.0 * row["H"] / omega_0,
            D=row["D"] / omega_0,
            x_d=row["xd"],
            x_d_prime=row["xd_prime"],
            x_q=row["xq"],
            x_q_prime=row["xq_prime"],
            T_d0_prime=row["Td0_prime"],
            T_q0_prime=row["Tq0_prime"],
            omega_0=omega_0,
        )
        generators.append(Generator(
            bus=_as_id(row["bus"], line_no),
            p_set=row["pg"] / base,
            params=params,
            p_min=row["pmin"] / base,
            p_max=row["pmax"] / base,
            q_min=row["qmin"] / base,
            q_max=row["qmax"] / base,
        ))

    renewables = [
        Renewable(
            bus=_as_id(row["bus"], line_no),
            p=row["p"] / base,
            q=row["q"] / base,
            capacity=row["capacity"] / base,
        )
        for line_no, row in ren_rows
    ]

    pmus = []
    for line_no, tokens in sections.get("pmu", []):
        try:
            bus = int(tokens[0])
            if len(tokens) == 2 and tokens[1] == "*":
                ends = ("*",)
            else:
                ends = tuple(int(t) for t in tokens[1:])
        except ValueError:
            raise CaseFormatError(f"[pmu] expects integer bus ids, got {tokens}", line_no) from None
        pmus.append(PmuSite(bus=bus, line_ends=ends))

    case = GridCase(
        name=header["name"],
        base_mva=base,
        frequency_hz=freq,
        buses=tuple(buses),
        lines=tuple(lines),
        generators=tuple(generators),
        renewables=tuple(renewables),
        pmus=tuple(_expand_pmu_lines(pmus, lines)),
        source_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    validate_case(case)
    return case


def _expand_pmu_lines(pmus: list, lines: list) -> list:
    expanded = []
    for site in pmus:
        if site.line_ends == ("*",):
            ends = []
            for ln in lines:
                if ln.from_bus == site.bus:
                    ends.append(ln.to_bus)
                elif ln.to_bus == site.bus:
                    ends.append(ln.from_bus)
            site = PmuSite(bus=site.bus, line_ends=tuple(ends))
        expanded.append(site)
    return expanded


def load_case(path: str | Path) -> GridCase:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_case(fh.read())

# ============================================================
# SEMANTIC VALIDATION
# ============================================================


def validate_case(case: GridCase):
    ids = set(case.bus_ids)

    slack = [b.id for b in case.buses if b.type == "slack"]
    if len(slack) != 1:
        raise CaseValidationError(f"exactly one slack bus required, found {len(slack)}: {slack}")

    for b in case.buses:
        if b.v_set <= 0:
            raise CaseValidationError(f"bus {b.id}: vm must be positive")
        if b.v_min < 0 or b.v_max < b.v_min:
            raise CaseValidationError(f"bus {b.id}: invalid voltage limits")

    for ln in case.lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in ids:
                raise CaseValidationError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus {end}")
        if ln.rating < 0:
            raise CaseValidationError(f"line {ln.from_bus}-{ln.to_bus}: negative rating")
        if ln.tap <= 0:
            raise CaseValidationError(f"line {ln.from_bus}-{ln.to_bus}: tap must be positive")

    for k, g in enumerate(case.generators):
        if g.bus not in ids:
            raise CaseValidationError(f"generator {k} references unknown bus {g.bus}")
        if g.p_max < 0 or g.p_max < g.p_min or g.q_max < g.q_min:
            raise CaseValidationError(f"generator at bus {g.bus}: invalid limits")
        g.params.check(f"generator at bus {g.bus}")

    slack_has_gen = any(g.bus == slack[0] for g in case.generators)
    if not slack_has_gen:
        raise CaseValidationError(f"slack bus {slack[0]} carries no generator")

    for r in case.renewables:
        if r.bus not in ids:
            raise CaseValidationError(f"renewable references unknown bus {r.bus}")
        if r.capacity < 0:
            raise CaseValidationError(f"renewable at bus {r.bus}: negative capacity")

    for site in case.pmus:
        if site.bus not in ids:
            raise CaseValidationError(f"PMU on unknown bus {site.bus}")
        for end in site.line_ends:
            if not any({ln.from_bus, ln.to_bus} == {site.bus, end} for ln in case.lines):
                raise CaseValidationError(f"PMU at bus {site.bus}: no line to bus {end}")
