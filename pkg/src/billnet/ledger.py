"""Bill/agent data model: parsing, validation, summaries and synthetic datasets.

The machine format is a two-file relational layout (``agents.csv`` +
``bills.csv``) with a small JSON region taxonomy.  Money is carried as integer
pence and interest as integer basis points so that no float ever touches a
ledger field.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import InfeasibleConfigError, ParseError

# Pre-decimal sterling: 12 pence to the shilling, 20 shillings to the pound.
PENCE_PER_POUND = 240

CATEGORIES = (
    "merchant_bank",
    "clearing_bank",
    "anglo_foreign_bank",
    "foreign_bank",
    "discount_house",
    "non_financial",
    "unknown",
)

AGENTS_HEADER = ["agent_id", "name", "category", "city", "region"]
BILLS_HEADER = [
    "bill_id",
    "date",
    "amount_pence",
    "maturity_days",
    "discount_rate_bp",
    "drawer_id",
    "acceptor_id",
    "discounter_id",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionTaxonomy:
    """Ordered region codes with display names plus a designated unknown code."""

    entries: tuple[tuple[str, str], ...]
    unknown_code: str = "unknown"

    def __post_init__(self):
        codes = [c for c, _ in self.entries]
        if len(set(codes)) != len(codes):
            raise ValueError("duplicate region codes in taxonomy")
        if self.unknown_code not in codes:
            raise ValueError(f"unknown code {self.unknown_code!r} missing from entries")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.entries)

    def name_of(self, code: str) -> str:
        for c, n in self.entries:
            if c == code:
                return n
        raise KeyError(code)

    @staticmethod
    def default() -> "RegionTaxonomy":
        return RegionTaxonomy(
            entries=(
                ("uk", "United Kingdom"),
                ("continental_europe", "Continental Europe"),
                ("usa_canada", "USA and Canada"),
                ("latin_america", "Latin America"),
                ("india_far_east", "India and the Far East"),
                ("africa", "Africa"),
                ("oceania", "Oceania"),
                ("rest_of_world", "Rest of the World"),
                ("unknown", "Unknown"),
            ),
            unknown_code="unknown",
        )

    def to_json(self) -> str:
        payload = {
            "regions": [{"code": c, "name": n} for c, n in self.entries],
            "unknown_code": self.unknown_code,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "RegionTaxonomy":
        try:
            payload = json.loads(text)
            entries = tuple((r["code"], r["name"]) for r in payload["regions"])
            unknown = payload["unknown_code"]
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad taxonomy JSON: {exc}") from exc
        return RegionTaxonomy(entries=entries, unknown_code=unknown)


@dataclass(frozen=True)
class AgentRecord:
    agent_id: str
    name: str
    category: str
    city: str | None
    region: str


@dataclass(frozen=True)
class BillRecord:
    bill_id: str
    date: dt.date
    amount_pence: int
    maturity_days: int
    discount_rate_bp: int
    drawer_id: str
    acceptor_id: str
    discounter_id: str


@dataclass(frozen=True)
class LedgerDataset:
    agents: tuple[AgentRecord, ...]
    bills: tuple[BillRecord, ...]
    taxonomy: RegionTaxonomy
    # Provenance is bookkeeping, not data: ignore it when comparing datasets.
    provenance: str = field(default="", compare=False)

    def agent_map(self) -> dict[str, AgentRecord]:
        return {a.agent_id: a for a in self.agents}


# ---------------------------------------------------------------------------
# Parsing / export
# ---------------------------------------------------------------------------


def _text(stream: IO) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    try:
        return io.TextIOWrapper(stream, encoding="utf-8", newline="")
    except AttributeError:  # already text-like (StringIO)
        return stream


def _check_header(row: list[str] | None, expected: list[str], what: str):
    if row is None:
        raise ParseError(f"{what}: empty file", line=1)
    if row != expected:
        raise ParseError(
            f"{what}: header must be exactly {','.join(expected)}, got {','.join(row)}",
            line=1,
        )


def _int_field(value: str, name: str, line: int, minimum: int = 0) -> int:
    try:
        n = int(value)
    except ValueError:
        raise ParseError(f"{name} is not an integer: {value!r}", line=line) from None
    if n < minimum:
        raise ParseError(f"{name} must be >= {minimum}, got {n}", line=line)
    return n


def parse_agents(stream: IO, taxonomy: RegionTaxonomy) -> tuple[AgentRecord, ...]:
    reader = csv.reader(_text(stream))
    rows = iter(reader)
    _check_header(next(rows, None), AGENTS_HEADER, "agents")
    agents: list[AgentRecord] = []
    seen: set[str] = set()
    known = set(taxonomy.codes)
    for line, row in enumerate(rows, start=2):
        if len(row) != len(AGENTS_HEADER):
            raise ParseError(f"agents: expected {len(AGENTS_HEADER)} fields, got {len(row)}", line=line)
        agent_id, name, category, city, region = row
        if not agent_id:
            raise ParseError("agents: empty agent_id", line=line)
        if agent_id in seen:
            raise ParseError(f"duplicate agent_id {agent_id!r}", line=line)
        if category not in CATEGORIES:
            raise ParseError(f"unknown category {category!r}", line=line)
        if region not in known:
            raise ParseError(f"unknown region code {region!r}", line=line)
        seen.add(agent_id)
        agents.append(AgentRecord(agent_id, name, category, city or None, region))
    return tuple(agents)


def parse_bills(stream: IO, agent_ids: set[str]) -> tuple[BillRecord, ...]:
    reader = csv.reader(_text(stream))
    rows = iter(reader)
    _check_header(next(rows, None), BILLS_HEADER, "bills")
    bills: list[BillRecord] = []
    seen: set[str] = set()
    for line, row in enumerate(rows, start=2):
        if len(row) != len(BILLS_HEADER):
            raise ParseError(f"bills: expected {len(BILLS_HEADER)} fields, got {len(row)}", line=line)
        bill_id, date_s, amount_s, maturity_s, rate_s, drawer, acceptor, discounter = row
        if not bill_id:
            raise ParseError("bills: empty bill_id", line=line)
        if bill_id in seen:
            raise ParseError(f"duplicate bill_id {bill_id!r}", line=line)
        try:
            date = dt.date.fromisoformat(date_s)
        except ValueError:
            raise ParseError(f"bad date {date_s!r} (want YYYY-MM-DD)", line=line) from None
        amount = _int_field(amount_s, "amount_pence", line)
        maturity = _int_field(maturity_s, "maturity_days", line)
        rate = _int_field(rate_s, "discount_rate_bp", line)
        for role, ref in (("drawer", drawer), ("acceptor", acceptor), ("discounter", discounter)):
            if not ref:
                raise ParseError(f"bill {bill_id}: empty {role}_id", line=line)
            if ref not in agent_ids:
                raise ParseError(
                    f"bill {bill_id}: {role}_id {ref!r} not in agents table", line=line
                )
        seen.add(bill_id)
        bills.append(BillRecord(bill_id, date, amount, maturity, rate, drawer, acceptor, discounter))
    return tuple(bills)


def parse_ledger(
    agents_file: IO,
    bills_file: IO,
    taxonomy: RegionTaxonomy,
    provenance: str = "parsed",
) -> LedgerDataset:
    """Parse the two-file relational format into a validated dataset.

    Raises ParseError (with a line number) on any malformed row, dangling
    reference, duplicate id or unknown region code.
    """
    agents = parse_agents(agents_file, taxonomy)
    bills = parse_bills(bills_file, {a.agent_id for a in agents})
    return LedgerDataset(agents=agents, bills=bills, taxonomy=taxonomy, provenance=provenance)


def write_agents(dataset: LedgerDataset, stream: IO[str]):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(AGENTS_HEADER)
    for a in dataset.agents:
        w.writerow([a.agent_id, a.name, a.category, a.city or "", a.region])


def write_bills(dataset: LedgerDataset, stream: IO[str]):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(BILLS_HEADER)
    for b in dataset.bills:
        w.writerow(
            [
                b.bill_id,
                b.date.isoformat(),
                b.amount_pence,
                b.maturity_days,
                b.discount_rate_bp,
                b.drawer_id,
                b.acceptor_id,
                b.discounter_id,
            ]
        )


def export_ledger(dataset: LedgerDataset) -> tuple[str, str]:
    """Render the dataset back to (agents_csv, bills_csv) text."""
    a, b = io.StringIO(), io.StringIO()
    write_agents(dataset, a)
    write_bills(dataset, b)
    return a.getvalue(), b.getvalue()


def load_dataset(agents_path, bills_path, taxonomy: RegionTaxonomy) -> LedgerDataset:
    with open(agents_path, "rb") as fa, open(bills_path, "rb") as fb:
        return parse_ledger(fa, fb, taxonomy, provenance=f"parsed:{agents_path}")


def save_dataset(dataset: LedgerDataset, out_dir) -> dict[str, str]:
    """Write agents.csv, bills.csv and taxonomy.json under ``out_dir``."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "agents": os.path.join(out_dir, "agents.csv"),
        "bills": os.path.join(out_dir, "bills.csv"),
        "taxonomy": os.path.join(out_dir, "taxonomy.json"),
    }
    agents_csv, bills_csv = export_ledger(dataset)
    with open(paths["agents"], "w", encoding="utf-8", newline="") as f:
        f.write(agents_csv)
    with open(paths["bills"], "w", encoding="utf-8", newline="") as f:
        f.write(bills_csv)
    with open(paths["taxonomy"], "w", encoding="utf-8") as f:
        f.write(dataset.taxonomy.to_json())
    return paths


# ---------------------------------------------------------------------------
# Validation rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    subject_id: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _rule_london_acceptor(dataset: LedgerDataset) -> list[Violation]:
    # Acceptors had to be reachable in London for collection at maturity, so
    # the rule pins their region to the UK code.
    agents = dataset.agent_map()
    offenders = sorted({b.acceptor_id for b in dataset.bills if agents[b.acceptor_id].region != "uk"})
    return [
        Violation("london-acceptor", a, f"acceptor {a} has region {agents[a].region!r}, expected 'uk'")
        for a in offenders
    ]


def _rule_positive_maturity(dataset: LedgerDataset) -> list[Violation]:
    return [
        Violation("positive-maturity", b.bill_id, f"bill {b.bill_id} has maturity_days {b.maturity_days}")
        for b in dataset.bills
        if b.maturity_days < 1
    ]


RULES = {
    "london-acceptor": _rule_london_acceptor,
    "positive-maturity": _rule_positive_maturity,
}


def validate_dataset(dataset: LedgerDataset, rules: Iterable[str]) -> ValidationReport:
    """Run the enabled rules; violations are report entries, never exceptions."""
    out: list[Violation] = []
    for name in rules:
        try:
            rule = RULES[name]
        except KeyError:
            raise ValueError(f"unknown validation rule {name!r}; known: {sorted(RULES)}") from None
        out.extend(rule(dataset))
    return ValidationReport(violations=tuple(out))


# ---------------------------------------------------------------------------
# Summary statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    bill_count: int
    mean_amount_pence: float
    mean_amount_pounds: float
    mean_maturity_days: float
    mean_rate_bp: float
    mean_rate_pct: float
    distinct_drawers: int
    distinct_acceptors: int
    distinct_discounters: int
    drawer_region_shares: dict[str, float]


def summarize(dataset: LedgerDataset) -> SummaryStats:
    if not dataset.bills:
        raise ValueError("cannot summarize an empty dataset")
    bills = dataset.bills
    n = len(bills)
    agents = dataset.agent_map()
    mean_amount = sum(b.amount_pence for b in bills) / n
    mean_maturity = sum(b.maturity_days for b in bills) / n
    mean_rate = sum(b.discount_rate_bp for b in bills) / n
    drawers = {b.drawer_id for b in bills}
    region_counts = {code: 0 for code in dataset.taxonomy.codes}
    for d in drawers:
        region_counts[agents[d].region] += 1
    total = len(drawers)
    shares = {code: 100.0 * c / total for code, c in region_counts.items()}
    return SummaryStats(
        bill_count=n,
        mean_amount_pence=mean_amount,
        mean_amount_pounds=mean_amount / PENCE_PER_POUND,
        mean_maturity_days=mean_maturity,
        mean_rate_bp=mean_rate,
        mean_rate_pct=mean_rate / 100.0,
        distinct_drawers=total,
        distinct_acceptors=len({b.acceptor_id for b in bills}),
        distinct_discounters=len({b.discounter_id for b in bills}),
        drawer_region_shares=shares,
    )


# ---------------------------------------------------------------------------
# Synthetic datasets
# ---------------------------------------------------------------------------

TXN_BIN_ORDER = ("1", "2", "3", "4", "5-9", "10+")

_PAPER_REGION_SHARES = {
    "uk": 13.56,
    "continental_europe": 17.50,
    "usa_canada": 20.40,
    "latin_america": 15.14,
    "india_far_east": 19.78,
    "africa": 5.46,
    "oceania": 2.11,
    "rest_of_world": 6.05,
    "unknown": 0.0,
}


@dataclass(frozen=True)
class SynthConfig:
    """Calibration knobs for the synthetic generator.

    ``multi_role_rate`` is the fraction of role memberships (drawer slots +
    acceptor slots + discounter slots) that belong to agents holding two
    roles; the planted two-role agent count is ``round(rate * slots)``.
    ``txn_bins`` fixes the drawer transaction-count histogram exactly; the
    "5-9" and "10+" bins leave per-drawer counts free for total matching.
    """

    bills: int
    drawers: int
    acceptors: int
    discounters: int
    multi_role_rate: float = 0.0
    txn_bins: Mapping[str, int] | None = None
    acceptor_home_weights: tuple[float, ...] = (0.55, 0.30, 0.15)
    discounter_home_weights: tuple[float, ...] = (0.30, 0.22, 0.14, 0.10, 0.08, 0.06, 0.04, 0.03, 0.02, 0.01)
    acceptor_skew: float = 1.3
    acceptor_skew_offset: float = 0.0
    discounter_skew: float = 2.8
    discounter_skew_offset: float = 4.0
    top_acceptor_drawers: int | None = None
    top_discounter_drawers: int | None = None
    region_shares: Mapping[str, float] | None = None
    mean_amount_pence: int = 1346 * PENCE_PER_POUND
    mean_maturity_days: int = 44
    mean_rate_bp: int = 417
    seed: int = 0

    @staticmethod
    def paper_1906(seed: int = 1906) -> "SynthConfig":
        """Demography-calibrated configuration for the 1906 re-discount ledger."""
        slots = 3554 + 1439 + 145
        return SynthConfig(
            bills=23_493,
            drawers=3_554,
            acceptors=1_439,
            discounters=145,
            multi_role_rate=168 / slots,
            txn_bins={"1": 2173, "2": 558, "3": 239, "4": 158, "5-9": 286, "10+": 140},
            top_acceptor_drawers=325,
            top_discounter_drawers=705,
            region_shares=dict(_PAPER_REGION_SHARES),
            seed=seed,
        )

    def to_json(self) -> str:
        payload = {k: (dict(v) if isinstance(v, Mapping) else list(v) if isinstance(v, tuple) else v)
                   for k, v in self.__dict__.items()}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "SynthConfig":
        payload = json.loads(text)
        known = set(SynthConfig.__dataclass_fields__)
        extra = set(payload) - known
        if extra:
            raise ParseError(f"unknown SynthConfig fields: {sorted(extra)}")
        for key in ("acceptor_home_weights", "discounter_home_weights"):
            if key in payload:
                payload[key] = tuple(payload[key])
        return SynthConfig(**payload)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


def _validate_config(cfg: SynthConfig, taxonomy: RegionTaxonomy) -> dict[str, float]:
    for name in ("bills", "drawers", "acceptors", "discounters"):
        if getattr(cfg, name) < 1:
            raise InfeasibleConfigError(f"{name} must be positive")
    if cfg.bills < cfg.drawers:
        raise InfeasibleConfigError(
            f"{cfg.bills} bills cannot cover {cfg.drawers} drawers (each drawer needs >= 1 bill)"
        )
    shares = dict(cfg.region_shares) if cfg.region_shares is not None else {
        code: (100.0 if code == taxonomy.unknown_code else 0.0) for code in taxonomy.codes
    }
    unknown_codes = set(shares) - set(taxonomy.codes)
    if unknown_codes:
        raise InfeasibleConfigError(f"region_shares has codes outside taxonomy: {sorted(unknown_codes)}")
    if any(v < 0 for v in shares.values()):
        raise InfeasibleConfigError("region shares must be non-negative")
    if abs(sum(shares.values()) - 100.0) > 1e-9:
        raise InfeasibleConfigError(f"region shares must sum to 100, got {sum(shares.values())!r}")
    for key in ("acceptor_home_weights", "discounter_home_weights"):
        w = getattr(cfg, key)
        if not w or any(x < 0 for x in w) or sum(w) <= 0:
            raise InfeasibleConfigError(f"{key} must be non-negative with positive sum")
    if cfg.txn_bins is not None:
        extra = set(cfg.txn_bins) - set(TXN_BIN_ORDER)
        if extra:
            raise InfeasibleConfigError(f"unknown txn bins: {sorted(extra)}")
        if any(v < 0 for v in cfg.txn_bins.values()):
            raise InfeasibleConfigError("txn bin counts must be non-negative")
        if sum(cfg.txn_bins.values()) != cfg.drawers:
            raise InfeasibleConfigError("txn bin counts must sum to the drawer count")
    for name in ("top_acceptor_drawers", "top_discounter_drawers"):
        v = getattr(cfg, name)
        if v is not None and not (1 <= v <= cfg.drawers):
            raise InfeasibleConfigError(f"{name} must be in [1, drawers]")
    if not (0.0 <= cfg.multi_role_rate < 1.0):
        raise InfeasibleConfigError("multi_role_rate must be in [0, 1)")
    if cfg.mean_amount_pence < 1 or cfg.mean_maturity_days < 1 or cfg.mean_rate_bp < 0:
        raise InfeasibleConfigError("amount/maturity means must be >= 1, rate >= 0")
    return shares


def _apportion(total: int, weights: list[float]) -> list[int]:
    """Largest-remainder apportionment of ``total`` across ``weights``."""
    s = sum(weights)
    quotas = [total * w / s for w in weights]
    base = [math.floor(q) for q in quotas]
    short = total - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def _bill_counts(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.txn_bins is None:
        counts = np.ones(cfg.drawers, dtype=np.int64)
        extra = cfg.bills - cfg.drawers
        if extra:
            probs = np.full(cfg.drawers, 1.0 / cfg.drawers)
            counts += rng.multinomial(extra, probs)
        return counts

    bins = {k: int(cfg.txn_bins.get(k, 0)) for k in TXN_BIN_ORDER}
    parts: list[np.ndarray] = []
    for label, value in (("1", 1), ("2", 2), ("3", 3), ("4", 4)):
        parts.append(np.full(bins[label], value, dtype=np.int64))
    parts.append(rng.integers(5, 10, size=bins["5-9"], dtype=np.int64))
    parts.append(10 + rng.geometric(0.02, size=bins["10+"]).astype(np.int64) - 1)
    counts = np.concatenate(parts)

    # Absorb the residual inside the elastic bins so the histogram stays exact.
    flex59 = np.flatnonzero((counts >= 5) & (counts <= 9))
    flex10 = np.flatnonzero(counts >= 10)
    elastic = np.concatenate([flex10, flex59])
    upper = np.concatenate([np.full(len(flex10), np.iinfo(np.int64).max), np.full(len(flex59), 9)])
    lower = np.concatenate([np.full(len(flex10), 10), np.full(len(flex59), 5)])
    delta = cfg.bills - int(counts.sum())
    room_up = math.inf if len(flex10) else int((9 - counts[flex59]).sum())
    room_down = int((counts[elastic] - lower).sum()) if len(elastic) else 0
    if delta > room_up or -delta > room_down:
        raise InfeasibleConfigError(
            f"cannot reach {cfg.bills} bills with the requested transaction bins"
        )
    i = 0
    while delta != 0:
        j = i % len(elastic)
        d = elastic[j]
        if delta > 0 and counts[d] < upper[j]:
            counts[d] += 1
            delta -= 1
        elif delta < 0 and counts[d] > lower[j]:
            counts[d] -= 1
            delta += 1
        i += 1
    rng.shuffle(counts)
    return counts


def _match_total(values: np.ndarray, total: int, floor: int, rng: np.random.Generator) -> np.ndarray:
    """Nudge integer draws so they sum to ``total`` while staying >= floor."""
    values = np.maximum(values, floor).astype(np.int64)
    if total < floor * len(values):
        raise InfeasibleConfigError(f"total {total} below floor {floor} x {len(values)}")
    delta = int(total - values.sum())
    if delta == 0:
        return values
    idx = rng.permutation(len(values))
    i = 0
    while delta != 0:
        j = idx[i % len(values)]
        if delta > 0:
            values[j] += 1
            delta -= 1
        elif values[j] > floor:
            values[j] -= 1
            delta += 1
        i += 1
    return values


class _RoleAssigner:
    """Fills per-drawer home sets for one principal role (acceptor/discounter).

    Guarantees: the planted top actor reaches exactly ``planted`` distinct
    drawers, every actor reaches at least one drawer, and no other actor
    exceeds ``planted - 1`` drawers.
    """

    def __init__(
        self,
        role_name: str,
        n_actors: int,
        actor_agents: np.ndarray,
        drawer_agents: np.ndarray,
        home_sizes: np.ndarray,
        planted: int | None,
        skew: float,
        skew_offset: float,
        rng: np.random.Generator,
    ):
        self.role_name = role_name
        self.n_actors = n_actors
        self.actor_agents = actor_agents
        self.drawer_agents = drawer_agents
        self.rng = rng
        n_drawers = len(home_sizes)
        homes: list[list[int]] = [[] for _ in range(n_drawers)]
        deg = np.zeros(n_actors, dtype=np.int64)

        top = 0 if planted else None
        cap = planted - 1 if planted else None

        if planted:
            eligible = np.flatnonzero(actor_agents[0] != drawer_agents)
            if len(eligible) < planted:
                raise InfeasibleConfigError(
                    f"cannot plant a top {role_name} reaching {planted} drawers"
                )
            chosen = rng.choice(eligible, size=planted, replace=False)
            for d in chosen:
                homes[d].append(0)
            deg[0] = planted

        slots: list[int] = []
        for d in range(n_drawers):
            slots.extend([d] * (int(home_sizes[d]) - len(homes[d])))
        slot_arr = np.array(slots, dtype=np.int64)
        self.rng.shuffle(slot_arr)
        slots = list(slot_arr)

        need_cover = [a for a in range(n_actors) if a != top]
        if len(slots) < len(need_cover):
            raise InfeasibleConfigError(
                f"not enough {role_name} home-set slots ({len(slots)}) to cover "
                f"{len(need_cover)} actors; widen the home-size weights"
            )
        # Random popularity ranking drives the skewed fill below.
        ranking = rng.permutation(need_cover) if need_cover else np.zeros(0, dtype=np.int64)
        weights = np.array([(r + 1.0 + skew_offset) ** -skew for r in range(len(ranking))])
        if len(weights):
            weights /= weights.sum()

        leftovers: list[int] = []
        ptr = 0
        for a in ranking:  # coverage pass: one drawer per actor
            placed = False
            while ptr < len(slots):
                d = slots[ptr]
                ptr += 1
                if actor_agents[a] == drawer_agents[d] or a in homes[d]:
                    leftovers.append(d)
                    continue
                homes[d].append(int(a))
                deg[a] += 1
                placed = True
                break
            if not placed:
                raise InfeasibleConfigError(f"ran out of slots covering {role_name}s")
        leftovers.extend(slots[ptr:])

        if len(ranking) and leftovers:
            draws = rng.choice(len(ranking), size=8 * len(leftovers), p=weights)
            k = 0
            for d in leftovers:
                placed = False
                while k < len(draws):
                    a = int(ranking[draws[k]])
                    k += 1
                    if (
                        (cap is None or deg[a] < cap)
                        and a not in homes[d]
                        and actor_agents[a] != drawer_agents[d]
                    ):
                        homes[d].append(a)
                        deg[a] += 1
                        placed = True
                        break
                if not placed:  # deterministic fallback scan
                    for a in ranking:
                        a = int(a)
                        if (
                            (cap is None or deg[a] < cap)
                            and a not in homes[d]
                            and actor_agents[a] != drawer_agents[d]
                        ):
                            homes[d].append(a)
                            deg[a] += 1
                            placed = True
                            break
                # An unfillable slot just shrinks that drawer's home set.

        self.homes = homes

    def bill_column(self, bill_counts: np.ndarray) -> np.ndarray:
        """Expand home sets to one actor index per bill (every member used)."""
        out = np.empty(int(bill_counts.sum()), dtype=np.int64)
        pos = 0
        for d, b in enumerate(bill_counts):
            b = int(b)
            home = self.homes[d]
            if not home:
                raise InfeasibleConfigError(
                    f"drawer {d} ended up with no eligible {self.role_name}"
                )
            col = list(home)
            if b > len(home):
                col.extend(self.rng.choice(home, size=b - len(home)))
            col = np.array(col[:b], dtype=np.int64)
            self.rng.shuffle(col)
            out[pos : pos + b] = col
            pos += b
        return out


def synthesize(cfg: SynthConfig, taxonomy: RegionTaxonomy | None = None) -> LedgerDataset:
    """Generate a calibrated dataset, deterministically from ``cfg`` (incl. seed)."""
    taxonomy = taxonomy or RegionTaxonomy.default()
    shares = _validate_config(cfg, taxonomy)
    rng = np.random.default_rng(cfg.seed)

    counts = _bill_counts(cfg, rng)

    # Role slots, with round(rate * slots) agents holding exactly two roles.
    nd, na, nx = cfg.drawers, cfg.acceptors, cfg.discounters
    slots = nd + na + nx
    overlap = int(round(cfg.multi_role_rate * slots))
    o_da = overlap // 2
    o_ax = (overlap - o_da) // 2
    o_dx = overlap - o_da - o_ax
    if o_da + o_dx > nd or o_da + o_ax > na or o_dx + o_ax > nx:
        raise InfeasibleConfigError("multi_role_rate too high for the role counts")

    drawer_agent = np.full(nd, -1, dtype=np.int64)
    acceptor_agent = np.full(na, -1, dtype=np.int64)
    discounter_agent = np.full(nx, -1, dtype=np.int64)

    d_merge = rng.choice(nd, size=o_da + o_dx, replace=False)
    a_merge = rng.choice(na, size=o_da + o_ax, replace=False)
    x_merge = rng.choice(nx, size=o_dx + o_ax, replace=False)

    next_agent = 0

    def new_agent() -> int:
        nonlocal next_agent
        next_agent += 1
        return next_agent - 1

    for i in range(nd):
        drawer_agent[i] = new_agent()
    for j, i in enumerate(d_merge[:o_da]):  # drawer+acceptor agents
        acceptor_agent[a_merge[j]] = drawer_agent[i]
    for j, i in enumerate(d_merge[o_da:]):  # drawer+discounter agents
        discounter_agent[x_merge[j]] = drawer_agent[i]
    for i in range(na):
        if acceptor_agent[i] < 0:
            acceptor_agent[i] = new_agent()
    for j, i in enumerate(a_merge[o_da:]):  # acceptor+discounter agents
        discounter_agent[x_merge[o_dx + j]] = acceptor_agent[i]
    for i in range(nx):
        if discounter_agent[i] < 0:
            discounter_agent[i] = new_agent()
    n_agents = next_agent

    # Drawer regions: largest-remainder apportionment of the share vector,
    # spending the UK quota on drawer+acceptor agents first so the optional
    # London-acceptor rule holds whenever the quota allows.
    codes = list(taxonomy.codes)
    quota = _apportion(nd, [shares.get(c, 0.0) for c in codes])
    region_pool: list[str] = []
    for c, q in zip(codes, quota):
        region_pool.extend([c] * q)
    pool = np.array(region_pool)
    rng.shuffle(pool)
    drawer_region = pool.astype(object)
    da_drawers = set(int(i) for i in d_merge[:o_da])
    free_uk = [j for j, c in enumerate(drawer_region) if c == "uk" and j not in da_drawers]
    for i in sorted(da_drawers):
        if drawer_region[i] == "uk" or not free_uk:
            continue
        j = free_uk.pop()
        drawer_region[i], drawer_region[j] = drawer_region[j], drawer_region[i]

    # Agent records.
    agent_region = np.full(n_agents, "", dtype=object)
    agent_city = np.full(n_agents, None, dtype=object)
    agent_category = np.full(n_agents, "", dtype=object)

    drawer_cats = rng.choice(["non_financial", "unknown"], size=nd, p=[0.9, 0.1])
    acceptor_cats = rng.choice(
        ["merchant_bank", "clearing_bank", "anglo_foreign_bank", "foreign_bank", "non_financial", "unknown"],
        size=na,
        p=[0.06, 0.03, 0.04, 0.05, 0.72, 0.10],
    )
    discounter_cats = rng.choice(
        ["clearing_bank", "anglo_foreign_bank", "foreign_bank", "discount_house", "merchant_bank", "non_financial"],
        size=nx,
        p=[0.02, 0.10, 0.01, 0.13, 0.30, 0.44],
    )
    is_drawer_agent = np.zeros(n_agents, dtype=bool)
    is_drawer_agent[drawer_agent] = True
    for i in range(nd):
        g = drawer_agent[i]
        agent_region[g] = drawer_region[i]
        agent_category[g] = drawer_cats[i]
    for i in range(na):
        g = acceptor_agent[i]
        if not is_drawer_agent[g]:
            agent_region[g] = "uk"
        agent_city[g] = "London"
        agent_category[g] = acceptor_cats[i]
    for i in range(nx):
        g = discounter_agent[i]
        if not is_drawer_agent[g] and agent_city[g] is None:
            agent_region[g] = "uk"
            agent_city[g] = "London"
        agent_category[g] = discounter_cats[i]
    # Drawer+acceptor agents keep their apportioned region; the preferential
    # UK swap above makes that region "uk" whenever the quota allows, which
    # keeps the optional London-acceptor rule satisfiable without bending the
    # drawer region shares.

    width = len(str(n_agents))
    agent_ids = np.array([f"A{idx + 1:0{width}d}" for idx in range(n_agents)])
    agents = tuple(
        AgentRecord(
            agent_id=agent_ids[g],
            name=f"House {agent_ids[g]}",
            category=str(agent_category[g]),
            city=agent_city[g],
            region=str(agent_region[g]),
        )
        for g in range(n_agents)
    )

    # Home sets and per-bill role columns.
    acc_w = np.array(cfg.acceptor_home_weights, dtype=float)
    acc_sizes = rng.choice(np.arange(1, len(acc_w) + 1), size=nd, p=acc_w / acc_w.sum())
    acc_sizes = np.minimum(acc_sizes, counts)
    dis_w = np.array(cfg.discounter_home_weights, dtype=float)
    dis_sizes = rng.choice(np.arange(1, len(dis_w) + 1), size=nd, p=dis_w / dis_w.sum())
    dis_sizes = np.minimum(dis_sizes, counts)

    acceptor_assign = _RoleAssigner(
        "acceptor",
        na,
        drawer_agents=drawer_agent,
        actor_agents=acceptor_agent,
        home_sizes=acc_sizes,
        planted=cfg.top_acceptor_drawers,
        skew=cfg.acceptor_skew,
        skew_offset=cfg.acceptor_skew_offset,
        rng=rng,
    )
    discounter_assign = _RoleAssigner(
        "discounter",
        nx,
        drawer_agents=drawer_agent,
        actor_agents=discounter_agent,
        home_sizes=dis_sizes,
        planted=cfg.top_discounter_drawers,
        skew=cfg.discounter_skew,
        skew_offset=cfg.discounter_skew_offset,
        rng=rng,
    )
    bill_acceptor = acceptor_assign.bill_column(counts)
    bill_discounter = discounter_assign.bill_column(counts)

    n_bills = cfg.bills
    amounts = rng.lognormal(mean=0.0, sigma=1.0, size=n_bills)
    amounts = np.rint(amounts * (cfg.mean_amount_pence * n_bills / amounts.sum())).astype(np.int64)
    amounts = _match_total(amounts, cfg.mean_amount_pence * n_bills, floor=1, rng=rng)
    maturities = _match_total(
        rng.poisson(cfg.mean_maturity_days, size=n_bills),
        cfg.mean_maturity_days * n_bills,
        floor=1,
        rng=rng,
    )
    rates = _match_total(
        rng.poisson(cfg.mean_rate_bp, size=n_bills),
        cfg.mean_rate_bp * n_bills,
        floor=0,
        rng=rng,
    )
    day_offsets = rng.integers(0, 365, size=n_bills)
    base_date = dt.date(1906, 1, 1)

    bwidth = len(str(n_bills))
    bills: list[BillRecord] = []
    pos = 0
    for d in range(nd):
        for _ in range(int(counts[d])):
            bills.append(
                BillRecord(
                    bill_id=f"B{pos + 1:0{bwidth}d}",
                    date=base_date + dt.timedelta(days=int(day_offsets[pos])),
                    amount_pence=int(amounts[pos]),
                    maturity_days=int(maturities[pos]),
                    discount_rate_bp=int(rates[pos]),
                    drawer_id=agent_ids[drawer_agent[d]],
                    acceptor_id=agent_ids[acceptor_agent[bill_acceptor[pos]]],
                    discounter_id=agent_ids[discounter_agent[bill_discounter[pos]]],
                )
            )
            pos += 1

    return LedgerDataset(
        agents=agents,
        bills=tuple(bills),
        taxonomy=taxonomy,
        provenance=f"synth:{cfg.digest()}",
    )
