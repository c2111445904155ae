"""Synthetic firm registries with planted geographic community structure.

Generates firms scattered around planted cities, cities scattered
around community centers, and interlocks drawn independently per firm
pair: probability ``p_in`` inside a community, ``p_out`` across.  Every
planted interlock is carried by a fresh two-position person, so the
projected edge weights are exactly Bernoulli and easy to reason about.
Optional injections (mega-directors, majority-ownership links, firms
with missing coordinates) exercise the ingest filters end to end.

All randomness flows from independent substreams of one seed, so the
base data is byte-identical across runs and unaffected by toggling the
injections.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .community import Partition, canonical_membership, normalized_mutual_information
from .errors import ContractError, ParameterError
from .ingest import (FirmRecord, FirmStatus, PositionRecord, PositionStatus,
                     OwnershipLink, PositionTable, parse_role,
                     FIRMS_HEADER, POSITIONS_HEADER, OWNERSHIP_HEADER)

__all__ = ["PlantedConfig", "SyntheticDataset", "generate_planted", "score_recovery"]

# Natural-language role strings, cycled across generated positions.
ROLE_STRINGS = [
    "chief executive officer", "highest executive", "supervisory board",
    "executive board", "board of directors", "committee member",
]

# Above this many firm pairs, switch from exact per-pair Bernoulli draws
# to binomial counts plus uniform pair sampling (same seed determinism,
# approximate tie counts).
_BERNOULLI_PAIR_LIMIT = 4_500_000


@dataclass
class PlantedConfig:
    communities: int = 4
    cities_per_community: int = 10
    firms_per_city: int = 10
    p_in: float = 0.1
    p_out: float = 0.01
    directors_per_firm: int = 1
    mega_directors: int = 0
    mega_director_positions: int = 101
    ownership_ties: int = 0
    ownership_fraction: float | None = None  # None: uniform in (0.5, 1]
    missing_coordinate_firms: int = 0
    city_size_skew: float = 0.0  # 0 = equal cities; >0 = power-law decay by city rank
    community_spread: float = 2.0  # sigma (degrees) of city centers around community center
    city_spread: float = 0.02  # sigma (degrees) of firm locations around city center
    min_city_separation: float = 0.5  # degrees; keeps planted cities resolvable
    centers: list | None = None  # community centers; default = grid 10 degrees apart
    countries: list | None = None  # one ISO-like code per community
    seed: int = 0

    def validate(self):
        if self.communities < 1 or self.cities_per_community < 1 or self.firms_per_city < 1:
            raise ParameterError("community, city and firm counts must be >= 1")
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        for name in ("directors_per_firm", "mega_directors", "ownership_ties",
                     "missing_coordinate_firms"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.mega_directors and self.mega_director_positions < 2:
            raise ParameterError("mega directors need at least 2 positions")
        if self.ownership_fraction is not None and not 0.0 <= self.ownership_fraction <= 1.0:
            raise ParameterError("ownership_fraction must be in [0, 1]")
        if self.community_spread <= 0 or self.city_spread < 0 or self.min_city_separation < 0:
            raise ParameterError("geographic spreads must be positive")
        if self.city_size_skew < 0:
            raise ParameterError("city_size_skew must be >= 0")
        if self.centers is not None and len(self.centers) != self.communities:
            raise ParameterError("centers must list one point per community")
        if self.countries is not None and len(self.countries) != self.communities:
            raise ParameterError("countries must list one code per community")

    def as_dict(self):
        out = dict(self.__dict__)
        if out["centers"] is not None:
            out["centers"] = [list(c) for c in out["centers"]]
        return out


def _default_centers(count):
    cols = int(np.ceil(np.sqrt(count)))
    return [((i // cols) * 10.0 - 40.0, (i % cols) * 10.0 - 40.0) for i in range(count)]


def _default_countries(count):
    return [chr(65 + i // 26) + chr(65 + i % 26) for i in range(count)]


def _city_sizes(config):
    base = config.firms_per_city
    sizes = []
    for rank in range(config.cities_per_community):
        sizes.append(max(1, round(base * (rank + 1) ** -config.city_size_skew)))
    return sizes


def _place_cities(config, rng):
    """City centers, resampled until pairwise separation holds."""
    centers = config.centers or _default_centers(config.communities)
    placed = []
    for c in range(config.communities):
        base = np.asarray(centers[c], dtype=np.float64)
        for _ in range(config.cities_per_community):
            for _attempt in range(500):
                cand = base + rng.normal(0.0, config.community_spread, size=2)
                if not placed:
                    break
                gap = np.linalg.norm(np.asarray(placed) - cand, axis=1).min()
                if gap >= config.min_city_separation:
                    break
            else:
                raise ParameterError(
                    "could not place cities with the requested separation; "
                    "reduce cities_per_community or min_city_separation")
            placed.append(cand)
    return np.asarray(placed)


def _distinct_uniform_keys(rng, k, draw_batch):
    """First k distinct keys from repeated uniform draws (draw order kept)."""
    chosen = []
    seen = np.empty(0, dtype=np.int64)
    have = 0
    while have < k:
        cand = draw_batch(int((k - have) * 1.3) + 16)
        _, first = np.unique(cand, return_index=True)
        cand = cand[np.sort(first)]
        if seen.size:
            cand = cand[~np.isin(cand, seen)]
        take = cand[:k - have]
        chosen.append(take)
        seen = np.concatenate([seen, take])
        have += len(take)
    return np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)


def _sample_interlocks(comm_of_firm, p_in, p_out, rng):
    """Planted firm pairs (lo, hi index arrays), exact or sampled regime."""
    n = len(comm_of_firm)
    if n < 2 or (p_in == 0.0 and p_out == 0.0):
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    total_pairs = n * (n - 1) // 2

    if total_pairs <= _BERNOULLI_PAIR_LIMIT:
        iu, ju = np.triu_indices(n, 1)
        prob = np.where(comm_of_firm[iu] == comm_of_firm[ju], p_in, p_out)
        hit = rng.random(total_pairs) < prob
        return iu[hit].astype(np.int64), ju[hit].astype(np.int64)

    # Sampled regime: binomial counts per block, uniform distinct pairs.
    keys = []
    comms, starts = np.unique(comm_of_firm, return_index=True)
    bounds = np.append(starts, n)  # firms of one community are contiguous
    intra_total = 0
    for c in range(len(comms)):
        lo_b, hi_b = int(bounds[c]), int(bounds[c + 1])
        size = hi_b - lo_b
        block_pairs = size * (size - 1) // 2
        intra_total += block_pairs
        want = int(rng.binomial(block_pairs, p_in)) if block_pairs else 0
        if want:
            def draw_intra(batch, lo_b=lo_b, hi_b=hi_b):
                a = rng.integers(lo_b, hi_b, size=batch)
                b = rng.integers(lo_b, hi_b, size=batch)
                ok = a != b
                a, b = a[ok], b[ok]
                return np.minimum(a, b) * n + np.maximum(a, b)
            keys.append(_distinct_uniform_keys(rng, want, draw_intra))

    cross_pairs = total_pairs - intra_total
    want = int(rng.binomial(cross_pairs, p_out)) if cross_pairs else 0
    if want:
        def draw_cross(batch):
            a = rng.integers(0, n, size=batch)
            b = rng.integers(0, n, size=batch)
            ok = comm_of_firm[a] != comm_of_firm[b]
            a, b = a[ok], b[ok]
            return np.minimum(a, b) * n + np.maximum(a, b)
        keys.append(_distinct_uniform_keys(rng, want, draw_cross))

    if not keys:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    merged = np.sort(np.concatenate(keys))
    return merged // n, merged % n


@dataclass
class SyntheticDataset:
    config: PlantedConfig
    firms: list[FirmRecord]
    positions: list[PositionRecord]
    ownership: list[OwnershipLink]
    truth_city: dict[str, int]  # firm_id -> planted city
    truth_community: dict[int, int]  # city -> planted community
    city_names: dict[int, str]
    city_countries: dict[int, str]
    planted_pairs: list[tuple[str, str]]
    mega_person_ids: list[str] = field(default_factory=list)
    ownership_pairs: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_firms(self):
        return len(self.firms)

    @property
    def n_cities(self):
        return len(self.truth_community)

    def expected_position_table(self) -> PositionTable:
        """The position table ingest should produce: injections filtered out."""
        mega = set(self.mega_person_ids)
        return PositionTable.from_records(
            [rec for rec in self.positions if rec.person_id not in mega])

    def write(self, out_dir):
        """Write the five CSV artifacts; byte-identical for a fixed seed."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        def fmt(value):
            return "" if value is None else f"{value:.6f}"

        with open(out_dir / "firms.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(FIRMS_HEADER)
            for f in self.firms:
                lat, lon = f.coordinates if f.coordinates else (None, None)
                w.writerow([f.firm_id, f.name, f.status.value, f.city_name,
                            f.country, fmt(lat), fmt(lon)])
        with open(out_dir / "positions.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(POSITIONS_HEADER)
            role_text = {parse_role(s): s for s in ROLE_STRINGS}
            for p in self.positions:
                w.writerow([p.firm_id, p.person_id, role_text[p.role], p.status.value])
        with open(out_dir / "ownership.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(OWNERSHIP_HEADER)
            for link in self.ownership:
                w.writerow([link.parent_firm_id, link.child_firm_id, repr(link.fraction)])
        with open(out_dir / "truth_city.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["firm_id", "city_id"])
            for f in self.firms:
                w.writerow([f.firm_id, self.truth_city[f.firm_id]])
        with open(out_dir / "truth_community.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["city_id", "community_id"])
            for city in sorted(self.truth_community):
                w.writerow([city, self.truth_community[city]])


def generate_planted(config: PlantedConfig) -> SyntheticDataset:
    """Generate a synthetic dataset with known city and community labels."""
    config.validate()
    total_firms = config.communities * sum(_city_sizes(config))
    if total_firms < 2 and (config.p_in > 0 or config.p_out > 0):
        raise ParameterError("interlock probabilities need at least 2 firms")

    rng_geo, rng_edges, rng_mega, rng_own, rng_missing = \
        np.random.default_rng(config.seed).spawn(5)
    countries = config.countries or _default_countries(config.communities)
    city_centers = _place_cities(config, rng_geo)
    sizes = _city_sizes(config)

    firms: list[FirmRecord] = []
    truth_city: dict[str, int] = {}
    truth_community: dict[int, int] = {}
    city_names: dict[int, str] = {}
    city_countries: dict[int, str] = {}
    comm_of_firm = []
    city = 0
    for c in range(config.communities):
        for rank in range(config.cities_per_community):
            name = f"city{city:05d}"
            truth_community[city] = c
            city_names[city] = name
            city_countries[city] = countries[c]
            for _ in range(sizes[rank]):
                fid = f"F{len(firms):07d}"
                point = city_centers[city] + rng_geo.normal(0.0, config.city_spread, 2)
                firms.append(FirmRecord(fid, f"Firm {len(firms)}", FirmStatus.ACTIVE,
                                        name, countries[c],
                                        (round(float(point[0]), 6), round(float(point[1]), 6))))
                truth_city[fid] = city
                comm_of_firm.append(c)
            city += 1
    comm_of_firm = np.asarray(comm_of_firm, dtype=np.int64)

    if config.missing_coordinate_firms:
        if config.missing_coordinate_firms > total_firms:
            raise ParameterError("more missing-coordinate firms than firms")
        for idx in rng_missing.choice(total_firms, size=config.missing_coordinate_firms,
                                      replace=False):
            firms[int(idx)].coordinates = None

    lo, hi = _sample_interlocks(comm_of_firm, config.p_in, config.p_out, rng_edges)
    planted_pairs = [(firms[a].firm_id, firms[b].firm_id)
                     for a, b in zip(lo.tolist(), hi.tolist())]

    positions: list[PositionRecord] = []
    seq = 0

    def add(firm_id, person_id):
        nonlocal seq
        positions.append(PositionRecord(firm_id, person_id,
                                        parse_role(ROLE_STRINGS[seq % len(ROLE_STRINGS)]),
                                        PositionStatus.CURRENT))
        seq += 1

    for f in firms:
        for d in range(config.directors_per_firm):
            add(f.firm_id, f"P{len(positions):07d}")
    for i, (fa, fb) in enumerate(planted_pairs):
        person = f"D{i:07d}"
        add(fa, person)
        add(fb, person)

    mega_ids = []
    if config.mega_directors and config.mega_director_positions > total_firms:
        raise ParameterError(
            f"cannot inject a director with {config.mega_director_positions} positions "
            f"into {total_firms} firms")
    for i in range(config.mega_directors):
        person = f"M{i:03d}"
        mega_ids.append(person)
        for idx in rng_mega.choice(total_firms, size=config.mega_director_positions,
                                   replace=False):
            add(firms[int(idx)].firm_id, person)

    ownership: list[OwnershipLink] = []
    ownership_pairs: list[tuple[str, str]] = []
    if config.ownership_ties:
        if config.ownership_ties > len(planted_pairs):
            raise ParameterError("cannot inject more ownership ties than planted pairs")
        picks = rng_own.choice(len(planted_pairs), size=config.ownership_ties,
                               replace=False)
        for idx in picks:
            fa, fb = planted_pairs[int(idx)]
            if config.ownership_fraction is not None:
                fraction = config.ownership_fraction
            else:
                fraction = 0.5 + 0.5 * (1.0 - rng_own.random())  # (0.5, 1]
            ownership.append(OwnershipLink(fa, fb, float(fraction)))
            ownership_pairs.append((fa, fb))

    return SyntheticDataset(config, firms, positions, ownership, truth_city,
                            truth_community, city_names, city_countries,
                            planted_pairs, mega_ids, ownership_pairs)


@dataclass
class RecoveryScore:
    nmi: float
    exact_match: bool


def score_recovery(found: Partition, truth) -> RecoveryScore:
    """Compare a detected partition against ground-truth labels.

    ``truth`` maps every node of ``found`` to its planted community.
    Exact match means identical partitions up to community relabeling.
    """
    if set(found.node_ids) != set(truth):
        raise ContractError("partition and truth cover different node sets")
    truth_labels = canonical_membership([truth[node] for node in found.node_ids])
    found_labels = canonical_membership(found.membership)
    nmi = normalized_mutual_information(found_labels, truth_labels)
    return RecoveryScore(nmi, bool(np.array_equal(found_labels, truth_labels)))
