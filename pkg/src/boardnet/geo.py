"""Citycluster construction from firm coordinates.

City records in registry data are noisy: spelling variants of one city,
suburbs with their own names, and coordinates of varying precision.
Grouping nearby coordinate points with mean shift turns these into
stable "citycluster" nodes.  Clusters straddling a national border are
split per country afterwards.

Coordinates compare exactly after canonical rounding to 6 decimals
(~0.1 m), which is how distinct locations are identified.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError, SchemaError
from .ingest import FirmRecord, _parse_coordinate

__all__ = [
    "mean_shift", "cluster_cities", "split_border_clusters", "assign_firms",
    "load_gazetteer", "apply_gazetteer",
    "CityCluster", "ClusterAssignment", "UnassignedReason",
]

EARTH_RADIUS_KM = 6371.0088

# Cap pairwise-distance blocks at ~32 MB of float64.
_BLOCK_ENTRIES = 4_000_000


def _pairwise(a, b, metric):
    """Distance matrix between point sets a (r, 2) and b (n, 2)."""
    if metric == "euclidean":
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))
    if metric == "haversine":
        lat1 = np.radians(a[:, 0])[:, None]
        lat2 = np.radians(b[:, 0])[None, :]
        dlat = lat2 - lat1
        dlon = np.radians(b[:, 1])[None, :] - np.radians(a[:, 1])[:, None]
        h = np.sin(dlat / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2) ** 2
        return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0, 1)))
    raise ParameterError(f"unknown metric {metric!r}")


def _shift_points(points, bandwidth, metric, max_iter, tol):
    """Run flat-kernel mode seeking; returns converged position per point."""
    shifted = points.astype(np.float64).copy()
    active = np.ones(len(points), dtype=bool)
    block = max(1, _BLOCK_ENTRIES // max(1, len(points)))
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        for s in range(0, idx.size, block):
            rows = idx[s:s + block]
            dist = _pairwise(shifted[rows], points, metric)
            within = dist <= bandwidth
            counts = within.sum(axis=1)  # >= 1, each point sees itself
            means = (within @ points) / counts[:, None]
            moved = np.linalg.norm(means - shifted[rows], axis=1)
            shifted[rows] = means
            active[rows[moved < tol]] = False
    return shifted


def mean_shift(points, bandwidth, metric="euclidean", max_iter=300, tol=1e-7):
    """Flat-kernel mean shift over coordinate points.

    Every point seeds a mode; each mode repeatedly moves to the mean of
    all points within ``bandwidth`` until it moves less than ``tol`` or
    ``max_iter`` sweeps pass.  Converged modes within bandwidth/2 of an
    earlier mode merge into it (first match in input order), so the
    labeling is deterministic for a fixed input order.

    Returns (labels, modes): a mode index per point and the array of
    distinct mode positions.

    This is the classic density mode-seeking procedure of Fukunaga &
    Hostetler (1975); the flat kernel is the simplest variant.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ParameterError("points must be a non-empty (n, 2) array")
    if bandwidth <= 0:
        raise ParameterError(f"bandwidth must be positive, got {bandwidth}")

    shifted = _shift_points(points, bandwidth, metric, max_iter, tol)

    modes: list[np.ndarray] = []
    labels = np.empty(len(points), dtype=np.int64)
    for i, pos in enumerate(shifted):
        label = -1
        if modes:
            dist = _pairwise(pos[None, :], np.asarray(modes), metric)[0]
            hits = np.nonzero(dist <= bandwidth / 2)[0]
            if hits.size:
                label = int(hits[0])
        if label < 0:
            modes.append(pos)
            label = len(modes) - 1
        labels[i] = label
    return labels, np.asarray(modes)


class UnassignedReason(enum.Enum):
    NO_COORDINATES = "no_coordinates"


@dataclass
class CityCluster:
    cluster_id: int
    centroid: tuple[float, float]
    country: str
    members: list[tuple[str, str, tuple[float, float]]]  # (city name, country, point)

    @property
    def label(self):
        """Representative display name: lexicographically smallest member name."""
        return min(name for name, _, _ in self.members)

    def countries(self):
        return sorted({country for _, country, _ in self.members})


@dataclass
class ClusterAssignment:
    mapping: dict[str, int] = field(default_factory=dict)  # firm_id -> cluster_id
    unassigned: dict[str, UnassignedReason] = field(default_factory=dict)

    def __len__(self):
        return len(self.mapping) + len(self.unassigned)


def _centroid(points):
    arr = np.asarray(points, dtype=np.float64)
    lat, lon = arr.mean(axis=0)
    return (round(float(lat), 6), round(float(lon), 6))


def _dominant_country(members):
    counts: dict[str, int] = {}
    for _, country, _ in members:
        counts[country] = counts.get(country, 0) + 1
    best = max(counts.values())
    return min(c for c, k in counts.items() if k == best)


def _distinct_locations(firms):
    """Sorted distinct (name, country, point) tuples for coordinate-bearing firms."""
    seen = set()
    for firm in firms:
        if firm.coordinates is not None:
            seen.add((firm.city_name, firm.country, firm.coordinates))
    return sorted(seen)


def cluster_cities(firms, bandwidth: float = 0.1, metric: str = "euclidean"):
    """Group firm locations into cityclusters.

    Clustering runs over distinct (city name, country, point) tuples,
    one point per distinct location, so that the number of firms at an
    address cannot distort the density modes.  Firms without
    coordinates are reported unassigned.

    Returns (clusters, ClusterAssignment).  Clusters straddling a
    border are NOT split here; compose with split_border_clusters.
    """
    locations = _distinct_locations(firms)
    if locations:
        points = np.array([loc[2] for loc in locations], dtype=np.float64)
        labels, _ = mean_shift(points, bandwidth, metric=metric)
        clusters = []
        for cid in range(int(labels.max()) + 1):
            members = [locations[i] for i in np.nonzero(labels == cid)[0]]
            clusters.append(CityCluster(cid, _centroid([m[2] for m in members]),
                                        _dominant_country(members), members))
    else:
        clusters = []
    return clusters, assign_firms(firms, clusters)


def split_border_clusters(clusters):
    """Split multi-country clusters into one cluster per country.

    Single-country clusters keep their membership; all ids are
    renumbered contiguously in (original id, country) order and
    centroids are recomputed per side.
    """
    out = []
    for cluster in clusters:
        for country in cluster.countries():
            members = [m for m in cluster.members if m[1] == country]
            out.append(CityCluster(len(out), _centroid([m[2] for m in members]),
                                   country, members))
    return out


def load_gazetteer(path):
    """Read a `city,country,lat,lon` coordinate cache.

    The file is the hand-off point for an external geocoding client:
    the pipeline itself never performs network calls, it only consumes
    whatever coordinates the cache holds.  Keys match case-insensitively
    on the city name and country code; rows with unusable coordinates
    are skipped.
    """
    gazetteer = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["city", "country", "lat", "lon"]:
            raise SchemaError("gazetteer: expected header city,country,lat,lon")
        for row in reader:
            if len(row) != 4:
                continue
            point, _bad = _parse_coordinate(row[2], row[3])
            if point is not None:
                gazetteer[(row[0].strip().lower(), row[1].strip().upper())] = point
    return gazetteer


def apply_gazetteer(firms, gazetteer):
    """Fill missing firm coordinates from a gazetteer cache.

    Returns (firms, resolved count); firms with a cache hit are
    replaced by copies carrying the cached point, others pass through.
    """
    out = []
    resolved = 0
    for firm in firms:
        if firm.coordinates is None:
            point = gazetteer.get((firm.city_name.strip().lower(), firm.country))
            if point is not None:
                firm = FirmRecord(firm.firm_id, firm.name, firm.status,
                                  firm.city_name, firm.country, point)
                resolved += 1
        out.append(firm)
    return out, resolved


def assign_firms(firms, clusters) -> ClusterAssignment:
    """Map each firm to the cluster containing its distinct location."""
    by_location = {}
    for cluster in clusters:
        for member in cluster.members:
            by_location[member] = cluster.cluster_id
    assignment = ClusterAssignment()
    for firm in firms:
        if firm.coordinates is None:
            assignment.unassigned[firm.firm_id] = UnassignedReason.NO_COORDINATES
            continue
        key = (firm.city_name, firm.country, firm.coordinates)
        if key not in by_location:
            raise ContractError(f"firm {firm.firm_id} location not covered by clusters")
        assignment.mapping[firm.firm_id] = by_location[key]
    return assignment
