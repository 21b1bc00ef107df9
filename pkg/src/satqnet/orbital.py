"""Circular-orbit constellation generation, propagation and visibility.

Satellites move on circular Keplerian orbits at a common altitude. Each
node is parameterized by an in-plane phase, a plane right ascension
(RAAN) and an inclination; the in-plane position is rotated into 3D by
the plane orientation. All distances are kilometres, angles radians,
times seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MU_EARTH_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6378.137

# fraction of the in-plane slot gap used as uniform phase jitter
DEFAULT_JITTER_FRAC = 0.1


class SpacingError(ValueError):
    """Raised when the requested minimum node spacing cannot be met."""


@dataclass(frozen=True)
class OrbitElements:
    """Orbital elements of a single node on a circular orbit."""

    altitude_km: float
    phase_rad: float
    plane_raan_rad: float
    inclination_rad: float
    angular_velocity_rad_s: float

    def __post_init__(self) -> None:
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be > 0, got {self.altitude_km}")
        if self.angular_velocity_rad_s <= 0:
            raise ValueError("angular_velocity_rad_s must be > 0")
        object.__setattr__(self, "phase_rad", self.phase_rad % (2.0 * math.pi))


@dataclass(frozen=True)
class ConstellationState:
    """Snapshot of node elements and instantaneous positions at one epoch."""

    nodes: tuple[OrbitElements, ...]
    positions_km: np.ndarray  # shape (N, 3)
    epoch_s: float
    earth_radius_km: float = EARTH_RADIUS_KM

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.positions_km):
            raise ValueError("positions count must equal node count")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class VisibilityGraph:
    """Undirected range-limited connectivity: edge (i, j) iff d_ij <= d_max."""

    edges: dict[tuple[int, int], float]  # (i, j) with i < j -> distance_km
    d_max_km: float

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges


def circular_orbit_rate(altitude_km: float, earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Angular velocity sqrt(mu / (r_E + h)^3) of a circular orbit, rad/s."""
    if altitude_km <= 0:
        raise ValueError("altitude_km must be > 0")
    r = earth_radius_km + altitude_km
    return math.sqrt(MU_EARTH_KM3_S2 / r**3)


def _plane_rotation(raan_rad: float, inclination_rad: float) -> np.ndarray:
    """Rotation matrix Rz(raan) @ Rx(inclination) mapping in-plane to 3D."""
    co, so = math.cos(raan_rad), math.sin(raan_rad)
    ci, si = math.cos(inclination_rad), math.sin(inclination_rad)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ci, -si], [0.0, si, ci]])
    rz = np.array([[co, -so, 0.0], [so, co, 0.0], [0.0, 0.0, 1.0]])
    return rz @ rx


def _positions(nodes: tuple[OrbitElements, ...], t: float) -> np.ndarray:
    pos = np.empty((len(nodes), 3))
    for k, el in enumerate(nodes):
        a = EARTH_RADIUS_KM + el.altitude_km
        u = el.angular_velocity_rad_s * t + el.phase_rad
        in_plane = np.array([a * math.cos(u), a * math.sin(u), 0.0])
        pos[k] = _plane_rotation(el.plane_raan_rad, el.inclination_rad) @ in_plane
    return pos


def build_constellation(
    n_nodes: int,
    altitude_km: float,
    inclination_rad: float,
    planes: int,
    min_spacing_km: float,
    rng: np.random.Generator,
    jitter_frac: float = DEFAULT_JITTER_FRAC,
    max_attempts: int = 1000,
) -> ConstellationState:
    """Distribute nodes over equally spaced planes with jittered phases.

    Nodes are assigned round-robin to ``planes`` planes with equally
    spaced RAANs; phases within a plane are evenly spaced plus a small
    uniform jitter. Each node is re-jittered up to ``max_attempts``
    times until it clears ``min_spacing_km`` from all previously placed
    nodes, otherwise :class:`SpacingError` is raised.
    """
    if not 1 <= n_nodes <= 1000:
        raise ValueError(f"n_nodes must be in 1..1000, got {n_nodes}")
    if planes < 1:
        raise ValueError("planes must be >= 1")
    if altitude_km <= 0:
        raise ValueError("altitude_km must be > 0")

    omega = circular_orbit_rate(altitude_km)
    per_plane = [n_nodes // planes + (1 if p < n_nodes % planes else 0) for p in range(planes)]

    nodes: list[OrbitElements] = []
    placed: list[np.ndarray] = []
    for p in range(planes):
        count = per_plane[p]
        if count == 0:
            continue
        raan = 2.0 * math.pi * p / planes
        gap = 2.0 * math.pi / count
        stagger = gap * p / planes  # offset successive planes to avoid lockstep
        rot = _plane_rotation(raan, inclination_rad)
        a = EARTH_RADIUS_KM + altitude_km
        for s in range(count):
            base = gap * s + stagger
            for attempt in range(max_attempts):
                phase = base + rng.uniform(-jitter_frac, jitter_frac) * gap
                u = phase % (2.0 * math.pi)
                cand = rot @ np.array([a * math.cos(u), a * math.sin(u), 0.0])
                if all(np.linalg.norm(cand - q) >= min_spacing_km for q in placed):
                    break
            else:
                raise SpacingError(
                    f"cannot place node {len(placed)} with spacing >= {min_spacing_km} km "
                    f"after {max_attempts} attempts; reduce n_nodes or min_spacing_km"
                )
            placed.append(cand)
            nodes.append(
                OrbitElements(
                    altitude_km=altitude_km,
                    phase_rad=u,
                    plane_raan_rad=raan,
                    inclination_rad=inclination_rad,
                    angular_velocity_rad_s=omega,
                )
            )

    state = ConstellationState(
        nodes=tuple(nodes), positions_km=np.array(placed), epoch_s=0.0
    )
    return state


def propagate(state: ConstellationState, t: float) -> ConstellationState:
    """Return a new snapshot with all positions advanced to elapsed time t.

    Pure: positions are recomputed from the orbital elements, never
    integrated incrementally, so identical inputs give identical output.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    return ConstellationState(
        nodes=state.nodes,
        positions_km=_positions(state.nodes, t),
        epoch_s=t,
        earth_radius_km=state.earth_radius_km,
    )


def pair_distance(state: ConstellationState, i: int, j: int) -> float:
    """Euclidean separation of nodes i and j in km."""
    n = state.n_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"node ids must be in 0..{n - 1}, got ({i}, {j})")
    if i == j:
        raise ValueError("pair_distance requires i != j")
    diff = state.positions_km[i] - state.positions_km[j]
    return float(np.linalg.norm(diff))


def visibility_graph(state: ConstellationState, d_max_km: float) -> VisibilityGraph:
    """All unordered pairs within d_max (inclusive), with their distances."""
    if d_max_km <= 0:
        raise ValueError("d_max_km must be > 0")
    pos = state.positions_km
    n = state.n_nodes
    edges: dict[tuple[int, int], float] = {}
    if n > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        iu, ju = np.triu_indices(n, k=1)
        for i, j, d in zip(iu.tolist(), ju.tolist(), dist[iu, ju].tolist()):
            if d <= d_max_km:
                edges[(i, j)] = d
    return VisibilityGraph(edges=edges, d_max_km=d_max_km)


def shell_volume_km3(
    orbit_radius_km: float, shell_thickness_km: float
) -> float:
    """Volume of the spherical shell of given total radial thickness."""
    if shell_thickness_km <= 0:
        raise ValueError("shell_thickness_km must be > 0")
    half = shell_thickness_km / 2.0
    outer = orbit_radius_km + half
    inner = max(orbit_radius_km - half, 0.0)
    return 4.0 / 3.0 * math.pi * (outer**3 - inner**3)


def volumetric_density(state: ConstellationState, shell_thickness_km: float) -> float:
    """Nodes per km^3 of the orbital shell centred at the orbit radius."""
    if state.n_nodes == 0:
        return 0.0
    radius = state.earth_radius_km + state.nodes[0].altitude_km
    return state.n_nodes / shell_volume_km3(radius, shell_thickness_km)
