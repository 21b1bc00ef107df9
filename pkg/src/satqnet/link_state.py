"""Per-edge dynamic state, bounded histories and dispersion statistics.

Each active link keeps its current sample plus a bounded FIFO of the
previous samples; deviation metrics compare the current value against
the mean of that history, so a fresh shock is measured against the
pre-shock baseline. The registry is single-writer per episode.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .channel import LinkSample

DEFAULT_WINDOW = 10
DEFAULT_TRUST_SIGMA = 0.01


class EmptyHistoryError(ValueError):
    """Raised when a query needs at least one recorded sample."""


class LinkState:
    """Dynamic state of one link (endpoints i < j)."""

    __slots__ = (
        "i",
        "j",
        "fidelity",
        "rate_bps",
        "trust",
        "transmittance",
        "fidelity_history",
        "rate_history",
        "excluded_until",
        "_updated",
    )

    def __init__(self, i: int, j: int, trust: float, window: int = DEFAULT_WINDOW):
        if not 0 <= trust <= 1:
            raise ValueError("trust must be in [0, 1]")
        if window < 1:
            raise ValueError("window must be >= 1")
        self.i, self.j = min(i, j), max(i, j)
        self.fidelity = 0.0
        self.rate_bps = 0.0
        self.trust = trust
        self.transmittance = 1.0
        self.fidelity_history: deque[float] = deque(maxlen=window)
        self.rate_history: deque[float] = deque(maxlen=window)
        self.excluded_until: float | None = None
        self._updated = False

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.i, self.j)

    @property
    def fidelity_avg(self) -> float:
        """Moving average of past fidelities (current value if none yet)."""
        if not self._updated:
            raise EmptyHistoryError(f"link {self.endpoints} has no samples")
        if not self.fidelity_history:
            return self.fidelity
        return math.fsum(self.fidelity_history) / len(self.fidelity_history)

    @property
    def rate_avg(self) -> float:
        if not self._updated:
            raise EmptyHistoryError(f"link {self.endpoints} has no samples")
        if not self.rate_history:
            return self.rate_bps
        return math.fsum(self.rate_history) / len(self.rate_history)

    @property
    def is_excluded(self) -> bool:
        return self.excluded_until is not None


def update_link(link: LinkState, sample: LinkSample, t: float) -> LinkState:
    """Replace the link's current sample, pushing the old one to history.

    The history window only ever holds samples older than the current
    one; the deque evicts beyond the window length automatically.
    """
    if link._updated:
        link.fidelity_history.append(link.fidelity)
        link.rate_history.append(link.rate_bps)
    link.fidelity = sample.fidelity
    link.rate_bps = sample.rate_bps
    link.transmittance = sample.transmittance
    link._updated = True
    return link


def deviation_flags(
    link: LinkState, eps_f: float, eps_r: float
) -> tuple[float, float, bool]:
    """Deviation of current fidelity/rate from their moving averages.

    Rate deviation is normalized by the average rate so the threshold is
    scale-free. Flagged only on strict threshold exceedance.
    """
    delta_f = abs(link.fidelity - link.fidelity_avg)
    r_avg = link.rate_avg
    denom = r_avg if r_avg > 0 else np.finfo(float).tiny
    delta_r = abs(link.rate_bps - r_avg) / denom
    return delta_f, delta_r, (delta_f > eps_f or delta_r > eps_r)


def evolve_trust(
    link: LinkState,
    rng: np.random.Generator,
    sigma_trust: float = DEFAULT_TRUST_SIGMA,
) -> LinkState:
    """Random-walk step of the trust coefficient, clamped to [0, 1]."""
    if sigma_trust < 0:
        raise ValueError("sigma_trust must be >= 0")
    nu = rng.standard_normal()
    link.trust = min(1.0, max(0.0, link.trust + sigma_trust * nu))
    return link


@dataclass(frozen=True)
class DispersionStats:
    """Network-wide spread of current link quality.

    sigma_f is the population standard deviation of fidelities; sigma_r
    is the coefficient of variation of rates (std/mean), dimensionless
    so the weight adaptation operates on O(1) quantities.
    """

    sigma_f: float
    sigma_r: float

    def __post_init__(self) -> None:
        if self.sigma_f < 0 or self.sigma_r < 0:
            raise ValueError("dispersion statistics must be >= 0")


def network_dispersion(links) -> DispersionStats:
    """Dispersion of current fidelities and rates over active links."""
    links = list(links)
    if not links:
        raise ValueError("network_dispersion requires at least one active link")
    f = np.array([l.fidelity for l in links])
    r = np.array([l.rate_bps for l in links])
    sigma_f = float(np.std(f))
    mean_r = float(np.mean(r))
    sigma_r = float(np.std(r)) / mean_r if mean_r > 0 else 0.0
    return DispersionStats(sigma_f=sigma_f, sigma_r=sigma_r)


def snapshot_rows(links, t: float, eps_f: float, eps_r: float) -> list[dict]:
    """Serialize link states as record rows (t, i, j, F, R, T, eta, flagged)."""
    rows = []
    for link in links:
        _, _, flagged = deviation_flags(link, eps_f, eps_r)
        rows.append(
            {
                "t": t,
                "i": link.i,
                "j": link.j,
                "fidelity": link.fidelity,
                "rate_bps": link.rate_bps,
                "trust": link.trust,
                "transmittance": link.transmittance,
                "flagged": flagged,
            }
        )
    return rows
