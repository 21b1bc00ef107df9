"""Free-space optical link budget and stochastic link quality models.

Deterministic loss terms (geometric spreading, atmospheric attenuation,
pointing, system) accumulate in dB; a zero-mean Gaussian fading term on
the dB scale turns total loss into a random transmittance. Loss then
maps to entanglement fidelity, photon rate and QBER.

All dB-to-linear conversions use the amplitude convention (divisor 20);
a power-convention switch (divisor 10) exists for sensitivity studies
and defaults off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# atmospheric regimes: name -> (attenuation dB, fading std)
REGIME_DEFAULTS: dict[str, tuple[float, float]] = {
    "clear_sky": (38.0, 0.02),
    "standard": (45.0, 0.05),
    "strong_turbulence": (52.0, 0.12),
}

COMPOSITE_SCATTER_FLOOR_DB = 1.5


class LossModel(str, Enum):
    """Atmospheric attenuation variants.

    The three variants are a synthetic monotone family (only their
    relative behaviour is meaningful, see README):

    - ``beer_lambert``: attenuation used as-is (absorption only).
    - ``turbulence_weighted``: attenuation scaled by (1 + sigma_fade),
      a fading-weighted mean excess loss.
    - ``composite``: attenuation scaled by (1 + sigma_fade / 2) plus a
      1.5 dB scattering floor.
    """

    BEER_LAMBERT = "beer_lambert"
    TURBULENCE_WEIGHTED = "turbulence_weighted"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class ChannelParams:
    """Static parameters of the optical channel model."""

    wavelength_m: float = 810e-9
    atm_loss_db: float = 45.0
    sigma_fade: float = 0.05
    pointing_error_rad: float = 1.2e-6
    divergence_rad: float = 8.1e-6
    system_loss_db: float = 3.7
    fidelity_base: float = 0.98  # F_0
    rate_base_bps: float = 1e6  # R_0
    fidelity_decay_per_db: float = 6.5e-4  # kappa
    loss_model: LossModel = LossModel.COMPOSITE
    db_power_convention: bool = False  # True -> divisor 10 instead of 20

    def __post_init__(self) -> None:
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be > 0")
        if self.sigma_fade < 0:
            raise ValueError("sigma_fade must be >= 0")
        if not 0 < self.fidelity_base <= 1:
            raise ValueError("fidelity_base must be in (0, 1]")
        if self.rate_base_bps <= 0:
            raise ValueError("rate_base_bps must be > 0")
        if self.fidelity_decay_per_db < 0:
            raise ValueError("fidelity_decay_per_db must be >= 0")
        for name in ("atm_loss_db", "system_loss_db", "pointing_error_rad"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.divergence_rad <= 0:
            raise ValueError("divergence_rad must be > 0")
        if not isinstance(self.loss_model, LossModel):
            object.__setattr__(self, "loss_model", LossModel(self.loss_model))

    @property
    def db_divisor(self) -> float:
        return 10.0 if self.db_power_convention else 20.0


@dataclass
class ClampStats:
    """Counts fading draws pushed back into (0, 1]."""

    count: int = 0


@dataclass(frozen=True)
class LinkSample:
    """One stochastic realization of a link's quality."""

    loss_total_db: float
    transmittance: float
    fidelity: float
    rate_bps: float
    qber: float

    def __post_init__(self) -> None:
        if not 0 < self.transmittance <= 1:
            raise ValueError("transmittance must be in (0, 1]")
        if not 0 <= self.fidelity <= 1:
            raise ValueError("fidelity must be in [0, 1]")
        if self.rate_bps < 0:
            raise ValueError("rate_bps must be >= 0")


def geometric_loss_db(d_km, wavelength_m: float):
    """Free-space geometric spreading loss 20*log10(4*pi*d / lambda) in dB."""
    d_km = np.asarray(d_km, dtype=float)
    if np.any(d_km <= 0):
        raise ValueError("distance must be > 0")
    if wavelength_m <= 0:
        raise ValueError("wavelength_m must be > 0")
    d_m = d_km * 1e3
    out = 20.0 * np.log10(4.0 * math.pi * d_m / wavelength_m)
    return float(out) if out.ndim == 0 else out


def pointing_loss_db(theta_p_rad: float, theta_div_rad: float) -> float:
    """Pointing loss 12 * (theta_p / theta_div)^2 in dB."""
    if theta_div_rad <= 0:
        raise ValueError("theta_div_rad must be > 0")
    if theta_p_rad < 0:
        raise ValueError("theta_p_rad must be >= 0")
    return 12.0 * (theta_p_rad / theta_div_rad) ** 2


def effective_atm_loss_db(params: ChannelParams) -> float:
    """Atmospheric attenuation after applying the loss-model variant."""
    a = params.atm_loss_db
    if params.loss_model is LossModel.BEER_LAMBERT:
        return a
    if params.loss_model is LossModel.TURBULENCE_WEIGHTED:
        return a * (1.0 + params.sigma_fade)
    return a * (1.0 + 0.5 * params.sigma_fade) + COMPOSITE_SCATTER_FLOOR_DB


def total_loss_db(d_km, params: ChannelParams):
    """Total link loss: geometric + atmospheric (variant) + pointing + system."""
    geo = geometric_loss_db(d_km, params.wavelength_m)
    point = pointing_loss_db(params.pointing_error_rad, params.divergence_rad)
    return geo + effective_atm_loss_db(params) + point + params.system_loss_db


def sample_transmittance(
    loss_total_db,
    sigma_fade: float,
    rng: np.random.Generator,
    clamp_stats: ClampStats | None = None,
    db_divisor: float = 20.0,
):
    """Draw eta = 10^(-(L + sigma*xi)/divisor) with xi ~ N(0, 1), in (0, 1].

    Accepts scalar or array loss; one independent draw per element.
    Draws that exceed 1 (possible when sigma*xi < -L) are clamped and
    counted in ``clamp_stats`` when given.
    """
    if sigma_fade < 0:
        raise ValueError("sigma_fade must be >= 0")
    loss = np.asarray(loss_total_db, dtype=float)
    xi = rng.standard_normal(loss.shape) if loss.ndim else rng.standard_normal()
    raw = 10.0 ** (-(loss + sigma_fade * xi) / db_divisor)
    clipped = np.minimum(raw, 1.0)
    # 10**x > 0 for any finite x; guard subnormal underflow to keep eta > 0
    clipped = np.maximum(clipped, 5e-324)
    if clamp_stats is not None:
        clamp_stats.count += int(np.count_nonzero(raw > 1.0))
    return float(clipped) if clipped.ndim == 0 else clipped


def link_fidelity(loss_total_db, params: ChannelParams):
    """Entanglement fidelity F_0 * exp(-kappa * L_tot), in (0, F_0]."""
    loss = np.asarray(loss_total_db, dtype=float)
    if np.any(loss < 0):
        raise ValueError("loss_total_db must be >= 0")
    out = params.fidelity_base * np.exp(-params.fidelity_decay_per_db * loss)
    return float(out) if out.ndim == 0 else out


def link_rate(eta, fidelity, params: ChannelParams):
    """Photon key rate R_0 * eta^2 * (1 - 2 Q(F)), which reduces to R_0 eta^2 F.

    The QBER substitution Q = (1 - F)/2 makes the error penalty factor
    equal F exactly; implemented in the reduced form and clamped at 0.
    """
    eta_arr = np.asarray(eta, dtype=float)
    f_arr = np.asarray(fidelity, dtype=float)
    if np.any(eta_arr <= 0) or np.any(eta_arr > 1):
        raise ValueError("eta must be in (0, 1]")
    if np.any(f_arr < 0) or np.any(f_arr > 1):
        raise ValueError("fidelity must be in [0, 1]")
    out = np.maximum(params.rate_base_bps * eta_arr**2 * f_arr, 0.0)
    return float(out) if out.ndim == 0 else out


def qber(fidelity):
    """QBER approximation (1 - F) / 2, in [0, 0.5]."""
    f = np.asarray(fidelity, dtype=float)
    if np.any(f < 0) or np.any(f > 1):
        raise ValueError("fidelity must be in [0, 1]")
    out = (1.0 - f) / 2.0
    return float(out) if out.ndim == 0 else out


def draw_link_sample(
    d_km: float,
    params: ChannelParams,
    rng: np.random.Generator,
    clamp_stats: ClampStats | None = None,
) -> LinkSample:
    """Bundle loss, transmittance, fidelity, rate and QBER for one link."""
    loss = total_loss_db(d_km, params)
    eta = sample_transmittance(
        loss, params.sigma_fade, rng, clamp_stats, db_divisor=params.db_divisor
    )
    f = link_fidelity(loss, params)
    return LinkSample(
        loss_total_db=loss,
        transmittance=eta,
        fidelity=f,
        rate_bps=link_rate(eta, f, params),
        qber=qber(f),
    )
