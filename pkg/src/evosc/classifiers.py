"""Threshold classifiers on spectral energy features.

The band classifier thresholds the normalized energy in a frequency band
described by a (center frequency, bandwidth, threshold) triplet; the plain
energy classifier thresholds the total signal energy. Both use a strict
``>`` so ties fall to the background class.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError
from .events import BG, ED
from .spectral import BandEnergyFeature

_BAND_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class EnergyBandParams:
    """The 3-parameter band detector: band center, width, and threshold."""

    f_mid: float  # Hz
    bandwidth_b: float  # Hz
    decision_lambda: float  # threshold on the normalized band energy

    def __post_init__(self):
        if self.bandwidth_b <= 0:
            raise ValidationError("bandwidth must be positive")
        if self.f_mid - self.bandwidth_b / 2 < 0:
            raise ValidationError("band lower edge f_mid - b/2 must be >= 0")
        if not 0 < self.decision_lambda < 1:
            raise ValidationError("lambda must lie strictly between 0 and 1")

    @property
    def f_l(self) -> float:
        return self.f_mid - self.bandwidth_b / 2

    @property
    def f_u(self) -> float:
        return self.f_mid + self.bandwidth_b / 2


@dataclass(frozen=True)
class EnergyParams:
    """The 1-parameter detector: a threshold on the total signal energy."""

    threshold: float

    def __post_init__(self):
        if self.threshold < 0:
            raise ValidationError("energy threshold must be non-negative")


def classify_energy(feature_total_energy: float, params: EnergyParams) -> str:
    """ED iff the total energy strictly exceeds the threshold."""
    if feature_total_energy < 0 or not np.isfinite(feature_total_energy):
        raise ValidationError("total energy must be a finite non-negative number")
    return ED if feature_total_energy > params.threshold else BG


def classify_energy_band(feature: BandEnergyFeature, params: EnergyBandParams) -> str:
    """ED iff the normalized band energy strictly exceeds lambda.

    The feature must have been computed on exactly the band the parameters
    describe; a mismatch is a contract error, not a silent reinterpretation.
    """
    if (
        abs(feature.f_l - params.f_l) > _BAND_MATCH_TOL
        or abs(feature.f_u - params.f_u) > _BAND_MATCH_TOL
    ):
        raise ContractError(
            f"feature band [{feature.f_l}, {feature.f_u}] does not match params band "
            f"[{params.f_l}, {params.f_u}]"
        )
    return ED if feature.normalized > params.decision_lambda else BG
