"""Reference detectors run against the prediction-assisted chart."""

from .classic import classic_cusum_detect
from .bocpd import NigPrior, bocpd_detect
from .ocd import ocd_detect
from .mosum import mosum_detect
from .baseline import BaselineResult, random_baseline

__all__ = [
    "classic_cusum_detect",
    "NigPrior",
    "bocpd_detect",
    "ocd_detect",
    "mosum_detect",
    "BaselineResult",
    "random_baseline",
]
