from .galton import GaltonBoard, GaltonConfig
from .lotka import LotkaVolterra, LotkaVolterraConfig, REFERENCE_LOG_RATES

__all__ = [
    "GaltonBoard",
    "GaltonConfig",
    "LotkaVolterra",
    "LotkaVolterraConfig",
    "REFERENCE_LOG_RATES",
]
