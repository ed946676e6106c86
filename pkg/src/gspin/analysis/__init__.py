from .extract import extract_zfs, rabi_ratio
from .fitting import FitResult, fit
from .models import FitModel, parameter_names
from .spectral import fft_power_spectrum, spectral_peaks

__all__ = [
    "FitModel",
    "FitResult",
    "extract_zfs",
    "fft_power_spectrum",
    "fit",
    "parameter_names",
    "rabi_ratio",
    "spectral_peaks",
]
