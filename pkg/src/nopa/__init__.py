"""Triply resonant non-degenerate optical parametric amplifier (NOPA) model.

Modules: ``material`` (KTP dispersion, phase matching), ``cavity`` (optical
path, Gouy phase, finesse, Airy lineshape), ``resonance`` (double and triple
resonance search), ``quantum`` (threshold, quadrature spectra, entanglement),
``measurement`` (seeded scan and noise-trace simulation), ``config`` and
``cli``.
"""

from .errors import (
    ConditioningError,
    ConfigError,
    DegenerateWedgeError,
    DomainError,
    ModelError,
    NopaError,
    PhaseMatchingError,
    ResonanceSearchError,
    StabilityError,
    ThresholdError,
)

__version__ = "0.1.0"
