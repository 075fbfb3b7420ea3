"""Core type definitions for pme-lab."""

from enum import Enum
from typing import TypeAlias

import numpy as np
from numpy.typing import NDArray

Field: TypeAlias = NDArray[np.float64]
Points: TypeAlias = NDArray[np.float64]


class ExperimentKind(Enum):
    """Experiment kinds the runner can execute."""

    SIMULATE = "simulate"
    SPLIT_STUDY = "split-study"
    AUDIT = "audit"
    REGIONS = "regions"
    THRESHOLDS = "thresholds"
    KS = "ks"


class DriftStructure(Enum):
    """Structural hypothesis placed on the drift."""

    GENERAL = "general"
    DIV_NONNEG = "div_nonneg"
    GRADIENT_CLASS = "gradient_class"


class TransportMethod(Enum):
    """How a Wasserstein distance was computed."""

    QUANTILE_1D = "quantile-1d"
    ENTROPIC = "entropic"
    EXACT_LP = "exact-lp"


class InitialPreset(Enum):
    """Initial density presets."""

    UNIFORM = "uniform"
    BUMP = "bump"
    BARENBLATT = "barenblatt"
    TWO_BUMPS = "two-bumps"


class SolverKind(Enum):
    """Time integrator used by the simulate and audit experiments."""

    MONOLITHIC = "monolithic"
    SPLIT = "split"


class TheoremId(Enum):
    """Existence statements whose drift hypotheses are evaluated as predicates.

    ``weak-*`` give weak solutions, ``ac-*`` absolutely continuous curves in
    Wasserstein space, ``divnonneg-*`` assume a nonnegative divergence,
    ``gradient-*`` constrain the gradient of the drift, ``compact-*`` are the
    compactness windows used by the interpolation audits.
    """

    WEAK_ENTROPY = "weak-entropy"
    WEAK_LQ = "weak-lq"
    AC_ENTROPY = "ac-entropy"
    AC_LQ = "ac-lq"
    AC_EMBEDDED = "ac-embedded"
    DIVNONNEG_WEAK_ENTROPY = "divnonneg-weak-entropy"
    DIVNONNEG_WEAK_LQ_SMALL_M = "divnonneg-weak-lq-small-m"
    DIVNONNEG_WEAK_LQ_LARGE_M = "divnonneg-weak-lq-large-m"
    DIVNONNEG_AC_ENTROPY = "divnonneg-ac-entropy"
    DIVNONNEG_AC_LQ = "divnonneg-ac-lq"
    DIVNONNEG_AC_EMBEDDED = "divnonneg-ac-embedded"
    GRADIENT_WEAK_ENTROPY = "gradient-weak-entropy"
    GRADIENT_WEAK_LQ = "gradient-weak-lq"
    GRADIENT_AC_ENTROPY = "gradient-ac-entropy"
    GRADIENT_AC_LQ = "gradient-ac-lq"
    GRADIENT_AC_EMBEDDED = "gradient-ac-embedded"
    WHOLE_SPACE_DIVNONNEG = "whole-space-divnonneg"
    COMPACT_LINEAR = "compact-linear"
    COMPACT_POWER = "compact-power"

    @property
    def is_entropy(self) -> bool:
        return self.value.endswith("entropy")

    @property
    def is_gradient(self) -> bool:
        return self.value.startswith("gradient-")

    @property
    def needs_divnonneg(self) -> bool:
        return self.value.startswith("divnonneg-") or self is TheoremId.WHOLE_SPACE_DIVNONNEG


class FigureId(Enum):
    """Admissible-region diagrams in the (1/q1, 1/q2) plane."""

    AC_MODERATE_M = "ac-moderate-m"
    AC_MODERATE_M_MID_D = "ac-moderate-m-mid-d"
    AC_MODERATE_M_HIGH_D = "ac-moderate-m-high-d"
    AC_LARGE_M = "ac-large-m"
    AC_LARGE_M_HIGH_D = "ac-large-m-high-d"
    DIVFREE_ENTROPY = "divfree-entropy"
    DIVFREE_LQ = "divfree-lq"
    COMPACT_MODERATE_M = "compact-moderate-m"
    COMPACT_LARGE_M = "compact-large-m"


class KsRegime(Enum):
    """Parameter windows for the consumption Keller-Segel existence results."""

    MODERATE_M = "moderate-m"
    THREE_D_WINDOW = "three-d-window"
    OPEN = "open"
