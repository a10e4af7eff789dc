"""hybridgov: delegation governance for hybrid human-AI teams.

The package answers four operational questions and keeps the answers
auditable in an append-only registry:

- what may AI do on this task type right now (classification),
- when does that answer change (evidence-based transitions),
- what does supervision cost (tier-aware planning and budgeting),
- is the control system itself healthy (sampling, erosion checks,
  error-injection audits, anti-pattern lint, simulation).
"""

from .tiers import (
    Assessment,
    AutonomyTier,
    CapabilityRating,
    Consequence,
    GovernanceError,
    Structuredness,
    Verifiability,
)
from .decision import ClassificationResult, classify, enumerate_matrix

__version__ = "0.1.0"

__all__ = [
    "Assessment",
    "AutonomyTier",
    "CapabilityRating",
    "ClassificationResult",
    "Consequence",
    "GovernanceError",
    "Structuredness",
    "Verifiability",
    "classify",
    "enumerate_matrix",
    "__version__",
]
