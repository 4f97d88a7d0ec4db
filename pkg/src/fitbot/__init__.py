"""Fitness-assistant chat engine.

Skill-driven intent classification with in-scope/out-of-scope resolution,
multi-strategy entity recognition, autocorrection, dialog flow and
state-reformulated query generation, behind a stateless message service.
"""

from .engine import Assistant, NluResult, Turn
from .skill import Skill, load_skill, parse_skill, serialize_skill, validate_skill

__version__ = "0.1.0"

__all__ = [
    "Assistant",
    "NluResult",
    "Skill",
    "Turn",
    "load_skill",
    "parse_skill",
    "serialize_skill",
    "validate_skill",
    "__version__",
]
