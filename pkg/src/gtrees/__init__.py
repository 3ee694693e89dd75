"""Translation length functions of free and graph-of-groups tree actions, compatibility
certificates, and common-refinement reconstruction."""
from __future__ import annotations

from .words import Alphabet, CyclicWord, InputError, Word

__all__ = ["Alphabet", "CyclicWord", "InputError", "Word"]
__version__ = "0.1.0"
