"""Perturbation theory for steady states and eigenpairs of Lindblad generators."""
from .errors import LiouvillePTError

__version__ = "0.1.0"

__all__ = ["LiouvillePTError", "__version__"]
