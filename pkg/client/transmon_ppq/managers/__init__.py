"""Output managers."""

from .artifact_manager import ArtifactManager
from .trajectory_manager import TrajectoryManager

__all__ = [
    "ArtifactManager",
    "TrajectoryManager",
]
