"""Speaker diarization of fiction video guided by its shot structure.

Dialogue scenes are found from alternating camera shots; speech inside each
scene is clustered into local speakers, which are then linked across the
episode under cannot-link constraints between speakers sharing a scene.
"""

from .config import Config, ConfigError
from .core import (
    CannotLinkSet,
    DialogueScene,
    FrameDescriptor,
    LocalSpeaker,
    Partition,
    Shot,
    ShotLabeling,
    SpeechSegment,
    StructureError,
)

__version__ = "0.1.0"

__all__ = [
    "CannotLinkSet",
    "Config",
    "ConfigError",
    "DialogueScene",
    "FrameDescriptor",
    "LocalSpeaker",
    "Partition",
    "Shot",
    "ShotLabeling",
    "SpeechSegment",
    "StructureError",
]
