"""Square-tiled surfaces, their SU(2) representation varieties and twist dynamics."""

from .errors import SquareTwistError
from .origami import Origami, registry
from .quat import UnitQuaternion
from .repvar import Representation, residual, sample_descent, sample_n4, sample_propagate
from .twist import TwistWord, apply_word, goldman_flow

__all__ = [
    "Origami",
    "Representation",
    "SquareTwistError",
    "TwistWord",
    "UnitQuaternion",
    "apply_word",
    "goldman_flow",
    "registry",
    "residual",
    "sample_descent",
    "sample_n4",
    "sample_propagate",
]

__version__ = "0.1.0"
