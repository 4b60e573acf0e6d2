"""Weighted exchangeability on finite alphabets: sampling, permanents, checks,
condition classification and component recovery."""

__version__ = "0.1.0"

from .core import Dist, JointDist, Measure, RandomSource, reweight, total_variation
from .weights import (
    BinaryExample,
    BoundedRatio,
    Constant,
    Custom,
    CyclicPartition,
    GeometricTilt,
    PowerTilt,
    WeightFn,
    WeightSeq,
    tail_classify,
)

__all__ = [
    "BinaryExample", "BoundedRatio", "Constant", "Custom", "CyclicPartition", "Dist",
    "GeometricTilt", "JointDist", "Measure", "PowerTilt", "RandomSource", "WeightFn",
    "WeightSeq", "reweight", "tail_classify", "total_variation",
]
