from supportlab.models.body import BodyKind, ConvexBody
from supportlab.models.measure import DiscreteMeasure, MeasureFamily, SpaceTag, SupportPoint

__all__ = ["BodyKind", "ConvexBody", "DiscreteMeasure", "MeasureFamily", "SpaceTag", "SupportPoint"]
