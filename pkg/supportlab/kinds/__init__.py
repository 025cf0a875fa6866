"""Per-kind strategies behind the geometry operations."""
from supportlab.kinds.ball import BallKind
from supportlab.kinds.ballcut import BallCutKind
from supportlab.kinds.base import KindStrategy, SupportValues
from supportlab.kinds.hpolytope import HPolytopeKind
from supportlab.kinds.vpolytope import VPolytopeKind

_STRATEGIES = {
    "vpolytope": VPolytopeKind(),
    "hpolytope": HPolytopeKind(),
    "ball": BallKind(),
    "ballcut": BallCutKind(),
}


def strategy_for(kind) -> KindStrategy:
    key = getattr(kind, "value", kind)
    try:
        return _STRATEGIES[key]
    except KeyError:
        raise ValueError(f"Unknown body kind: {kind}")


__all__ = ["KindStrategy", "SupportValues", "strategy_for"]
