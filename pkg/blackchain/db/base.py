from sqlalchemy.ext.declarative import declarative_base

import math


def _todict(obj: object) -> dict:
    """Return the object's column values, excluding private attributes,
    sqlalchemy state and relationship attributes.
    """
    excl = ("_sa_adapter", "_sa_instance_state")
    return {
        k: v
        for k, v in vars(obj).items()
        if not k.startswith("_") and not any(hasattr(v, a) for a in excl)
    }


def _sql_value(value):
    """NaN is stored as NULL."""
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class BaseWithRepr:
    def to_dictionary(self) -> dict:
        return {
            k: v
            for k, v in _todict(self).items()
            if not isinstance(v, (dict, list))
        }

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in self.to_dictionary().items())
        return f"{self.__class__.__name__}({params})"


Base = declarative_base(cls=BaseWithRepr)
