from blackchain.db.models import AuditRecord, Run
from blackchain.db.store import Store

__all__ = [
    "AuditRecord",
    "Run",
    "Store",
]
