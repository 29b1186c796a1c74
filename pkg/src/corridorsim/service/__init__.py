from .app import app
from .client import ServiceClient, ServiceError

__all__ = ["app", "ServiceClient", "ServiceError"]
