from .app import create_app
from .client import HttpClient, LocalClient
from .handlers import Service

__all__ = ["HttpClient", "LocalClient", "Service", "create_app"]
