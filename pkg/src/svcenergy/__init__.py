"""Service-level energy accounting for containerised microservices."""

__version__ = "0.1.0"
