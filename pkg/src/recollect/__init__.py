"""recollect: ingest cross-referenced collections, curate their schema, export IMS CP packages."""

__version__ = "0.1.0"
