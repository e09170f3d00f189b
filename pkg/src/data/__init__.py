"""Dataset ingestion and the synthetic-shapes corpus."""

from src.data.loader import DatasetEntry, DatasetManifest, ingest
from src.data.synthetic import make_synthetic, render_sample

__all__ = ['DatasetEntry', 'DatasetManifest', 'ingest', 'make_synthetic', 'render_sample']
