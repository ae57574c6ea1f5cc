"""Thin bridge from ML-ecosystem model outputs to fairaudit interchange files.

No metric logic lives here: the adapter converts array dumps into the
FAIREMB1 embedding container and per-image score matrices into the
predictions JSON-lines format, both defined by the audit toolkit.
"""

__version__ = "0.1.0"

from .export import export_embeddings, export_predictions, load_array, softmax  # noqa: F401
