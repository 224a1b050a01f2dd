"""Handwriting style embeddings pre-trained on synthetic font renderings."""
__version__ = "0.1.0"
