"""Module execution hook: python -m seqattr."""

from .cli import entrypoint

entrypoint()
