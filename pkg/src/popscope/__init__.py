"""popscope: keyword discovery, post collection, embedding refinement, and
fine-tuning corpus tooling with offline record/replay backends."""

__version__ = "0.1.0"
