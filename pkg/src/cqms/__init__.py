"""Collaborative query management engine.

Logs SQL queries with their parse-level features and output summaries, then
serves search over the log (by keyword, feature conditions, output data, or
similarity), context-aware completion and correction suggestions, session
graphs, and log maintenance, over an append-only event store.
"""

__version__ = "0.1.0"
