"""Token-optimization strategies and an evaluation harness for LLM-driven
Oracle to PostgreSQL migration."""

__version__ = "0.1.0"
