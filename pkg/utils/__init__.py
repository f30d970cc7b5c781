"""
Utilities Module - Reusable Components

Environment configuration, trial seeding, serialization and run logs.
"""

__all__ = ['environment_config', 'seeding', 'serialization', 'run_logger']
