__version__ = "1.0.0"

# Bumped whenever the layout of results.json changes
SCHEMA_VERSION = 1
