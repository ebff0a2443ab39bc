"""Bug localization over srcML code blocks.

Ranks a project's source files by how likely each one is to contain the
defect described in a bug report.
"""

__version__ = "0.1.0"
