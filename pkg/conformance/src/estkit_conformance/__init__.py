"""Conformance harness for the estkit artifact.

``generate`` drives the pinned reference library (scikit-learn) to
produce golden fixtures: input datasets plus expected fitted state,
transforms, predictions, split indices, metric values, and grid-search
scores, each with per-field tolerance metadata. ``compare`` drives the
artifact, mostly through its command-line interface and documented
archive format, and diffs its outputs against the fixtures.
"""

from .compare import compare
from .generate import ReferenceMismatch, generate_fixtures
from .pinned import PINNED_VERSIONS, environment_report

__all__ = [
    "PINNED_VERSIONS",
    "ReferenceMismatch",
    "compare",
    "environment_report",
    "generate_fixtures",
]
