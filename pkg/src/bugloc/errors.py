"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the CLI can emit
machine-readable failures.
"""


class BuglocError(Exception):
    """Base class for all errors raised by this package."""

    exit_status = 1

    @property
    def code(self):
        return type(self).__name__

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class MalformedXml(BuglocError):
    pass


class UnsupportedLanguage(BuglocError):
    pass


class MissingXml(BuglocError):
    pass


class IoFailure(BuglocError):
    pass


class EmptyCorpus(BuglocError):
    pass


class DimensionMismatch(BuglocError):
    pass


class ShapeMismatch(BuglocError):
    pass


class NonFiniteLoss(BuglocError):
    pass


class DegenerateData(BuglocError):
    pass


class NoPositivePairs(BuglocError):
    exit_status = 3


class VocabularyMismatch(BuglocError):
    pass


class TooFewMinority(BuglocError):
    pass


class EmptyClass(BuglocError):
    pass


class UnknownFixedFile(BuglocError):
    pass


class AllRowsRemoved(BuglocError):
    pass


class EmptyResults(BuglocError):
    pass


class NoRelevant(BuglocError):
    pass


class SchemaViolation(BuglocError):
    pass


class BadTimestamp(BuglocError):
    pass


class VersionMismatch(BuglocError):
    pass


class CorruptModel(BuglocError):
    pass


class UnknownBug(BuglocError):
    exit_status = 2


class InvalidConfig(BuglocError):
    pass
