"""Exception hierarchy shared by every pdftriage module."""


class PdfTriageError(Exception):
    pass


# -- parsing ------------------------------------------------------------------

class ParseError(PdfTriageError):
    pass


class NotAPdf(ParseError):
    pass


class NoTrailer(ParseError):
    pass


class TruncatedFile(ParseError):
    pass


class FileTooLarge(ParseError):
    pass


# -- object graph ---------------------------------------------------------------

class ResolveError(PdfTriageError):
    pass


class UnknownReference(ResolveError):
    pass


class FreeObject(ResolveError):
    pass


class NoRoot(ResolveError):
    pass


# -- stream filters ---------------------------------------------------------

class FilterError(PdfTriageError):
    pass


class UnsupportedFilter(FilterError):
    pass


class CorruptStream(FilterError):
    pass


# -- features / learning -----------------------------------------------------

class EmptySpec(PdfTriageError):
    pass


class LearningError(PdfTriageError):
    pass


class SingleClass(LearningError):
    pass


class SpecMismatch(LearningError):
    pass


class CorruptModelFile(LearningError):
    pass


# -- injection ----------------------------------------------------------------

class InjectionError(PdfTriageError):
    pass


class TargetUnparseable(InjectionError):
    pass


class NoCatalog(InjectionError):
    pass


class ObjectNumberOverflow(InjectionError):
    pass


class TechniqueNotAllowed(InjectionError):
    pass
