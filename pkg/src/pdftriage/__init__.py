"""Static triage of PDF files: parsing, forensics, features, learning and injection."""

from .errors import PdfTriageError
from .model import Document, Name, ParseMode, PdfString, Reference, Stream
from .parser import parse_document, parse_file
from .writer import serialize

__all__ = [
    "Document", "Name", "ParseMode", "PdfString", "PdfTriageError", "Reference",
    "Stream", "parse_document", "parse_file", "serialize",
]
__version__ = "0.1.0"
