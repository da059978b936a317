"""Utils module for Kfino."""
from kfino.utils.exceptions import KfinoError, ParseError, ValidationError, FileError
from kfino.utils.series_io import SeriesParser

__all__ = [
    'KfinoError',
    'ParseError',
    'ValidationError',
    'FileError',
    'SeriesParser',
]
