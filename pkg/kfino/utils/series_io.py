"""CSV reader and writers for observation series and result tables."""
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from kfino.utils.exceptions import EmptySeries, FileError, ParseError, TimeOrderError, ValidationError

logger = logging.getLogger(__name__)

SERIES_HEADER = ("t", "y")


def format_number(value) -> str:
    """Format a table cell; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    """Timestamps (days) and observations (kg); ``dropped`` counts rows
    removed by the out-of-range filter."""
    times: np.ndarray
    values: np.ndarray
    dropped: int = 0

    def __len__(self) -> int:
        return self.times.shape[0]


class SeriesParser:
    """Parser for ``t,y`` series files."""

    def parse(self, file_path: str) -> ObservationSeries:
        """Parse a series file.

        Args:
            file_path: Path to the CSV file

        Returns:
            ObservationSeries with strictly increasing times

        Raises:
            FileError: If file doesn't exist or can't be read
            ParseError: If a row is malformed
            TimeOrderError: If times are not strictly increasing
            EmptySeries: If the file has no data row
        """
        path = Path(file_path)
        if not path.exists():
            raise FileError(f"File not found: {file_path}")
        try:
            content = path.read_text(encoding='utf-8')
        except Exception as e:
            raise FileError(f"Cannot read file: {e}")
        return self.parse_string(content)

    def parse_string(self, content: str) -> ObservationSeries:
        """Parse series content; see ``parse``."""
        reader = csv.reader(io.StringIO(content))
        times = []
        values = []
        header_seen = False
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if not header_seen:
                if tuple(cell.strip() for cell in row) != SERIES_HEADER:
                    raise ParseError(f"Expected header 't,y', got '{','.join(row)}'", line=line)
                header_seen = True
                continue
            if len(row) != 2:
                raise ParseError(f"Expected 2 fields, got {len(row)}", line=line)
            t = self._parse_cell(row[0], line, 1)
            y = self._parse_cell(row[1], line, 2)
            if times and t <= times[-1]:
                raise TimeOrderError(
                    f"Timestamps must be strictly increasing, got {t} after {times[-1]}", row=line
                )
            times.append(t)
            values.append(y)

        if not times:
            raise EmptySeries("Series file has no observation")
        return ObservationSeries(times=np.array(times), values=np.array(values))

    def _parse_cell(self, cell: str, line: int, column: int) -> float:
        try:
            value = float(cell.strip())
        except ValueError:
            raise ParseError(f"Invalid number '{cell}'", line=line, column=column)
        if not math.isfinite(value):
            raise ParseError(f"Number must be finite, got '{cell}'", line=line, column=column)
        return value

    def format_csv(self, series: ObservationSeries) -> str:
        rows = zip(series.times, series.values)
        return format_table(SERIES_HEADER, rows)

    def save(self, series: ObservationSeries, file_path: str) -> None:
        """Write a series so that parsing it gives back the same numbers.

        Raises:
            FileError: If file can't be written
        """
        write_text(file_path, self.format_csv(series))


def ingest(
    file_path: str, oor_min: Optional[float] = None, oor_max: Optional[float] = None
) -> ObservationSeries:
    """Read a series and drop observations outside ``[oor_min, oor_max]``.

    Raises:
        ValidationError: If only one bound is given or the bounds are reversed
        EmptySeries: If no observation is left
    """
    if (oor_min is None) != (oor_max is None):
        raise ValidationError("oor", "both bounds are required")
    series = SeriesParser().parse(file_path)
    if oor_min is None:
        return series
    if not oor_min < oor_max:
        raise ValidationError("oor", f"min must be smaller than max, got [{oor_min}, {oor_max}]")

    keep = (series.values >= oor_min) & (series.values <= oor_max)
    dropped = int(np.count_nonzero(~keep))
    logger.info(f"Dropped {dropped} of {len(series)} observations outside [{oor_min}, {oor_max}]")
    if dropped == len(series):
        raise EmptySeries(f"No observation left in [{oor_min}, {oor_max}]")
    return ObservationSeries(times=series.times[keep], values=series.values[keep], dropped=dropped)


def format_table(
    header: Sequence[str], rows: Iterable[Sequence], footer: Sequence[str] = ()
) -> str:
    """Render a comma-separated table, then raw footer lines."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    for line in footer:
        buffer.write(f"{line}\n")
    return buffer.getvalue()


def write_text(file_path: Optional[str], text: str) -> None:
    """Write text to a file, or to standard output for None or '-'.

    Raises:
        FileError: If file can't be written
    """
    if file_path is None or file_path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(file_path).write_text(text, encoding='utf-8')
    except Exception as e:
        raise FileError(f"Cannot write file: {e}")


def write_table(
    file_path: Optional[str],
    header: Sequence[str],
    rows: Iterable[Sequence],
    footer: Sequence[str] = (),
) -> None:
    """Render and write a table; see ``format_table`` and ``write_text``."""
    write_text(file_path, format_table(header, rows, footer))
