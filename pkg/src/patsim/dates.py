"""Calendar helpers.

Grant dates are stored internally as signed integer days since 1970-01-01
so that temporal lags reduce to exact integer subtraction.
"""

from __future__ import annotations

import datetime as _dt

from .errors import ValidationError

_EPOCH_ORDINAL = _dt.date(1970, 1, 1).toordinal()

# earliest plausible grant date accepted at ingestion
MIN_GRANT_DAYS = _dt.date(1790, 1, 1).toordinal() - _EPOCH_ORDINAL

# observation window used by the synthetic generator
WINDOW_START = _dt.date(1976, 1, 1).toordinal() - _EPOCH_ORDINAL
WINDOW_END = _dt.date(2021, 9, 30).toordinal() - _EPOCH_ORDINAL


def to_days(d: _dt.date) -> int:
    return d.toordinal() - _EPOCH_ORDINAL


def from_days(days: int) -> _dt.date:
    return _dt.date.fromordinal(days + _EPOCH_ORDINAL)


def parse_iso_date(text: str) -> int:
    """Parse a strict ``YYYY-MM-DD`` string into days since 1970-01-01."""
    try:
        d = _dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ValidationError(f"invalid date {text!r}") from None
    return to_days(d)


def days_to_iso(days: int) -> str:
    return from_days(days).isoformat()


def year_of_days(days: int) -> int:
    return from_days(days).year


def today_days() -> int:
    return to_days(_dt.date.today())
