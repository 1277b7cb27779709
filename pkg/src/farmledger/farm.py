"""Farm environmental dataset: CSV intake, canonical serialization, upload receipts."""

from __future__ import annotations

import base64
import csv
import datetime
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .cid import Cid
from . import qr

CSV_HEADER = ["date", "farm_id", "location", "farm_type", "product_type",
              "yield_kg", "water_l", "electricity_kwh", "fertilizer_kg"]
FARM_TYPES = ("conventional", "vertical")
QUANTITY_FIELDS = ("yield_kg", "water_l", "electricity_kwh", "fertilizer_kg")


class HeaderMismatch(ValueError):
    pass


class RowError(ValueError):
    def __init__(self, line: int, field: str, reason: str):
        super().__init__(f"line {line}, field {field}: {reason}")
        self.line = line
        self.field = field
        self.reason = reason


class NotADataset(ValueError):
    pass


@dataclass(frozen=True)
class FarmRecord:
    date: datetime.date
    farm_id: str
    location: str
    farm_type: str
    product_type: str
    yield_kg: Decimal
    water_l: Decimal
    electricity_kwh: Decimal
    fertilizer_kg: Decimal


@dataclass(frozen=True)
class Dataset:
    records: tuple

    def __len__(self) -> int:
        return len(self.records)


def _parse_quantity(line: int, field: str, raw: str) -> Decimal:
    try:
        value = Decimal(raw)
    except InvalidOperation:
        raise RowError(line, field, f"not a number: {raw!r}") from None
    if not value.is_finite():
        raise RowError(line, field, "must be finite")
    if value < 0:
        raise RowError(line, field, "must be non-negative")
    return value


def _parse_row(line: int, row: dict) -> FarmRecord:
    try:
        date = datetime.date.fromisoformat(row["date"])
    except ValueError:
        raise RowError(line, "date", f"not an ISO-8601 date: {row['date']!r}") from None
    if not row["farm_id"].strip():
        raise RowError(line, "farm_id", "must be non-empty")
    if not row["location"].strip():
        raise RowError(line, "location", "must be non-empty")
    if row["farm_type"] not in FARM_TYPES:
        raise RowError(line, "farm_type",
                       f"must be one of {FARM_TYPES}, got {row['farm_type']!r}")
    if not row["product_type"].strip():
        raise RowError(line, "product_type", "must be non-empty")
    quantities = {f: _parse_quantity(line, f, row[f]) for f in QUANTITY_FIELDS}
    return FarmRecord(date=date, farm_id=row["farm_id"], location=row["location"],
                      farm_type=row["farm_type"], product_type=row["product_type"],
                      **quantities)


def parse_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("empty input") from None
    if header != CSV_HEADER:
        raise HeaderMismatch(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise RowError(line_no, "row", f"expected {len(CSV_HEADER)} fields, got {len(row)}")
        records.append(_parse_row(line_no, dict(zip(CSV_HEADER, row))))
    return Dataset(records=tuple(records))


def format_quantity(value: Decimal) -> str:
    """Plain decimal rendering: no exponent, no trailing zeros."""
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


def _sort_key(r: FarmRecord):
    # primary order (date, farm_id, product_type); remaining fields break ties
    # so the ordering is total and input row order can never leak through
    return (r.date.isoformat(), r.farm_id, r.product_type, r.location,
            r.farm_type, r.yield_kg, r.water_l, r.electricity_kwh, r.fertilizer_kg)


def canonicalize(ds: Dataset) -> bytes:
    """Deterministic JSON bytes; row order of the input does not matter."""
    parts = []
    for r in sorted(ds.records, key=_sort_key):
        fields = [
            f'"date":{json.dumps(r.date.isoformat())}',
            f'"farm_id":{json.dumps(r.farm_id)}',
            f'"location":{json.dumps(r.location)}',
            f'"farm_type":{json.dumps(r.farm_type)}',
            f'"product_type":{json.dumps(r.product_type)}',
            f'"yield_kg":{format_quantity(r.yield_kg)}',
            f'"water_l":{format_quantity(r.water_l)}',
            f'"electricity_kwh":{format_quantity(r.electricity_kwh)}',
            f'"fertilizer_kg":{format_quantity(r.fertilizer_kg)}',
        ]
        parts.append("{" + ",".join(fields) + "}")
    return ('{"records":[' + ",".join(parts) + "]}").encode("utf-8")


def parse_canonical(data: bytes) -> Dataset:
    """Read canonical dataset bytes back into records; rejects non-dataset content."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        raise NotADataset("content is not valid JSON") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("records"), list):
        raise NotADataset('content has no "records" array')
    records = []
    for i, row in enumerate(obj["records"]):
        if not isinstance(row, dict) or set(row) != set(CSV_HEADER):
            raise NotADataset(f"record {i} does not match the farm schema")
        try:
            records.append(_parse_row(i, {k: str(row[k]) for k in CSV_HEADER}))
        except RowError as e:
            raise NotADataset(str(e)) from None
    return Dataset(records=tuple(records))


@dataclass(frozen=True)
class UploadReceipt:
    cid: Cid
    visualizer_link: str
    qr_png: bytes

    def to_json(self, qr_path: str | None = None) -> dict:
        qr_value = qr_path if qr_path is not None else base64.b64encode(self.qr_png).decode()
        return {"cid": self.cid.text, "visualizer_link": self.visualizer_link,
                "qr_png": qr_value}


def visualizer_link(base: str, cid: Cid) -> str:
    return base.rstrip("/") + "/visualize?cid=" + cid.text


def upload_dataset(ds: Dataset, node, visualizer_base: str) -> UploadReceipt:
    """Add canonical bytes to the node and build the CID + link + QR receipt."""
    cid = node.add(canonicalize(ds))
    link = visualizer_link(visualizer_base, cid)
    return UploadReceipt(cid=cid, visualizer_link=link, qr_png=qr.make_qr_png(link))
