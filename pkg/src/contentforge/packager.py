"""Template archive injection: place bundle files into a ZIP and rebuild it.

The output pipeline takes a prebuilt template archive, drops the compiled
bundle files into it at configured paths, updates the embedded key-value
manifest, and emits a fresh archive. Unmodified template entries are
copied raw (their compressed payload is passed through untouched);
injected entries are stored uncompressed in deterministic mode so the
result is a pure function of the inputs.

Only the classic ZIP format is handled: local file headers (PK\\x03\\x04),
a central directory (PK\\x01\\x02) and the end record (PK\\x05\\x06),
with methods 0 (stored) and 8 (deflate). No ZIP64, no encryption.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

LOCAL_SIG = b"PK\x03\x04"
CENTRAL_SIG = b"PK\x01\x02"
END_SIG = b"PK\x05\x06"

METHOD_STORED = 0
METHOD_DEFLATE = 8

# 1980-01-01 00:00:00 in DOS date/time fields, the ZIP epoch.
DOS_EPOCH_DATE = (0 << 9) | (1 << 5) | 1
DOS_EPOCH_TIME = 0

DEFAULT_METADATA_PATH = "META-INF/BUNDLE.MF"

MAX_ARCHIVE_BYTES = (1 << 32) - 1
MAX_ENTRIES = 0xFFFF


class ArchiveError(ValueError):
    """Raised for malformed archives and invalid injection plans."""


@dataclass(frozen=True)
class ArchiveEntrySummary:
    path: str
    uncompressed_size: int
    crc32: int
    method: str  # "stored" or "deflate"


@dataclass
class InjectionPlan:
    template: bytes
    placements: list[tuple[str, bytes]] = field(default_factory=list)
    metadata_updates: list[tuple[str, str]] = field(default_factory=list)
    metadata_path: str = DEFAULT_METADATA_PATH
    deterministic: bool = True


@dataclass(frozen=True)
class _Entry:
    path: str
    method: int
    flags: int
    crc32: int
    compressed_size: int
    uncompressed_size: int
    dos_time: int
    dos_date: int
    local_offset: int


def validate_archive_path(path: str) -> None:
    if not path:
        raise ArchiveError("archive path must not be empty")
    if "\\" in path:
        raise ArchiveError(f"archive path {path!r} must use '/' separators")
    if path.startswith("/"):
        raise ArchiveError(f"archive path {path!r} must not start with '/'")
    if ".." in path.split("/"):
        raise ArchiveError(f"archive path {path!r} must not contain '..' segments")


# ---------------------------------------------------------------------------
# Reading


def _find_end_record(data: bytes) -> tuple[int, int, int]:
    """Locate the end-of-central-directory record.

    Returns (entry_count, cd_offset, cd_size).
    """
    # The record is at least 22 bytes and may be followed by a comment of
    # up to 64 KiB, so scan backwards over that window.
    window_start = max(0, len(data) - (0xFFFF + 22))
    pos = data.rfind(END_SIG, window_start)
    if pos < 0 or pos + 22 > len(data):
        raise ArchiveError("not a ZIP archive: end-of-central-directory record not found")
    (_disk, _cd_disk, _n_disk, n_total, cd_size, cd_offset, _comment_len
     ) = struct.unpack("<HHHHIIH", data[pos + 4:pos + 22])
    if cd_offset + cd_size > len(data):
        raise ArchiveError("truncated central directory")
    return n_total, cd_offset, cd_size


def _parse_central_directory(data: bytes) -> list[_Entry]:
    n_total, cd_offset, cd_size = _find_end_record(data)
    entries: list[_Entry] = []
    pos = cd_offset
    end = cd_offset + cd_size
    for _ in range(n_total):
        if pos + 46 > end or data[pos:pos + 4] != CENTRAL_SIG:
            raise ArchiveError("truncated or corrupt central directory")
        (_made_by, _need, flags, method, dos_time, dos_date, crc, csize, usize,
         nlen, elen, clen, _disk, _iattr, _eattr, local_offset
         ) = struct.unpack("<HHHHHHIIIHHHHHII", data[pos + 4:pos + 46])
        name_bytes = data[pos + 46:pos + 46 + nlen]
        if len(name_bytes) < nlen:
            raise ArchiveError("truncated central directory entry name")
        try:
            path = name_bytes.decode("utf-8")
        except UnicodeDecodeError:
            path = name_bytes.decode("cp437")
        entries.append(_Entry(path, method, flags, crc, csize, usize,
                              dos_time, dos_date, local_offset))
        pos += 46 + nlen + elen + clen
    return entries


def _raw_payload(data: bytes, entry: _Entry) -> bytes:
    """Compressed payload bytes of an entry, located via its local header."""
    off = entry.local_offset
    if off + 30 > len(data) or data[off:off + 4] != LOCAL_SIG:
        raise ArchiveError(f"entry {entry.path!r}: bad local file header")
    nlen, elen = struct.unpack("<HH", data[off + 26:off + 30])
    start = off + 30 + nlen + elen
    payload = data[start:start + entry.compressed_size]
    if len(payload) < entry.compressed_size:
        raise ArchiveError(f"entry {entry.path!r}: truncated payload")
    return payload


def _inflate(payload: bytes, entry: _Entry) -> bytes:
    if entry.method == METHOD_STORED:
        return payload
    if entry.method == METHOD_DEFLATE:
        try:
            return zlib.decompress(payload, -15)
        except zlib.error as exc:
            raise ArchiveError(f"entry {entry.path!r}: bad deflate stream ({exc})") from None
    raise ArchiveError(f"entry {entry.path!r}: unsupported compression method {entry.method}")


def list_entries(archive: bytes) -> list[ArchiveEntrySummary]:
    """Central-directory listing, in directory order."""
    summaries = []
    for entry in _parse_central_directory(archive):
        method = "stored" if entry.method == METHOD_STORED else "deflate"
        summaries.append(ArchiveEntrySummary(
            entry.path, entry.uncompressed_size, entry.crc32, method))
    return summaries


def extract_entry(archive: bytes, path: str) -> bytes:
    """Decompressed payload of one entry; raises ArchiveError when absent."""
    for entry in _parse_central_directory(archive):
        if entry.path == path:
            return _inflate(_raw_payload(archive, entry), entry)
    raise ArchiveError(f"archive has no entry {path!r}")


def extract_all(archive: bytes) -> dict[str, bytes]:
    out: dict[str, bytes] = {}
    for entry in _parse_central_directory(archive):
        out[entry.path] = _inflate(_raw_payload(archive, entry), entry)
    return out


# ---------------------------------------------------------------------------
# Metadata manifest ("Key: Value" lines, LF-terminated, UTF-8)


def parse_metadata(text: str) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if sep:
            pairs.append((key.strip(), value.strip()))
    return pairs


def format_metadata(pairs: list[tuple[str, str]]) -> str:
    return "".join(f"{key}: {value}\n" for key, value in pairs)


def apply_metadata_updates(text: str, updates: list[tuple[str, str]]) -> str:
    """Overwrite existing keys in place, append new ones at the end."""
    pairs = parse_metadata(text)
    for key, value in updates:
        for i, (existing, _old) in enumerate(pairs):
            if existing == key:
                pairs[i] = (key, value)
                break
        else:
            pairs.append((key, value))
    return format_metadata(pairs)


# ---------------------------------------------------------------------------
# Writing


@dataclass(frozen=True)
class _OutEntry:
    path: str
    method: int
    crc32: int
    compressed_size: int
    uncompressed_size: int
    dos_time: int
    dos_date: int
    payload: bytes  # already in wire form (compressed for method 8)


def _make_entry(path: str, data: bytes, deterministic: bool) -> _OutEntry:
    crc = zlib.crc32(data) & 0xFFFFFFFF
    if deterministic:
        method, payload = METHOD_STORED, data
    else:
        compressor = zlib.compressobj(6, zlib.DEFLATED, -15)
        payload = compressor.compress(data) + compressor.flush()
        method = METHOD_DEFLATE
        if len(payload) >= len(data):
            method, payload = METHOD_STORED, data
    return _OutEntry(path, method, crc, len(payload), len(data),
                     DOS_EPOCH_TIME, DOS_EPOCH_DATE, payload)


def _write_archive(entries: list[_OutEntry]) -> bytes:
    if len(entries) > MAX_ENTRIES:
        raise ArchiveError(f"too many entries for a classic ZIP: {len(entries)}")
    out = bytearray()
    directory = bytearray()
    for entry in entries:
        name = entry.path.encode("utf-8")
        flags = 0x0800  # UTF-8 names
        local_offset = len(out)
        if local_offset > MAX_ARCHIVE_BYTES:
            raise ArchiveError("archive exceeds 4 GiB; ZIP64 is not supported")
        out += LOCAL_SIG
        out += struct.pack(
            "<HHHHHIIIHH", 20, flags, entry.method, entry.dos_time, entry.dos_date,
            entry.crc32, entry.compressed_size, entry.uncompressed_size, len(name), 0)
        out += name
        out += entry.payload
        directory += CENTRAL_SIG
        directory += struct.pack(
            "<HHHHHHIIIHHHHHII", 20, 20, flags, entry.method, entry.dos_time,
            entry.dos_date, entry.crc32, entry.compressed_size,
            entry.uncompressed_size, len(name), 0, 0, 0, 0, 0, local_offset)
        directory += name
    cd_offset = len(out)
    out += directory
    out += END_SIG
    out += struct.pack("<HHHHIIH", 0, 0, len(entries), len(entries),
                       len(directory), cd_offset, 0)
    if len(out) > MAX_ARCHIVE_BYTES:
        raise ArchiveError("archive exceeds 4 GiB; ZIP64 is not supported")
    return bytes(out)


def inject(plan: InjectionPlan) -> bytes:
    """Rebuild the template archive with the plan's placements and metadata.

    Deterministic mode fixes every timestamp to the ZIP epoch, stores
    placements uncompressed and writes entries in sorted-path order, so
    equal plans give byte-identical archives.
    """
    seen: set[str] = set()
    for path, _data in plan.placements:
        validate_archive_path(path)
        if path in seen:
            raise ArchiveError(f"placement path collision: {path!r} appears twice")
        seen.add(path)
    validate_archive_path(plan.metadata_path)

    template_entries = _parse_central_directory(plan.template)

    placements = dict(plan.placements)
    if plan.metadata_updates:
        base = placements.get(plan.metadata_path)
        if base is None:
            base = b""
            for entry in template_entries:
                if entry.path == plan.metadata_path:
                    base = _inflate(_raw_payload(plan.template, entry), entry)
                    break
        updated = apply_metadata_updates(base.decode("utf-8"), plan.metadata_updates)
        placements[plan.metadata_path] = updated.encode("utf-8")

    out_entries: list[_OutEntry] = []
    for entry in template_entries:
        if entry.path in placements:
            continue  # shadowed
        payload = _raw_payload(plan.template, entry)
        if plan.deterministic:
            dos_time, dos_date = DOS_EPOCH_TIME, DOS_EPOCH_DATE
        else:
            dos_time, dos_date = entry.dos_time, entry.dos_date
        out_entries.append(_OutEntry(
            entry.path, entry.method, entry.crc32, entry.compressed_size,
            entry.uncompressed_size, dos_time, dos_date, payload))
    for path, data in placements.items():
        out_entries.append(_make_entry(path, data, plan.deterministic))

    if plan.deterministic:
        out_entries.sort(key=lambda e: e.path)
    return _write_archive(out_entries)


def verify_injection(output: bytes, plan: InjectionPlan):
    """Confirm placements and metadata survive in the output archive."""
    from .content_model import ValidationReport

    report = ValidationReport()
    try:
        entries = {e.path: e for e in _parse_central_directory(output)}
    except ArchiveError as exc:
        report.add("bad-archive", str(exc))
        return report

    for path, data in plan.placements:
        if path == plan.metadata_path and plan.metadata_updates:
            continue  # rewritten below
        entry = entries.get(path)
        if entry is None:
            report.add("missing-placement", f"placement {path!r} is not in the archive")
            continue
        try:
            payload = _inflate(_raw_payload(output, entry), entry)
        except ArchiveError as exc:
            report.add("crc-mismatch", f"placement {path!r}: unreadable payload ({exc})")
            continue
        crc = zlib.crc32(data) & 0xFFFFFFFF
        actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
        if len(payload) != len(data) or actual_crc != crc or entry.crc32 != crc:
            report.add("crc-mismatch",
                       f"placement {path!r}: size/crc32 differ from the planned payload")

    if plan.metadata_updates:
        if plan.metadata_path not in entries:
            report.add("missing-metadata",
                       f"metadata manifest {plan.metadata_path!r} is not in the archive")
        else:
            text = extract_entry(output, plan.metadata_path).decode("utf-8")
            actual = dict(parse_metadata(text))
            expected: dict[str, str] = {}
            for key, value in plan.metadata_updates:
                expected[key] = value
            for key, value in expected.items():
                if actual.get(key) != value:
                    report.add("stale-key",
                               f"metadata key {key!r} is {actual.get(key)!r}, expected {value!r}")
    return report
