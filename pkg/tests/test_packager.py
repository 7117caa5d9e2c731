import hashlib
import io
import random
import zipfile

import pytest

from contentforge.packager import (
    ArchiveError,
    InjectionPlan,
    apply_metadata_updates,
    extract_all,
    extract_entry,
    inject,
    list_entries,
    parse_metadata,
    verify_injection,
)
from contentforge.packager import _parse_central_directory, _raw_payload


def stdlib_template(entries: dict[str, bytes], method=zipfile.ZIP_DEFLATED) -> bytes:
    """Template built by an independent writer (the stdlib)."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", method) as archive:
        for name, data in entries.items():
            archive.writestr(name, data)
    return buf.getvalue()


TEMPLATE_ENTRIES = {
    "META-INF/BUNDLE.MF": b"Engine-Version: 5\nVendor: acme\n",
    "engine/Main.class": b"\xca\xfe\xba\xbe" + bytes(range(256)) * 4,
    "res/icon.png": b"\x89PNG fake image bytes",
    "res/strings.txt": b"hello hello hello hello hello",
}

BUNDLE_PLACEMENTS = [
    ("content/index.bin", b"MCIX\x00\x01fake-index"),
    ("content/content.bin", b"MCCT\x00\x01fake-content" * 9),
    ("content/theme.bin", b"MCTH\x00\x01fake-theme"),
    ("content/font.bin", b"MCFN\x00\x01fake-font"),
]


@pytest.fixture
def template() -> bytes:
    return stdlib_template(TEMPLATE_ENTRIES)


def test_identity_injection_preserves_payloads(template):
    out = inject(InjectionPlan(template=template, deterministic=False))
    assert extract_all(out) == TEMPLATE_ENTRIES
    # Raw pass-through: the compressed payloads were copied, not recoded.
    template_raw = {e.path: _raw_payload(template, e)
                    for e in _parse_central_directory(template)}
    out_raw = {e.path: _raw_payload(out, e)
               for e in _parse_central_directory(out)}
    assert out_raw == template_raw


def test_bundle_placement_roundtrip(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS))
    out = inject(plan)
    extracted = extract_all(out)
    for path, data in BUNDLE_PLACEMENTS:
        assert extracted[path] == data
    for path, data in TEMPLATE_ENTRIES.items():
        assert extracted[path] == data


def test_deterministic_mode_reproducible(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS),
                         metadata_updates=[("Bundle-Pages", "4")])
    first = inject(plan)
    second = inject(plan)
    assert hashlib.sha256(first).digest() == hashlib.sha256(second).digest()
    # Sorted entry order and epoch timestamps.
    paths = [e.path for e in list_entries(first)]
    assert paths == sorted(paths)
    with zipfile.ZipFile(io.BytesIO(first)) as archive:
        assert {info.date_time for info in archive.infolist()} == {(1980, 1, 1, 0, 0, 0)}


def test_placements_stored_in_deterministic_mode(template):
    out = inject(InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS)))
    methods = {e.path: e.method for e in list_entries(out)}
    for path, _data in BUNDLE_PLACEMENTS:
        assert methods[path] == "stored"
    assert methods["engine/Main.class"] == "deflate"  # template entry kept as-is


def test_interop_with_stdlib_reader(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS),
                         metadata_updates=[("Bundle-Pages", "4")])
    out = inject(plan)
    with zipfile.ZipFile(io.BytesIO(out)) as archive:
        assert archive.testzip() is None
        for path, data in BUNDLE_PLACEMENTS:
            assert archive.read(path) == data
        manifest = archive.read("META-INF/BUNDLE.MF").decode()
    assert "Bundle-Pages: 4" in manifest


def test_reads_stored_templates(template):
    stored = stdlib_template(TEMPLATE_ENTRIES, method=zipfile.ZIP_STORED)
    assert extract_all(stored) == TEMPLATE_ENTRIES
    out = inject(InjectionPlan(template=stored, placements=[("x.bin", b"x")]))
    assert extract_entry(out, "x.bin") == b"x"


# -- listing -----------------------------------------------------------------

def test_list_entries_crc_and_method():
    archive = stdlib_template({"a.txt": b"abc"}, method=zipfile.ZIP_STORED)
    entries = list_entries(archive)
    assert len(entries) == 1
    entry = entries[0]
    assert entry.path == "a.txt"
    assert entry.uncompressed_size == 3
    assert entry.crc32 == 0x352441C2
    assert entry.method == "stored"


def test_list_entries_empty_archive():
    empty = stdlib_template({})
    assert list_entries(empty) == []


def test_truncated_central_directory():
    archive = bytearray(stdlib_template(TEMPLATE_ENTRIES))
    # Cut bytes out of the central directory, keeping the end record intact.
    del archive[-60:-22]
    with pytest.raises(ArchiveError, match="central directory"):
        list_entries(bytes(archive))


def test_not_an_archive():
    with pytest.raises(ArchiveError, match="end-of-central-directory"):
        list_entries(b"this is not a zip file")


# -- plan validation -----------------------------------------------------------

def test_duplicate_placement_rejected(template):
    plan = InjectionPlan(template=template,
                         placements=[("a.bin", b"1"), ("a.bin", b"2")])
    with pytest.raises(ArchiveError, match="collision"):
        inject(plan)


@pytest.mark.parametrize("path", ["/abs.bin", "a/../b.bin", "back\\slash.bin", ""])
def test_bad_placement_paths(template, path):
    with pytest.raises(ArchiveError):
        inject(InjectionPlan(template=template, placements=[(path, b"x")]))


def test_malformed_template():
    with pytest.raises(ArchiveError):
        inject(InjectionPlan(template=b"garbage", placements=[("a", b"b")]))


# -- metadata manifest -----------------------------------------------------------

def test_metadata_update_and_append(template):
    plan = InjectionPlan(template=template,
                         metadata_updates=[("Vendor", "updated"), ("New-Key", "v1")])
    out = inject(plan)
    text = extract_entry(out, "META-INF/BUNDLE.MF").decode()
    assert text == "Engine-Version: 5\nVendor: updated\nNew-Key: v1\n"


def test_metadata_created_when_template_lacks_it():
    template = stdlib_template({"engine/Main.class": b"x"})
    out = inject(InjectionPlan(template=template, metadata_updates=[("K", "v")]))
    assert extract_entry(out, "META-INF/BUNDLE.MF") == b"K: v\n"


def test_metadata_applies_to_placed_manifest(template):
    plan = InjectionPlan(
        template=template,
        placements=[("META-INF/BUNDLE.MF", b"Base: 1\n")],
        metadata_updates=[("Base", "2")],
    )
    out = inject(plan)
    assert extract_entry(out, "META-INF/BUNDLE.MF") == b"Base: 2\n"


def test_custom_metadata_path(template):
    plan = InjectionPlan(template=template, metadata_path="meta/info.txt",
                         metadata_updates=[("A", "b")])
    out = inject(plan)
    assert extract_entry(out, "meta/info.txt") == b"A: b\n"


def test_parse_and_apply_metadata_helpers():
    text = "A: 1\nB: 2\n"
    assert parse_metadata(text) == [("A", "1"), ("B", "2")]
    assert apply_metadata_updates(text, [("B", "3"), ("C", "4")]) == "A: 1\nB: 3\nC: 4\n"


# -- verification -----------------------------------------------------------------

def test_verify_fresh_injection(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS),
                         metadata_updates=[("Bundle-Pages", "4")])
    out = inject(plan)
    assert verify_injection(out, plan).ok


def test_verify_detects_flipped_payload(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS))
    out = bytearray(inject(plan))
    needle = BUNDLE_PLACEMENTS[1][1]
    at = out.find(needle)
    out[at] ^= 0xFF
    report = verify_injection(bytes(out), plan)
    assert any(f.code == "crc-mismatch" and "content/content.bin" in f.message
               for f in report.findings)


def test_verify_detects_stale_metadata(template):
    plan = InjectionPlan(template=template, metadata_updates=[("Vendor", "updated")])
    out = inject(plan)
    # Rebuild with the old manifest text, as if the update had been reverted.
    reverted = inject(InjectionPlan(
        template=out, placements=[("META-INF/BUNDLE.MF", TEMPLATE_ENTRIES["META-INF/BUNDLE.MF"])]))
    report = verify_injection(reverted, plan)
    assert [f.code for f in report.findings] == ["stale-key"]


def test_verify_detects_missing_placement(template):
    plan = InjectionPlan(template=template, placements=[("content/x.bin", b"x")])
    out = inject(InjectionPlan(template=template))  # forgot the placement
    report = verify_injection(out, plan)
    assert [f.code for f in report.findings] == ["missing-placement"]


# -- idempotence and random plans ---------------------------------------------------

def test_injection_idempotent(template):
    plan = InjectionPlan(template=template, placements=list(BUNDLE_PLACEMENTS),
                         metadata_updates=[("Bundle-Pages", "4")])
    once = inject(plan)
    twice = inject(InjectionPlan(template=once, placements=plan.placements,
                                 metadata_updates=plan.metadata_updates))
    assert extract_all(once) == extract_all(twice)
    assert verify_injection(twice, plan).ok


def random_plan(rng: random.Random) -> InjectionPlan:
    template_entries = {
        f"dir{rng.randrange(3)}/file{i}.bin": bytes(rng.randrange(256)
                                                    for _ in range(rng.randrange(0, 400)))
        for i in range(rng.randrange(1, 6))
    }
    method = rng.choice([zipfile.ZIP_STORED, zipfile.ZIP_DEFLATED])
    placements = []
    used = set()
    for i in range(rng.randrange(1, 6)):
        if template_entries and rng.random() < 0.3:
            path = rng.choice(sorted(template_entries))  # shadow a template entry
        else:
            path = f"content/p{i}.bin"
        if path in used:
            continue
        used.add(path)
        placements.append((path, bytes(rng.randrange(256)
                                       for _ in range(rng.randrange(0, 300)))))
    updates = [(f"Key-{i}", f"value {rng.randrange(100)}")
               for i in range(rng.randrange(0, 3))]
    return InjectionPlan(
        template=stdlib_template(template_entries, method),
        placements=placements,
        metadata_updates=updates,
        deterministic=rng.random() < 0.7,
    )


@pytest.mark.parametrize("seed", range(15))
def test_random_plan_fidelity(seed):
    rng = random.Random(seed)
    plan = random_plan(rng)
    out = inject(plan)
    assert verify_injection(out, plan).ok
    extracted = extract_all(out)
    shadowed = {path for path, _data in plan.placements}
    if plan.metadata_updates:
        shadowed.add(plan.metadata_path)
    for path, data in plan.placements:
        if path == plan.metadata_path and plan.metadata_updates:
            continue
        assert extracted[path] == data
    for entry in zipfile.ZipFile(io.BytesIO(plan.template)).infolist():
        if entry.filename not in shadowed:
            assert extracted[entry.filename] == zipfile.ZipFile(
                io.BytesIO(plan.template)).read(entry.filename)
    # independent extractor agrees
    with zipfile.ZipFile(io.BytesIO(out)) as archive:
        assert archive.testzip() is None
        assert sorted(archive.namelist()) == sorted(extracted)
