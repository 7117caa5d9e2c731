"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (written straight to the real stdout so the verdicts
stay visible under pytest's capture).

Run with: pytest tests/test_acceptance.py -v
"""

import contextlib
import hashlib
import io
import itertools
import random
import sys
import time
import zipfile

import pytest

from contentforge import engine as eng
from contentforge.bundle_codec import (
    CONTENT_HEADER_SIZE,
    decode_index,
    decode_theme,
    encode_bundle,
    read_page,
    verify_bundle,
)
from contentforge.cli import render_page
from contentforge.content_model import (
    ContentItem,
    ContentKind,
    PageNode,
    ProjectManifest,
    flatten,
)
from contentforge.engine import BundleHandle, Event, EventType
from contentforge.glyphs import JoiningClass, generate_test_font
from contentforge.packager import InjectionPlan, extract_all, inject, verify_injection
from contentforge.shaping import measure, resolve_form, shape_text
from contentforge.wire import CountingSource, StreamSource

from conftest import GOLDEN_DIR
from generators import random_events, random_manifest, random_word
from test_engine import BASE_THEME, check_invariants, naive_search_oracle
from test_packager import random_plan
from test_shaping import ALPHABET, TRUTH_TABLE, _oracle_forms, _shaped_forms

ATLAS = generate_test_font(sorted((ord(c), cls) for c, cls in ALPHABET.items()))


@contextlib.contextmanager
def criterion(name: str):
    started = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}", file=sys.__stdout__, flush=True)
        raise
    elapsed = time.monotonic() - started
    print(f"[PASS] {name} ({elapsed:.2f}s)", file=sys.__stdout__, flush=True)


def test_bundle_roundtrip_200_manifests():
    with criterion("bundle roundtrip: 200 generated manifests, zero logical diffs"):
        started = time.monotonic()
        for seed in range(200):
            manifest, _assets = random_manifest(random.Random(seed),
                                                max_pages=50, max_items=8)
            files = encode_bundle(manifest, ATLAS, {})
            index = decode_index(files.index_bytes)
            flat = flatten(manifest)
            assert [(e.page_id, e.parent_id, e.child_count, e.title)
                    for e in index.entries] == [
                (p.page_id, parent, len(p.children), p.title) for p, parent in flat
            ]
            for page, _parent in flat:
                source = StreamSource(io.BytesIO(files.content_bytes))
                assert tuple(read_page(source, index, page.page_id)) == page.items
            assert decode_theme(files.theme_bytes) == manifest.theme
        elapsed = time.monotonic() - started
        assert elapsed < 30, f"roundtrip acceptance took {elapsed:.1f}s (budget 30s)"


def test_bounded_read_seek_on_200_page_bundle():
    with criterion("bounded-read seek: 200 pages x ~4KiB, first/middle/last"):
        pages = [
            PageNode(i + 1, f"page {i + 1}",
                     items=(ContentItem.text_item("a" * 4000),))
            for i in range(200)
        ]
        manifest = ProjectManifest("big", "1", tuple(pages), BASE_THEME, "f", "a")
        files = encode_bundle(manifest, ATLAS, {})
        index = decode_index(files.index_bytes)
        assert len(index.entries) == 200
        for position in (0, 100, 199):
            entry = index.entries[position]
            assert entry.content_length >= 4000  # ~4 KiB per page
            source = CountingSource(StreamSource(io.BytesIO(files.content_bytes)))
            records = read_page(source, index, entry.page_id)
            assert records == [ContentItem.text_item("a" * 4000)]
            assert source.bytes_read <= CONTENT_HEADER_SIZE + entry.content_length + 16
            assert source.bytes_skipped == entry.content_offset
            assert source.bytes_skipped == sum(
                e.content_length for e in index.entries[:position])


def test_shaping_truth_table_and_word_oracle():
    with criterion("shaping: 48-case truth table + all words <= 4 letters"):
        started = time.monotonic()
        for (prev, this, nxt), expected in TRUTH_TABLE.items():
            assert resolve_form(prev, this, nxt) is expected
        letters = sorted(ALPHABET)
        words = 0
        for length in range(1, 5):
            for combo in itertools.product(letters, repeat=length):
                word = "".join(combo)
                assert _shaped_forms(ATLAS, word) == _oracle_forms(word), word
                words += 1
        assert words == 1554
        elapsed = time.monotonic() - started
        assert elapsed < 5, f"shaping acceptance took {elapsed:.1f}s (budget 5s)"


def test_wrap_safety_1000_random_pairs():
    with criterion("wrap safety: 1000 random (text, width) pairs"):
        rng = random.Random(20260809)
        chars = sorted(ALPHABET) + [" "]
        widest = ATLAS.max_advance()
        for _ in range(1000):
            text = "".join(rng.choice(chars) for _ in range(rng.randint(0, 80)))
            max_width = rng.randint(widest, widest * 12)
            layout = shape_text(ATLAS, text, max_width)
            for line in layout.lines:
                left = min(pg.x for pg in line)
                right = max(pg.x + pg.glyph.advance for pg in line)
                assert left >= 0 and right <= max_width
                assert right - left <= max_width
            assert layout.max_line_width <= max_width
            assert measure(ATLAS, text) == shape_text(ATLAS, text, None).max_line_width


def test_rasterization_golden(fixture_handle):
    with criterion("rasterization golden: fixture page 2 at width 240"):
        canvas = render_page(fixture_handle, 2, 240)
        golden = (GOLDEN_DIR / "fixture_page_240.ppm").read_bytes()
        assert canvas.to_ppm() == golden


def test_packager_fidelity_and_determinism():
    with criterion("packager: 50 random plans roundtrip + deterministic + interop"):
        for seed in range(50):
            plan = random_plan(random.Random(seed))
            out = inject(plan)
            assert verify_injection(out, plan).ok
            extracted = extract_all(out)
            for path, data in plan.placements:
                if path == plan.metadata_path and plan.metadata_updates:
                    continue
                assert extracted[path] == data
            shadowed = {p for p, _d in plan.placements}
            if plan.metadata_updates:
                shadowed.add(plan.metadata_path)
            with zipfile.ZipFile(io.BytesIO(plan.template)) as template:
                for name in template.namelist():
                    if name not in shadowed:
                        assert extracted[name] == template.read(name)
            if plan.deterministic:
                assert hashlib.sha256(inject(plan)).digest() == hashlib.sha256(out).digest()
        # golden archive: a deterministic pack consumed by the stdlib extractor
        plan = random_plan(random.Random(7))
        plan.deterministic = True
        out = inject(plan)
        with zipfile.ZipFile(io.BytesIO(out)) as archive:
            assert archive.testzip() is None
            assert extract_all(out) == {name: archive.read(name)
                                        for name in archive.namelist()}


def test_engine_media_rules_scripted():
    with criterion("engine media rules: auto-select, autoplay once, k-toggle cycles"):
        # auto-select-first and stop-then-play toggling over two sounds
        page = PageNode(1, "p", items=(
            ContentItem.media_item(ContentKind.AUDIO, "snd/a1.mid", ""),
            ContentItem.media_item(ContentKind.AUDIO, "snd/a2.mid", ""),
        ))
        manifest = ProjectManifest("t", "1", (page,), BASE_THEME, "f", "a")
        handle = BundleHandle.from_files(encode_bundle(manifest, ATLAS, {}))
        state, _ = eng.init(handle, eng.Viewport(120, 96))
        state, effects = eng.handle_event(state, Event(EventType.SELECT))
        assert state.media.audio_index == 0
        assert effects == [eng.PlayAudio("snd/a1.mid")]
        state, effects = eng.handle_event(state, Event(EventType.TOGGLE_AUDIO))
        assert effects == [eng.StopAudio(), eng.PlayAudio("snd/a2.mid")]
        state, effects = eng.handle_event(state, Event(EventType.TOGGLE_AUDIO))
        assert effects == [eng.StopAudio(), eng.PlayAudio("snd/a1.mid")]

        # autoplay fires exactly once, only when the icon scrolls into view
        atlas = generate_test_font([(ord("a"), JoiningClass.NON_JOINING)])
        page = PageNode(1, "p", items=(
            ContentItem.text_item("aaa aaa aaa"),
            ContentItem.media_item(ContentKind.AUDIO, "snd/x.mid", ""),
        ))
        manifest = ProjectManifest("t", "1", (page,), BASE_THEME, "f", "a")
        handle = BundleHandle.from_files(encode_bundle(manifest, atlas, {}))
        state, _ = eng.init(handle, eng.Viewport(24, 24))
        plays = []
        state, effects = eng.handle_event(state, Event(EventType.SELECT))
        plays += [e for e in effects if isinstance(e, eng.PlayAudio)]
        for _ in range(8):
            state, effects = eng.handle_event(state, Event(EventType.DOWN))
            plays += [e for e in effects if isinstance(e, eng.PlayAudio)]
        assert plays == [eng.PlayAudio("snd/x.mid")]

        # k consecutive toggles return the selection to its start
        for k in (1, 2, 3):
            page = PageNode(1, "p", items=tuple(
                ContentItem.media_item(ContentKind.AUDIO, f"snd/{i}.mid", "")
                for i in range(k)))
            manifest = ProjectManifest("t", "1", (page,), BASE_THEME, "f", "a")
            handle = BundleHandle.from_files(encode_bundle(manifest, ATLAS, {}))
            state, _ = eng.init(handle, eng.Viewport(120, 96))
            state, _ = eng.handle_event(state, Event(EventType.SELECT))
            assert state.media.audio_index == 0
            for _ in range(k):
                state, _ = eng.handle_event(state, Event(EventType.TOGGLE_AUDIO))
            assert state.media.audio_index == 0


def test_engine_random_sequences_20_bundles():
    with criterion("engine totality: 500-step random sequences over 20 bundles"):
        for seed in range(20):
            rng = random.Random(seed)
            manifest, _assets = random_manifest(rng, max_pages=12, max_items=5)
            handle = BundleHandle.from_files(encode_bundle(manifest, ATLAS, {}))
            state, _ = eng.init(handle, eng.Viewport(rng.choice([24, 64, 120]),
                                                     rng.choice([24, 48, 96])))
            check_invariants(state)
            for event in random_events(rng, 500):
                state, _effects = eng.handle_event(state, event)
                check_invariants(state)


def test_search_oracle_50_bundles_20_queries():
    with criterion("search oracle: 50 bundles x 20 queries incl. zero-match"):
        hits = zero_matches = 0
        for seed in range(50):
            rng = random.Random(seed)
            manifest, _assets = random_manifest(rng, max_pages=8, max_items=4)
            files = encode_bundle(manifest, ATLAS, {})
            handle = BundleHandle.from_files(files)
            texts = [item.text for page, _ in flatten(manifest)
                     for item in page.items if item.kind is ContentKind.TEXT]
            queries = []
            for i in range(20):
                if texts and i % 2 == 0:
                    text = rng.choice(texts)
                    start = rng.randrange(len(text))
                    queries.append(text[start:start + rng.randint(1, 6)])
                else:
                    queries.append(random_word(rng, 1, 5))
            for query in queries:
                got = [(m.page_id, m.item_index, m.char_offset)
                       for m in eng.search_content(handle.index, handle.open_reader,
                                                   query)]
                assert got == naive_search_oracle(handle, query)
                if got:
                    hits += 1
                else:
                    zero_matches += 1
        # both hit and zero-match queries must have been exercised
        assert hits > 0 and zero_matches > 0


def test_everything_passed_without_secondary():
    with criterion("primary component self-contained (no viewer required)"):
        import contentforge

        assert contentforge.__version__
        assert verify_bundle is not None
