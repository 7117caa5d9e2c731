import json
import string
from pathlib import Path

import pytest

from contentforge.bundle_codec import encode_bundle
from contentforge.content_model import parse_manifest
from contentforge.engine import BundleHandle
from contentforge.glyphs import JoiningClass, generate_test_font
from contentforge.shaping import DEFAULT_ARABIC_JOINING

GOLDEN_DIR = Path(__file__).parent / "golden"

FIXTURE_ASCII = string.ascii_lowercase + string.digits + "+@./:-"

FIXTURE_FONT_SPEC = {
    "line_height": 12,
    "baseline": 9,
    "space_width": 4,
    "include_default_arabic": True,
    "letters": [{"char": c, "class": "nonjoining"} for c in FIXTURE_ASCII],
}

FIXTURE_ASSETS = {
    "img/logo.png": b"\x89PNG-logo",
    "snd/a1.mid": b"MThd-a1",
    "snd/a2.mid": b"MThd-a2",
    "vid/clip.3gp": b"3gp-clip",
}

FIXTURE_MANIFEST = {
    "title": "Travel Guide",
    "version": "1.0",
    "font_source": "font.json",
    "asset_dir": "assets",
    "theme": {
        "colors": {
            "background": "#FFFFFF",
            "text": "#102030",
            "highlight": "#CC3300",
            "header": "#224488",
        },
        "palette": ["#102030", "#CC3300", "#007700"],
        "splash_enabled": False,
        "splash_image": None,
        "background_image": None,
        "background_music": None,
    },
    "pages": [
        {
            "id": 1,
            "title": "دليل",
            "items": [
                {"kind": "text", "text": "مرحبا بكم",
                 "color_index": 0, "font_id": 0},
                {"kind": "image", "asset_ref": "img/logo.png", "caption": "logo"},
            ],
            "children": [
                {
                    "id": 2,
                    "title": "اصوات",
                    "items": [
                        {"kind": "text", "text": "hello world of sounds",
                         "color_index": 1, "font_id": 0},
                        {"kind": "audio", "asset_ref": "snd/a1.mid", "caption": "first"},
                        {"kind": "audio", "asset_ref": "snd/a2.mid", "caption": "second"},
                    ],
                    "children": [],
                },
                {
                    "id": 3,
                    "title": "تماس",
                    "items": [
                        {"kind": "phone", "value": "+98123456", "label": "office"},
                        {"kind": "email", "value": "info@example.com", "label": "mail"},
                        {"kind": "weblink", "value": "https://example.com", "label": "site"},
                    ],
                    "children": [],
                },
            ],
        },
        {
            "id": 7,
            "title": "جستجو",
            "items": [
                {"kind": "text",
                 "text": "سلام دنیا سلام",
                 "color_index": 2, "font_id": 0},
                {"kind": "video", "asset_ref": "vid/clip.3gp", "caption": "clip"},
            ],
            "children": [],
        },
    ],
}


def build_fixture_atlas():
    alphabet = dict(DEFAULT_ARABIC_JOINING)
    for c in FIXTURE_ASCII:
        alphabet[ord(c)] = JoiningClass.NON_JOINING
    return generate_test_font(sorted(alphabet.items()),
                              line_height=12, baseline=9, space_width=4)


@pytest.fixture(scope="session")
def fixture_atlas():
    return build_fixture_atlas()


@pytest.fixture(scope="session")
def fixture_manifest():
    return parse_manifest(json.dumps(FIXTURE_MANIFEST))


@pytest.fixture(scope="session")
def fixture_files(fixture_manifest, fixture_atlas):
    return encode_bundle(fixture_manifest, fixture_atlas, FIXTURE_ASSETS)


@pytest.fixture
def fixture_handle(fixture_files):
    return BundleHandle.from_files(fixture_files)


@pytest.fixture
def fixture_project(tmp_path):
    """The fixture project written to disk, as the CLI consumes it."""
    root = tmp_path / "project"
    root.mkdir()
    (root / "manifest.json").write_text(
        json.dumps(FIXTURE_MANIFEST, ensure_ascii=False, indent=1), "utf-8")
    (root / "font.json").write_text(json.dumps(FIXTURE_FONT_SPEC), "utf-8")
    for ref, data in FIXTURE_ASSETS.items():
        path = root / "assets" / ref
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    return root
