"""Command line front end: compile, pack, render, search, serve, inspect.

Exit codes: 0 success, 2 bad input (manifest, validation, arguments),
3 packaging failure, 4 unknown page.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle_codec import (
    BUNDLE_FILE_NAMES,
    encode_bundle,
    load_bundle_dir,
    verify_bundle,
    write_bundle_dir,
)
from .content_model import (
    ContentKind,
    ManifestError,
    ProjectManifest,
    flatten,
    parse_manifest,
    validate,
)
from .engine import BundleHandle, compute_page_rows, fold_simple, search_content
from .glyphs import (
    FONT_MAGIC,
    FontError,
    GlyphAtlas,
    JoiningClass,
    decode_font,
    generate_test_font,
)
from .packager import ArchiveError, InjectionPlan, inject, list_entries
from .raster import Canvas, draw_layout
from .shaping import DEFAULT_ARABIC_JOINING, shape_text
from .wire import CodecError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PACK = 3
EXIT_UNKNOWN_PAGE = 4

_CLASS_NAMES = {
    "dual": JoiningClass.DUAL,
    "right": JoiningClass.RIGHT,
    "nonjoining": JoiningClass.NON_JOINING,
}


def load_atlas(path: Path) -> GlyphAtlas:
    """Load a font source: either an MCFN binary or a JSON alphabet spec.

    The JSON form lists letters and their joining classes:

        {"line_height": 12, "baseline": 9, "space_width": 4,
         "include_default_arabic": true,
         "letters": [{"char": "A", "class": "nonjoining"}, ...]}
    """
    data = path.read_bytes()
    if data[:4] == FONT_MAGIC:
        return decode_font(data)
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FontError(f"{path}: neither an MCFN font nor a JSON font spec ({exc})") from None
    if not isinstance(doc, dict):
        raise FontError(f"{path}: font spec must be a JSON object")
    alphabet: dict[int, JoiningClass] = {}
    if doc.get("include_default_arabic"):
        alphabet.update(DEFAULT_ARABIC_JOINING)
    for i, letter in enumerate(doc.get("letters", [])):
        where = f"{path}: letters[{i}]"
        if not isinstance(letter, dict):
            raise FontError(f"{where}: must be an object")
        if "codepoint" in letter:
            codepoint = letter["codepoint"]
            if not isinstance(codepoint, int):
                raise FontError(f"{where}: 'codepoint' must be an integer")
        elif "char" in letter and isinstance(letter["char"], str) and len(letter["char"]) == 1:
            codepoint = ord(letter["char"])
        else:
            raise FontError(f"{where}: needs 'codepoint' or a one-character 'char'")
        cls = _CLASS_NAMES.get(str(letter.get("class", "")).lower())
        if cls is None:
            raise FontError(f"{where}: 'class' must be dual, right or nonjoining")
        alphabet[codepoint] = cls
    if not alphabet:
        raise FontError(f"{path}: font spec lists no letters")
    return generate_test_font(
        sorted(alphabet.items()),
        line_height=int(doc.get("line_height", 12)),
        baseline=int(doc.get("baseline", 9)),
        space_width=int(doc.get("space_width", 4)),
    )


def _collect_assets(manifest: ProjectManifest, asset_root: Path) -> dict[str, bytes]:
    refs: set[str] = set()
    for page, _parent in flatten(manifest):
        for item in page.items:
            if item.kind in (ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO):
                refs.add(item.asset_ref)
    for ref in (manifest.theme.splash_image, manifest.theme.background_image,
                manifest.theme.background_music):
        if ref:
            refs.add(ref)
    return {ref: (asset_root / ref).read_bytes() for ref in sorted(refs)}


def _list_asset_files(asset_root: Path) -> set[str]:
    if not asset_root.is_dir():
        return set()
    return {
        p.relative_to(asset_root).as_posix()
        for p in asset_root.rglob("*")
        if p.is_file()
    }


def cmd_compile(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest = parse_manifest(manifest_path.read_text("utf-8"))
    except OSError as exc:
        print(f"error: cannot read {manifest_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ManifestError as exc:
        print(f"{manifest_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    base = manifest_path.parent
    asset_root = base / manifest.asset_dir
    report = validate(manifest, _list_asset_files(asset_root))
    if not report.ok:
        for finding in report.findings:
            print(f"{manifest_path}: {finding.code}: {finding.message}", file=sys.stderr)
        return EXIT_INPUT

    font_path = base / manifest.font_source
    if not font_path.is_file():
        print(f"error: font source not found: {font_path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        atlas = load_atlas(font_path)
    except FontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    assets = _collect_assets(manifest, asset_root)
    files = encode_bundle(manifest, atlas, assets)
    out_dir = Path(args.output)
    write_bundle_dir(files, out_dir)

    page_count = len(flatten(manifest))
    total = (len(files.index_bytes) + len(files.content_bytes)
             + len(files.theme_bytes) + len(files.font_bytes))
    print(f"compiled {page_count} pages -> {out_dir}")
    print(f"  index.bin   {len(files.index_bytes):>8} bytes")
    print(f"  content.bin {len(files.content_bytes):>8} bytes")
    print(f"  theme.bin   {len(files.theme_bytes):>8} bytes")
    print(f"  font.bin    {len(files.font_bytes):>8} bytes")
    print(f"  assets      {len(files.assets)} files")
    print(f"  total       {total} bundle bytes")
    return EXIT_OK


DEFAULT_PATH_MAP = {
    "index.bin": "content/index.bin",
    "content.bin": "content/content.bin",
    "theme.bin": "content/theme.bin",
    "font.bin": "content/font.bin",
}


def cmd_pack(args: argparse.Namespace) -> int:
    bundle_dir = Path(args.bundle_dir)
    try:
        files = load_bundle_dir(bundle_dir)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = verify_bundle(files)
    if not report.ok:
        for finding in report.findings:
            print(f"{bundle_dir}: {finding.code}: {finding.message}", file=sys.stderr)
        return EXIT_INPUT

    path_map = dict(DEFAULT_PATH_MAP)
    for override in args.path_map or []:
        key, sep, value = override.partition("=")
        if not sep or key not in path_map:
            print(f"error: --path-map expects one of {', '.join(path_map)}=dest, got {override!r}",
                  file=sys.stderr)
            return EXIT_INPUT
        path_map[key] = value

    placements = [
        (path_map["index.bin"], files.index_bytes),
        (path_map["content.bin"], files.content_bytes),
        (path_map["theme.bin"], files.theme_bytes),
        (path_map["font.bin"], files.font_bytes),
    ]
    asset_prefix = args.asset_prefix.rstrip("/")
    for ref, data in files.assets.items():
        placements.append((f"{asset_prefix}/{ref}", data))

    updates = []
    for meta in args.meta or []:
        key, sep, value = meta.partition("=")
        if not sep:
            print(f"error: --meta expects key=value, got {meta!r}", file=sys.stderr)
            return EXIT_INPUT
        updates.append((key, value))

    try:
        template = Path(args.template).read_bytes()
        plan = InjectionPlan(
            template=template,
            placements=placements,
            metadata_updates=updates,
            deterministic=not args.no_deterministic,
        )
        archive = inject(plan)
    except OSError as exc:
        print(f"error: cannot read template: {exc}", file=sys.stderr)
        return EXIT_PACK
    except ArchiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PACK

    Path(args.output).write_bytes(archive)
    print(f"packed {len(placements)} placements into {args.output}")
    for summary in list_entries(archive):
        print(f"  {summary.path}  {summary.uncompressed_size} bytes  "
              f"crc32 {summary.crc32:08X}  {summary.method}")
    return EXIT_OK


def render_page(handle: BundleHandle, page_id: int, width: int) -> Canvas:
    """Offline render of one page: header bar with the title, then the rows."""
    atlas = handle.atlas
    theme = handle.theme
    if width < atlas.max_advance():
        raise ValueError(f"width {width} is below the widest glyph advance "
                         f"({atlas.max_advance()})")
    records = tuple(handle.read_page(page_id))
    rows, total_height = compute_page_rows(
        records, atlas, width, theme.text_palette, theme.text_default)
    header_height = atlas.line_height + 4
    canvas = Canvas.filled(width, header_height + total_height, theme.background)
    canvas.fill_rect(0, 0, width, header_height, theme.header)
    title = handle.index.entry(page_id).title
    title_layout = shape_text(atlas, title, None, theme.background)
    draw_layout(canvas, title_layout, (width - 2) - title_layout.max_line_width, 2)
    for row in rows:
        if row.layout is not None:
            draw_layout(canvas, row.layout, 0, header_height + row.top)
        else:
            canvas.fill_rect(width - 14, header_height + row.top + 2, 12, 12,
                             theme.highlight)
    return canvas


def cmd_render(args: argparse.Namespace) -> int:
    try:
        handle = BundleHandle.from_dir(args.bundle_dir)
    except (CodecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not handle.index.has_page(args.page):
        print(f"error: page {args.page} is not in the bundle", file=sys.stderr)
        return EXIT_UNKNOWN_PAGE
    try:
        canvas = render_page(handle, args.page, args.width)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    Path(args.output).write_bytes(canvas.to_ppm())
    print(f"rendered page {args.page} at {canvas.width}x{canvas.height} -> {args.output}")
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    if not fold_simple(args.query):
        print("error: query must not be empty", file=sys.stderr)
        return EXIT_INPUT
    try:
        handle = BundleHandle.from_dir(args.bundle_dir)
    except (CodecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for match in search_content(handle.index, handle.open_reader, args.query):
        snippet = match.snippet.replace("\t", " ").replace("\n", " ")
        print(f"{match.page_id}\t{match.item_index}\t{match.char_offset}\t{snippet}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceContext, run

    static_dir = Path(args.static) if args.static else None
    if static_dir is not None and not static_dir.is_dir():
        print(f"error: static dir not found: {static_dir}", file=sys.stderr)
        return EXIT_INPUT
    try:
        files = load_bundle_dir(args.bundle_dir)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = verify_bundle(files)
    if not report.ok:
        for finding in report.findings:
            print(f"{args.bundle_dir}: {finding.code}: {finding.message}", file=sys.stderr)
        return EXIT_INPUT
    context = ServiceContext.from_dir(
        args.bundle_dir, static_dir=static_dir,
        idle_timeout=args.idle_timeout * 60)
    try:
        run(context, args.host, args.port)
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    target = Path(args.target)
    if target.is_dir():
        try:
            files = load_bundle_dir(target)
        except CodecError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        report = verify_bundle(files)
        for name, blob in zip(BUNDLE_FILE_NAMES, (files.index_bytes, files.content_bytes,
                                                  files.theme_bytes, files.font_bytes)):
            print(f"{name}: {len(blob)} bytes")
        print(f"assets: {len(files.assets)} files")
        if report.ok:
            from .bundle_codec import decode_index

            index = decode_index(files.index_bytes)
            print(f"pages: {len(index.entries)}")
            print("bundle OK")
            return EXIT_OK
        for finding in report.findings:
            print(f"finding: {finding.code}: {finding.message}")
        return EXIT_INPUT
    if target.is_file():
        try:
            entries = list_entries(target.read_bytes())
        except ArchiveError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PACK
        for summary in entries:
            print(f"{summary.path}\t{summary.uncompressed_size}\t"
                  f"{summary.crc32:08X}\t{summary.method}")
        print(f"{len(entries)} entries")
        return EXIT_OK
    print(f"error: no such file or directory: {target}", file=sys.stderr)
    return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contentforge",
        description="Compile multimedia page trees into binary bundles and run them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a manifest into a bundle directory")
    p.add_argument("manifest", help="path to the project manifest (JSON)")
    p.add_argument("-o", "--output", required=True, help="bundle output directory")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("pack", help="inject a bundle into a template archive")
    p.add_argument("bundle_dir", help="compiled bundle directory")
    p.add_argument("--template", required=True, help="template ZIP/JAR file")
    p.add_argument("-o", "--output", required=True, help="output archive path")
    p.add_argument("--path-map", action="append", metavar="FILE=DEST",
                   help="override an in-archive path (e.g. index.bin=data/idx.bin)")
    p.add_argument("--asset-prefix", default="content/assets",
                   help="in-archive directory for assets (default content/assets)")
    p.add_argument("--meta", action="append", metavar="KEY=VALUE",
                   help="set a key in the embedded metadata manifest")
    p.add_argument("--no-deterministic", action="store_true",
                   help="allow deflate and keep template timestamps")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("render", help="render one page to a PPM image")
    p.add_argument("bundle_dir")
    p.add_argument("--page", type=int, required=True)
    p.add_argument("--width", type=int, default=240)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("search", help="full-text search over a bundle")
    p.add_argument("bundle_dir")
    p.add_argument("query")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("serve", help="serve a bundle over HTTP with live sessions")
    p.add_argument("bundle_dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--idle-timeout", type=float, default=30,
                   help="session idle timeout in minutes (default 30)")
    p.add_argument("--static", help="directory of viewer static files to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("inspect", help="summarize a bundle directory or archive")
    p.add_argument("target", help="bundle directory or ZIP file")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
