"""Command-line entry points for the session/anchor embedding extractor."""

from __future__ import annotations

import argparse
import sys

from vaextract.audio import AudioReadError
from vaextract.encoders import (
    AUDIO_BACKENDS,
    SENTENCE_BACKENDS,
    TEXT_BACKENDS,
    EncoderUnavailableError,
)
from vaextract.export import (
    ExportConfig,
    RawSessionError,
    export_anchor_embeddings,
    export_session,
    read_raw_session,
)


def cmd_session(args) -> int:
    raw = read_raw_session(args.meta, args.commands)
    config = ExportConfig(
        text_backend=args.text_backend,
        audio_backend=args.audio_backend,
        sentence_backend=args.sentence_backend,
        textual_source=args.textual_source,
    )
    manifest = export_session(raw, args.out, config)
    sys.stdout.write(f"wrote {manifest}\n")
    return 0


def cmd_anchors(args) -> int:
    out = export_anchor_embeddings(args.anchors, args.out, args.sentence_backend)
    sys.stdout.write(f"wrote {out}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaextract",
        description="Embed raw voice-assistant sessions into pipeline input files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sess = sub.add_parser("session", help="embed one session's clips and transcripts")
    p_sess.add_argument("--meta", required=True, help="session metadata JSON")
    p_sess.add_argument("--commands", required=True, help="command table CSV")
    p_sess.add_argument("--out", required=True)
    p_sess.add_argument("--text-backend", choices=sorted(TEXT_BACKENDS), default="hash")
    p_sess.add_argument("--audio-backend", choices=sorted(AUDIO_BACKENDS), default="hash")
    p_sess.add_argument(
        "--sentence-backend", choices=sorted(SENTENCE_BACKENDS), default="hash"
    )
    p_sess.add_argument(
        "--textual-source",
        choices=["sentence", "token_mean"],
        default="sentence",
        help="which encoder fills the manifest's textual slot",
    )
    p_sess.set_defaults(func=cmd_session)

    p_anc = sub.add_parser("anchors", help="embed an anchor command file")
    p_anc.add_argument("--anchors", required=True, help="anchor JSON file")
    p_anc.add_argument("--out", required=True)
    p_anc.add_argument(
        "--sentence-backend", choices=sorted(SENTENCE_BACKENDS), default="hash"
    )
    p_anc.set_defaults(func=cmd_anchors)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RawSessionError, AudioReadError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except EncoderUnavailableError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
