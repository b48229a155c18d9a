"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 finished but some
records were dead-lettered (or, for ``unmask``, some tokens failed
authentication).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys

from maskron.bloom import (
    DictionaryConfig,
    bloom_load_dictionary,
    load_filter,
    save_filter,
)
from maskron.errors import MaskronError
from maskron.evaluation import load_corpus, score
from maskron.masking import keyring_add, load_keyring, unmask
from maskron.pipeline import KEYRING_ENV, Config, load_config, run_detect, run_mask

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


@contextlib.contextmanager
def _open(path: str | None, mode: str, std):
    if path is None or path == "-":
        yield std.buffer
    else:
        with open(path, mode) as fh:
            yield fh


def _config(args) -> Config:
    return load_config(args.config) if args.config else Config()


def _cmd_stream(args, runner) -> int:
    config = _config(args)
    metrics_path = args.metrics or config.metrics_path
    dead_path = args.dead_letter or config.dead_letter_path
    with contextlib.ExitStack() as stack:
        src = stack.enter_context(_open(args.input, "rb", sys.stdin))
        dst = stack.enter_context(_open(args.output, "wb", sys.stdout))
        dead = stack.enter_context(open(dead_path, "wb")) if dead_path else None
        metrics = runner(src, dst, config, dead_letter=dead)
    if metrics_path:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            fh.write(metrics.to_json() + "\n")
    return EXIT_PARTIAL if metrics.records_dead_lettered else EXIT_OK


def _keyring_path(args) -> str:
    path = args.keyring or os.environ.get(KEYRING_ENV)
    if not path:
        raise MaskronError(f"no keyring: pass --keyring or set ${KEYRING_ENV}")
    return path


def _cmd_unmask(args) -> int:
    keyring = load_keyring(_keyring_path(args))
    status = EXIT_OK
    with _open(args.input, "rb", sys.stdin) as src, _open(args.output, "wb", sys.stdout) as dst:
        for raw in src:
            result = unmask(raw.decode("utf-8"), keyring)
            dst.write(result.text.encode("utf-8"))
            for failure in result.failures:
                logging.error("authentication failed: %s", failure)
                status = EXIT_PARTIAL
            for name, n in result.warnings.items():
                logging.warning("%s: %d token(s) left in place", name, n)
    return status


def _cmd_keygen(args) -> int:
    key_id, salt_id = keyring_add(_keyring_path(args), key=args.kind in ("key", "both"),
                                  salt=args.kind in ("salt", "both"))
    print(json.dumps({"key_id": key_id, "salt_id": salt_id}))
    return EXIT_OK


def _cmd_dict_build(args) -> int:
    cfg = DictionaryConfig(normalization=args.normalization)
    filt = bloom_load_dictionary(args.input, cfg, args.fpr, hash_seed=args.seed)
    save_filter(filt, args.output)
    print(json.dumps({"m": filt.m, "k": filt.k, "n_inserted": filt.n_inserted,
                      "expected_fpr": filt.expected_fpr()}))
    return EXIT_OK


def _cmd_dict_probe(args) -> int:
    filt = load_filter(args.filter)
    cfg = DictionaryConfig(normalization=args.normalization)
    for line in sys.stdin:
        item = line.rstrip("\r\n")
        if item:
            hit = cfg.normalization.apply(item) in filt
            print(f"{item}\t{'maybe' if hit else 'no'}", flush=True)
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _config(args)
    engine = config.build_engine()
    corpus = load_corpus(args.corpus)
    predictions = [engine.detect(doc.text) for doc in corpus]
    report = json.dumps(score(predictions, corpus, args.mode).as_dict(), indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report + "\n")
    print(report)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 already means "dead-lettered records"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maskron", description="Detect and mask PII in text streams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, runner, help_ in (("mask", run_mask, "detect and mask PII"),
                                ("detect", run_detect, "report detections without rewriting")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config")
        p.add_argument("--input", default="-")
        p.add_argument("--output", default="-")
        p.add_argument("--metrics")
        p.add_argument("--dead-letter")
        p.set_defaults(func=lambda a, r=runner: _cmd_stream(a, r))

    p = sub.add_parser("unmask", help="decrypt reversible tokens")
    p.add_argument("--keyring")
    p.add_argument("--input", default="-")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_unmask)

    p = sub.add_parser("keygen", help="add a fresh key and/or salt to a keyring file")
    p.add_argument("--keyring")
    p.add_argument("--kind", choices=("key", "salt", "both"), default="both")
    p.set_defaults(func=_cmd_keygen)

    d = sub.add_parser("dict", help="bloom filter dictionaries").add_subparsers(dest="dict_cmd", required=True)
    p = d.add_parser("build", help="build a filter file from a one-entry-per-line list")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--fpr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalization", choices=("LOWERCASE", "NONE"), default="LOWERCASE")
    p.set_defaults(func=_cmd_dict_build)
    p = d.add_parser("probe", help="query a filter with lines from stdin (debugging)")
    p.add_argument("--filter", required=True)
    p.add_argument("--normalization", choices=("LOWERCASE", "NONE"), default="LOWERCASE")
    p.set_defaults(func=_cmd_dict_probe)

    p = sub.add_parser("eval", help="score the configured detectors on an annotated corpus")
    p.add_argument("--config")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("exact", "overlap"), default="exact")
    p.add_argument("--report")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="maskron: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (MaskronError, OSError) as exc:
        print(f"maskron: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
