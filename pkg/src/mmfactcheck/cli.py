"""Command-line entry point.

Commands::

    mmfactcheck check --claim TEXT [--post TEXT] [--image PATH] [--date YYYY-MM-DD]
    mmfactcheck batch --dataset FILE --out FILE [--concurrency N]
    mmfactcheck eval --pred FILE --gold FILE --classes {2,3} [--buckets]
    mmfactcheck build-corpus --in DIR --out FILE --seed N [--strict-dates]
    mmfactcheck replay verify DIR

Settings resolve as flags > ``MMFC_*`` variables > config file > defaults
(see :mod:`mmfactcheck.config`). Exit status is 0 on success, 1 when the
pipeline fails and 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .agents import Agents
from .config import RunConfig, load_config
from .corpus import build_corpus
from .errors import ConfigError, FactCheckError
from .evaluation import classification_metrics, difficulty_buckets, join_predictions, read_jsonl
from .filtering import DomainBlocklist
from .model import MultimodalClaim, collapse_to_binary, parse_date
from .orchestrator import Orchestrator, WorkflowTrace
from .providers.fixtures import FixtureStore
from .providers.suite import ProviderSuite, build_providers

EXIT_OK, EXIT_PIPELINE, EXIT_CONFIG = 0, 1, 2

_WORKFLOW_FLAGS = (
    ("--evidence-batch-threshold", "evidence_batch_threshold", int),
    ("--confidence-threshold", "confidence_threshold", int),
    ("--max-reasoning-steps", "max_reasoning_steps", int),
    ("--max-replans", "max_replans", int),
    ("--max-chat-calls", "max_chat_calls", int),
    ("--confidence-comparison", "confidence_comparison", str),
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--mode", choices=["live", "record", "replay-strict"])
    p.add_argument("--fixtures", dest="fixture_dir", help="fixture directory")
    p.add_argument("--chat-base-url")
    p.add_argument("--chat-model")
    p.add_argument("--search-url")
    p.add_argument("--vision-url")
    p.add_argument("--blocklist", help="file of blocked domain substrings")
    p.add_argument("--strict-dates", action="store_const", const=True, default=None)
    for flag, dest, conv in _WORKFLOW_FLAGS:
        p.add_argument(flag, dest=dest, type=conv)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmfactcheck", description="Multimodal claim verification with cited explanations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="verify one claim")
    _common(p)
    p.add_argument("--claim", required=True)
    p.add_argument("--post", default="")
    p.add_argument("--image", help="post image file or URL")
    p.add_argument("--date", help="fact-check date; later evidence is ignored")
    p.add_argument("--claim-id")
    p.add_argument("--out", dest="output_dir", help="directory for the verdict and trace")

    p = sub.add_parser("batch", help="verify every record of a dataset file")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="predictions JSONL")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--trace-dir", help="also write one trace per claim here")

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--classes", required=True, choices=["2", "3"])
    p.add_argument("--buckets", action="store_true", help="add the evidence-count difficulty table")
    p.add_argument("--include-errors", action="store_true")
    p.add_argument("--out", help="write the report as JSON here, and a CSV next to it")

    p = sub.add_parser("build-corpus", help="turn crawled articles into dataset splits")
    _common(p)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("replay", help="fixture maintenance")
    rsub = p.add_subparsers(dest="replay_command", required=True, parser_class=_Parser)
    v = rsub.add_parser("verify", help="check every fixture against its request digest")
    v.add_argument("fixture_dir")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    keys = ["mode", "fixture_dir", "chat_base_url", "chat_model", "search_url", "vision_url", "blocklist", "strict_dates"]
    keys += [dest for _, dest, _ in _WORKFLOW_FLAGS]
    flags = {k: getattr(args, k, None) for k in keys}
    for extra in ("output_dir", "concurrency"):
        flags[extra] = getattr(args, extra, None)
    return load_config(flags, config_path=args.config)


def make_providers(cfg: RunConfig) -> ProviderSuite:
    return build_providers(
        cfg.mode,
        cfg.fixture_dir,
        chat_base_url=cfg.chat_base_url,
        chat_model=cfg.chat_model,
        search_url=cfg.search_url,
        vision_url=cfg.vision_url,
        deepfake_constant=cfg.deepfake_constant,
    )


def _blocklist(cfg: RunConfig) -> DomainBlocklist:
    if cfg.blocklist is None:
        return DomainBlocklist.default()
    try:
        return DomainBlocklist.from_file(cfg.blocklist)
    except OSError as exc:
        raise ConfigError(f"cannot read blocklist {cfg.blocklist}: {exc}") from None


def default_claim_id(claim_text: str, post_text: str = "", image: Optional[str] = None) -> str:
    digest = hashlib.sha256("\x1f".join((claim_text, post_text, image or "")).encode("utf-8")).hexdigest()
    return "claim-" + digest[:12]


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def report_text(explanation) -> str:
    lines = [
        f"label: {explanation.label.value} ({explanation.binary_label.value})",
        f"confidence: {explanation.confidence}/5",
        f"claim: {explanation.claim_paraphrase}",
        f"reasoning: {explanation.reasoning_logic}",
    ]
    if explanation.key_points:
        lines.append("key points:")
        for n, kp in enumerate(explanation.key_points, 1):
            cites = f" [{', '.join(kp.cited_evidence_ids)}]" if kp.cited_evidence_ids else ""
            lines.append(f"  {n}. {kp.text}{cites}")
    by_id = {e.evidence_id: e for e in explanation.evidence}
    cited = sorted({i for kp in explanation.key_points for i in kp.cited_evidence_ids})
    if cited:
        lines.append("sources:")
        lines.extend(f"  [{i}] {by_id[i].source_url}" for i in cited if i in by_id)
    return "\n".join(lines)


def cmd_check(args, cfg: RunConfig) -> int:
    if args.image and not Path(args.image).is_file() and "://" not in args.image:
        print(f"error: image not found: {args.image}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        date = parse_date(args.date)
    except ValueError as exc:
        print(f"error: bad --date: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    claim_id = args.claim_id or default_claim_id(args.claim, args.post, args.image)
    try:
        claim = MultimodalClaim(args.claim, args.post, args.image, date, claim_id)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    orchestrator = Orchestrator(make_providers(cfg), cfg.workflow, blocklist=_blocklist(cfg))
    out = Path(cfg.output_dir)
    trace_path = out / f"{claim_id}.trace.jsonl"
    try:
        result = orchestrator.run_claim(claim)
    except (FactCheckError, ValueError) as exc:
        trace = getattr(exc, "trace", None) or WorkflowTrace()
        _write(trace_path, trace.to_jsonl())
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(f"partial trace: {trace_path}", file=sys.stderr)
        return EXIT_PIPELINE
    _write(out / f"{claim_id}.explanation.json", result.explanation.to_json() + "\n")
    _write(trace_path, result.trace.to_jsonl())
    print(report_text(result.explanation))
    print(f"written: {out / (claim_id + '.explanation.json')}")
    return EXIT_OK


def _claim_from_row(row: dict) -> MultimodalClaim:
    return MultimodalClaim(
        claim_text=row.get("claim_text", ""),
        post_text=row.get("post_text") or "",
        post_image=row.get("post_image_url") or None,
        claim_date=parse_date(row.get("fact_check_date")),
        claim_id=str(row["claim_id"]),
    )


def predict_row(orchestrator: Orchestrator, row: dict) -> tuple[dict, Optional[WorkflowTrace]]:
    """One prediction row; failures become ``status="error"`` rows."""
    cid = str(row.get("claim_id", ""))
    blank = {"claim_id": cid, "predicted": None, "binary": None, "confidence": None}
    try:
        claim = _claim_from_row(row)
    except (KeyError, ValueError, TypeError) as exc:
        return {**blank, "status": "error", "error": f"{type(exc).__name__}: {exc}"}, None
    try:
        result = orchestrator.run_claim(claim)
    except (FactCheckError, ValueError) as exc:
        return {**blank, "status": "error", "error": f"{type(exc).__name__}: {exc}"}, getattr(exc, "trace", None)
    ex = result.explanation
    row = {
        "claim_id": cid,
        "status": "ok",
        "predicted": ex.label.value,
        "binary": collapse_to_binary(ex.label).value,
        "confidence": ex.confidence,
        "error": None,
    }
    return row, result.trace


def cmd_batch(args, cfg: RunConfig) -> int:
    try:
        rows = read_jsonl(args.dataset)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    orchestrator = Orchestrator(make_providers(cfg), cfg.workflow, blocklist=_blocklist(cfg))

    def work(indexed):
        n, row = indexed
        pred, trace = predict_row(orchestrator, row)
        print(f"[{n + 1}/{len(rows)}] {pred['claim_id']}: {pred['status']}", file=sys.stderr)
        return pred, trace

    with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
        results = list(pool.map(work, enumerate(rows)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for pred, _ in results:
            fh.write(json.dumps(pred, sort_keys=True) + "\n")
    if args.trace_dir:
        for pred, trace in results:
            if trace is not None:
                _write(Path(args.trace_dir) / f"{pred['claim_id']}.trace.jsonl", trace.to_jsonl())
    failed = sum(pred["status"] != "ok" for pred, _ in results)
    print(f"{len(results)} predictions, {failed} error(s) -> {out}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        preds, gold = read_jsonl(args.pred), read_jsonl(args.gold)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    records, skipped = join_predictions(preds, gold, include_errors=args.include_errors)
    if not records:
        print("error: no scorable predictions", file=sys.stderr)
        return EXIT_PIPELINE
    report = {"n": len(records), "skipped": skipped, "classes": int(args.classes)}
    for averaging in ("weighted", "macro"):
        report[averaging] = classification_metrics(records, averaging, args.classes).as_row()
    if args.buckets:
        b = difficulty_buckets(records)
        report["buckets"] = b.buckets
        report["buckets_note"] = b.note
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        _write(out, text + "\n")
        with open(out.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["averaging", "F1", "Acc", "Rec", "P"])
            for averaging in ("weighted", "macro"):
                r = report[averaging]
                writer.writerow([averaging, r["F1"], r["Acc"], r["Rec"], r["P"]])
    return EXIT_OK


def cmd_build_corpus(args, cfg: RunConfig) -> int:
    if not Path(args.in_dir).is_dir():
        print(f"error: not a directory: {args.in_dir}", file=sys.stderr)
        return EXIT_CONFIG
    agents = Agents(make_providers(cfg).chat)
    report = build_corpus(
        args.in_dir, args.out, agents, seed=args.seed, strict_dates=cfg.workflow.strict_dates, workers=args.workers
    )
    split = report.split
    print(
        f"{len(report.records)} records kept, {len(report.rejections)} rejected; "
        f"dev {len(split.dev)}, test {len(split.test)}, challenge {len(split.challenge)}"
    )
    return EXIT_OK


def cmd_replay_verify(args) -> int:
    root = Path(args.fixture_dir)
    if not root.is_dir():
        print(f"error: not a directory: {root}", file=sys.stderr)
        return EXIT_CONFIG
    report = FixtureStore(root, writable=False).verify()
    if report.checked == 0:
        print("0 fixtures found; nothing to verify")
        return EXIT_OK
    for name, reason in report.corrupted:
        print(f"CORRUPT {name}: {reason}")
    print(f"{report.checked} fixtures checked, {len(report.corrupted)} corrupted")
    return EXIT_OK if report.ok else EXIT_PIPELINE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "replay":
            return cmd_replay_verify(args)
        cfg = _config(args)
        if args.command == "check":
            return cmd_check(args, cfg)
        if args.command == "batch":
            return cmd_batch(args, cfg)
        return cmd_build_corpus(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FactCheckError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
