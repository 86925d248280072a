"""Command-line entry points.

Exit codes are exactly 0 (success), 1 (any error), and 2 (findings present
under ``scan --fail-on-detect``). Argparse's own exit-on-bad-flags behavior
is remapped so that usage errors also come back as 1.
"""

import argparse
import json
import logging
import os
import sys

from .baseline import dumps_baseline, load_baseline, save_baseline
from .detectors import ALL_DETECTORS, LABEL_SECRET, DetectorConfig
from .evaluation import evaluate_pipeline, write_predictions
from .features import CodeFeatureSpec
from .ingest import ConnectorConfig, fetch_pages, load_fixture_dir, persist_corpus
from .ingest import load_corpus as load_mixed_corpus
from .labels import apply_labels, effective_labels, finding_id, read_labels
from .pipeline import (
    fill_unlabeled,
    load_bundle,
    row_id,
    score_items,
    train_code_model,
    train_docs_model,
)
from .remediation import (
    apply_patches,
    emit_vault_manifest,
    load_recipes,
    plan_remediation,
)
from .scan import scan_tree
from .service import ReviewService, make_server
from .textprep import Page, Row, page_to_rows

logger = logging.getLogger(__name__)


class CliError(RuntimeError):
    """A user-facing failure: printed to stderr, exit code 1."""


def plaintext_sidecar(path: str) -> str:
    base, ext = os.path.splitext(path)
    return f"{base}.plaintext{ext}"


def _detector_config(path) -> DetectorConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise CliError(f"config {path} must be a JSON object")
    allowed = {"keyword_denylist", "base64_threshold", "hex_threshold",
               "min_candidate_len", "enabled"}
    unknown = set(doc) - allowed
    if unknown:
        raise CliError(f"config {path} has unknown keys: {sorted(unknown)}")
    kwargs = dict(doc)
    if "keyword_denylist" in kwargs:
        kwargs["keyword_denylist"] = tuple(kwargs["keyword_denylist"])
    if "enabled" in kwargs:
        kwargs["enabled"] = frozenset(kwargs["enabled"])
    return DetectorConfig(**kwargs)


def _overlaid_findings(baseline_path, labels_path):
    findings = load_baseline(baseline_path).all_findings()
    if labels_path:
        mapping = effective_labels(read_labels(labels_path))
        findings = apply_labels(findings, mapping)
    return findings


def _corpus_rows(path):
    rows = []
    for item in load_mixed_corpus(path):
        if isinstance(item, Row):
            rows.append(item)
        elif isinstance(item, Page):
            rows.extend(page_to_rows(item))
    if not rows:
        raise CliError(f"corpus {path} holds no usable rows")
    return rows


def cmd_scan(args) -> int:
    if not os.path.isdir(args.root):
        raise CliError(f"root {args.root!r} is not a directory")
    config = _detector_config(args.config) if args.config else None
    baseline = scan_tree(args.root, config)
    count = len(baseline.all_findings())
    save_baseline(baseline, args.out)
    written = args.out
    if args.keep_plaintext:
        sidecar = plaintext_sidecar(args.out)
        save_baseline(baseline, sidecar, keep_plaintext=True)
        written = f"{written} and {sidecar}"
    skipped = f", {baseline.skipped_files} unreadable" if baseline.skipped_files else ""
    print(f"{count} finding(s) in {len(baseline.results)} file(s){skipped}; "
          f"wrote {written}")
    if args.fail_on_detect and count:
        return 2
    return 0


def cmd_train(args) -> int:
    if args.kind == "code":
        if args.synth:
            raise CliError("--synth applies to --kind docs only")
        findings = _overlaid_findings(args.data, args.labels)
        result = train_code_model(
            findings, target_recall=args.target_recall, seed=args.seed
        )
    else:
        if args.labels:
            raise CliError(
                "--labels stores are keyed by finding id and apply to "
                "--kind code; docs rows carry labels inline"
            )
        rows = fill_unlabeled(_corpus_rows(args.data))
        result = train_docs_model(
            rows, synth_count=args.synth,
            target_recall=args.target_recall, seed=args.seed,
        )
    result.save(args.out)
    meta = result.model.metadata
    tuning = meta["threshold_tuning"]
    print(f"trained {args.kind} model on {meta['split']} "
          f"(threshold {result.model.threshold:.4f}, "
          f"val recall {tuning['recall']:.4f}, "
          f"val precision {tuning['precision']:.4f}); wrote {args.out}")
    if tuning.get("warning"):
        print(f"warning: {tuning['warning']}")
    return 0


def cmd_eval(args) -> int:
    model, featurizer = load_bundle(args.model)
    if isinstance(featurizer, CodeFeatureSpec):
        findings = _overlaid_findings(args.data, args.labels)
        missing = sum(1 for f in findings if f.candidate is None)
        if missing:
            raise CliError(
                f"{missing} finding(s) lack candidate plaintext; "
                "evaluate against a --keep-plaintext sidecar baseline"
            )
        ids = [finding_id(f) for f in findings]
        payloads = findings
    else:
        if args.labels:
            raise CliError("--labels applies to code baselines only")
        payloads = _corpus_rows(args.data)
        ids = [row_id(r) for r in payloads]
    scores = score_items(model, featurizer, payloads)
    items = [
        (item_id, float(score), payload.label)
        for item_id, score, payload in zip(ids, scores, payloads)
    ]
    result = evaluate_pipeline(float, items, model.threshold)
    print(result.comparison_table())
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_predictions(args.predictions, result.predictions)
    print(f"wrote {args.report} and {args.predictions}")
    return 0


def cmd_remediate(args) -> int:
    findings = _overlaid_findings(args.baseline, args.labels)
    secrets = [f for f in findings if f.label == LABEL_SECRET]
    if not secrets:
        print("no findings labeled secret; nothing to do")
        return 0
    recipes = load_recipes(args.recipes)
    patches, unremediated = plan_remediation(secrets, recipes, args.root)
    report, diff = apply_patches(args.root, patches, dry_run=args.dry_run)
    if diff:
        print(diff, end="" if diff.endswith("\n") else "\n")
    mode = "planned (dry run)" if args.dry_run else "applied"
    print(f"{report.applied} patch(es) {mode}, {report.skipped} skipped, "
          f"{len(unremediated)} finding(s) unremediated, "
          f"{len(report.files_changed)} file(s) changed")
    if not args.dry_run:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(emit_vault_manifest(patches))
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.manifest} and {args.report_out}")
    return 0


def cmd_ingest(args) -> int:
    if args.fixtures:
        pages = load_fixture_dir(args.fixtures)
    else:
        pages = list(fetch_pages(ConnectorConfig(base_url=args.base_url)))
    items = pages
    noun = "page(s)"
    if args.rows:
        items = [row for page in pages for row in page_to_rows(page)]
        noun = "row(s)"
    persist_corpus(items, args.out)
    print(f"wrote {len(items)} {noun} from {len(pages)} page(s) to {args.out}")
    return 0


def cmd_serve(args) -> int:
    baseline = load_baseline(args.baseline)
    model = featurizer = None
    if args.model:
        model, featurizer = load_bundle(args.model)
    service = ReviewService(
        baseline,
        labels_path=args.labels,
        root=args.root,
        model=model,
        featurizer=featurizer,
        ui_dir=args.ui,
    )
    server = make_server(service, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"review service on http://{host}:{port}/ "
          f"({len(baseline.all_findings())} finding(s); Ctrl-C stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secretsweep",
        description="Scan for leaked secrets, triage them with a trainable "
                    "filter, and rewrite confirmed ones into vault lookups.",
    )
    parser.add_argument("--verbose", action="store_true",
                        help="log debug detail to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="scan a file tree and write a baseline")
    p.add_argument("root", help="directory to scan")
    p.add_argument("--config", help="detector config JSON")
    p.add_argument("--out", default="baseline.json",
                   help="baseline path (default %(default)s)")
    p.add_argument("--keep-plaintext", action="store_true",
                   help="also write a sidecar baseline with candidate values")
    p.add_argument("--fail-on-detect", action="store_true",
                   help="exit 2 when any finding is detected")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("train", help="train a detection filter model")
    p.add_argument("--kind", choices=("code", "docs"), required=True)
    p.add_argument("--data", required=True,
                   help="code: baseline with plaintext; docs: corpus JSONL")
    p.add_argument("--labels", help="label store JSONL to overlay (code)")
    p.add_argument("--synth", type=int, default=0,
                   help="synthetic secret rows to add (docs)")
    p.add_argument("--out", default="model.json",
                   help="model path (default %(default)s)")
    p.add_argument("--target-recall", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="compare a model against the flag-"
                                    "everything heuristic on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True,
                   help="code: baseline with plaintext; docs: corpus JSONL")
    p.add_argument("--labels", help="label store JSONL to overlay (code)")
    p.add_argument("--report", default="eval-report.json")
    p.add_argument("--predictions", default="predictions.jsonl")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("remediate",
                       help="rewrite secret-labeled findings into vault "
                            "lookups")
    p.add_argument("--root", default=".", help="tree the baseline was "
                                               "scanned from (default cwd)")
    p.add_argument("--baseline", required=True)
    p.add_argument("--labels", help="label store JSONL to overlay")
    p.add_argument("--recipes", help="recipe catalog JSON "
                                     "(default: bundled catalog)")
    p.add_argument("--dry-run", action="store_true",
                   help="print the diff without touching files")
    p.add_argument("--manifest", default="vault-manifest.jsonl")
    p.add_argument("--report-out", dest="report_out",
                   default="remediation-report.json")
    p.set_defaults(func=cmd_remediate)

    p = sub.add_parser("ingest", help="pull document pages into a corpus")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--fixtures", help="directory of HTML fixture pages")
    source.add_argument("--base-url", help="REST content API base URL")
    p.add_argument("--out", default="corpus.jsonl")
    p.add_argument("--rows", action="store_true",
                   help="persist tokenized rows instead of raw pages")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("serve", help="run the review API (and UI if given)")
    p.add_argument("--baseline", required=True)
    p.add_argument("--labels", default="labels.jsonl",
                   help="append-only label store (default %(default)s)")
    p.add_argument("--root", default=".",
                   help="tree for context lines (default cwd)")
    p.add_argument("--model", help="model bundle for scores")
    p.add_argument("--ui", help="directory with the built UI bundle")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help; fold the
        # former into the single error code.
        return 0 if not exc.code else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single user-facing funnel
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
