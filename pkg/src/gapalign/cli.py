"""Command-line interface.

Eight subcommands drive the pipeline: align, gaps, score, wer, segment,
classify, dataset, evaluate.  Every failure prints a one-line JSON error
record to stderr; exit codes are 0 (ok), 1 (I/O), 2 (infeasible input),
3 (validation or usage).  A JSON --config file supplies defaults that
explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .align import (
    MODIFIED,
    STANDARD,
    backtrack,
    build_trellis_modified,
    build_trellis_standard,
    path_to_word_timings,
    tokenize,
)
from .attention import attention_word_timings
from .classifier import baseline_classify, load_predictions
from .errors import (
    EmptyReferenceError,
    GapAlignError,
    InfeasibleError,
    NoPairsError,
    ValidationError,
)
from .formats import (
    read_attention,
    read_emissions,
    read_hyp_transcript,
    read_ref_transcript,
    write_report,
)
from .gaps import extract_gaps
from .metrics import ALL_WORDS, AROUND_UNTRANSCRIBED, score_matched_pairs, summarize
from .pipeline import (
    ATTENTION,
    BASELINE,
    EXTERNAL,
    METHODS,
    alignment_timings,
    evaluate_corpus,
    r3,
    read_alignment_file,
    read_gaps_file,
    read_manifest,
    resolve_config,
    run_dataset,
    write_alignment_file,
    write_gaps_file,
)
from .segmenter import plan_segments
from .textalign import (
    categorize_words,
    edit_counts,
    levenshtein_align,
    neighbors_of_untranscribed,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as JSON instead of exiting 2."""

    def error(self, message):
        raise _UsageError(message)


def _emit_error(code: str, message: str, **extra) -> None:
    record = {"error": code, "message": message}
    for key, value in extra.items():
        if value is not None:
            record[key] = value
    print(json.dumps(record), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gapalign",
                     description="CTC forced alignment with gap detection "
                                 "for untranscribed speech")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, func):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON config file; explicit flags win")
        return p

    p = add("align", "align a hypothesis transcript to emission frames", cmd_align)
    p.add_argument("--emissions", help="CTCEM1 file")
    p.add_argument("--hypothesis", help="one-line transcript file")
    p.add_argument("--attention", help="ATTN1 file (variant=attention)")
    p.add_argument("--variant", choices=(STANDARD, MODIFIED, ATTENTION),
                   default=MODIFIED)
    p.add_argument("--c", type=float, help="separator stay floor, log-probability <= 0")
    p.add_argument("--output", help="alignment JSON (single-utterance mode)")
    p.add_argument("--manifest", help="batch manifest JSON")
    p.add_argument("--output-dir", help="directory for batch outputs")

    p = add("gaps", "extract alignment gaps from an alignment file", cmd_gaps)
    p.add_argument("--alignment", required=True)
    p.add_argument("--duration", type=float, help="audio length; default from the file")
    p.add_argument("--min-gap", type=float, dest="min_gap")
    p.add_argument("--id", help="utterance id for gap ids; default file stem")
    p.add_argument("--output", required=True)

    p = add("classify", "label gaps speech/empty", cmd_classify)
    p.add_argument("--gaps", required=True, help="gaps JSON from the gaps command")
    p.add_argument("--emissions", help="CTCEM1 file for the baseline classifier")
    p.add_argument("--predictions", help="external predictions: gap_id label score")
    p.add_argument("--baseline-threshold", type=float, dest="baseline_threshold")
    p.add_argument("--output", required=True)

    p = add("score", "score alignment files against reference timings", cmd_score)
    p.add_argument("--reference", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--alignment", action="append", default=[], metavar="NAME=PATH",
                   help="repeatable; one row per method")
    p.add_argument("--matches-only", action="store_true",
                   help="exclude substituted words from the means")
    p.add_argument("--output", required=True)

    p = add("wer", "word error rate and transcription-status counts", cmd_wer)
    p.add_argument("--reference", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--output", required=True)

    p = add("segment", "plan 10-30 s segments from reference timings", cmd_segment)
    p.add_argument("--reference", required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--silence-threshold", type=float, dest="silence_threshold")
    p.add_argument("--max-segment", type=float, dest="max_segment")
    p.add_argument("--min-edge-distance", type=float, dest="min_edge_distance")
    p.add_argument("--output", required=True)

    p = add("dataset", "build a labeled gap dataset from a corpus", cmd_dataset)
    p.add_argument("--manifest", required=True)
    p.add_argument("--c", type=float)
    p.add_argument("--min-gap", type=float, dest="min_gap")
    p.add_argument("--overlap-threshold", type=float, dest="overlap_threshold")
    p.add_argument("--split-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", required=True)

    p = add("evaluate", "full corpus evaluation report", cmd_evaluate)
    p.add_argument("--manifest", required=True)
    p.add_argument("--methods", default=f"{STANDARD},{MODIFIED}",
                   help="comma-separated subset of standard,modified,attention")
    p.add_argument("--classifier", choices=(BASELINE, EXTERNAL))
    p.add_argument("--predictions", help="external predictions file")
    p.add_argument("--baseline-threshold", type=float, dest="baseline_threshold")
    p.add_argument("--c", type=float)
    p.add_argument("--min-gap", type=float, dest="min_gap")
    p.add_argument("--overlap-threshold", type=float, dest="overlap_threshold")
    p.add_argument("--matches-only", action="store_true")
    p.add_argument("--sweep-csv", help="write coverage-vs-min_gap series here")
    p.add_argument("--output", required=True)

    return parser


def _align_one(emissions_path: str | None, hypothesis_path: str | None,
               attention_path: str | None, variant: str, c: float, output: str) -> None:
    if variant == ATTENTION:
        if attention_path is None:
            raise ValidationError("variant=attention needs --attention")
        att = read_attention(attention_path)
        words = None
        if hypothesis_path is not None:
            words = read_hyp_transcript(hypothesis_path).words
        timings = attention_word_timings(att, words=words)
        write_alignment_file(output, timings, variant=ATTENTION, c=None,
                             frame_duration=att.frame_duration,
                             duration=att.num_frames * att.frame_duration)
        return
    if emissions_path is None or hypothesis_path is None:
        raise ValidationError(f"variant={variant} needs --emissions and --hypothesis")
    m = read_emissions(emissions_path)
    hyp = read_hyp_transcript(hypothesis_path)
    seq = tokenize(hyp, m)
    if variant == STANDARD:
        trellis = build_trellis_standard(m, seq)
    else:
        trellis = build_trellis_modified(m, seq, c)
    path = backtrack(trellis, m, seq)
    timings = path_to_word_timings(path, seq, m.frame_duration)
    write_alignment_file(output, timings, variant=variant,
                         c=c if variant == MODIFIED else None,
                         frame_duration=m.frame_duration, duration=m.duration,
                         dropped_chars=seq.dropped_chars)


def cmd_align(args) -> int:
    cfg = resolve_config(args.config, {"c": args.c})
    if args.manifest is not None:
        if args.output_dir is None:
            raise ValidationError("batch align needs --output-dir")
        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        aligned, failures = [], {}
        for u in read_manifest(args.manifest):
            try:
                _align_one(u.emissions, u.hypothesis, u.attention, args.variant,
                           cfg.c, str(out_dir / f"{u.utterance_id}.align.json"))
                aligned.append(u.utterance_id)
            except GapAlignError as e:
                failures[u.utterance_id] = {"error": e.code, "message": str(e)}
        write_report({"variant": args.variant,
                      "c": cfg.c if args.variant == MODIFIED else None,
                      "aligned": aligned, "failures": failures},
                     out_dir / "batch.json")
        if not aligned:
            raise NoPairsError("no utterance could be aligned; see batch.json")
        return 0
    if args.output is None:
        raise ValidationError("single-utterance align needs --output")
    _align_one(args.emissions, args.hypothesis, args.attention, args.variant,
               cfg.c, args.output)
    return 0


def cmd_gaps(args) -> int:
    cfg = resolve_config(args.config, {"min_gap": args.min_gap})
    doc = read_alignment_file(args.alignment)
    timings = alignment_timings(doc)
    duration = args.duration if args.duration is not None else float(doc["duration"])
    utt_id = args.id if args.id is not None else Path(args.alignment).stem
    gaps = extract_gaps(timings, duration, cfg.min_gap)
    write_gaps_file(args.output, utt_id, duration, cfg.min_gap, gaps)
    return 0


def cmd_classify(args) -> int:
    cfg = resolve_config(args.config, {"baseline_threshold": args.baseline_threshold})
    utt_id, duration, min_gap, gaps, gap_ids = read_gaps_file(args.gaps)
    if args.predictions is not None:
        preds, duplicates = load_predictions(args.predictions, gap_ids)
        for g, gap_id in zip(gaps, gap_ids):
            g.label, g.score = preds[gap_id]
        classifier = EXTERNAL
    else:
        if args.emissions is None:
            raise ValidationError("classify needs --emissions (baseline) or --predictions")
        m = read_emissions(args.emissions)
        for g in gaps:
            g.label, g.score = baseline_classify(g, m, cfg.baseline_threshold)
        classifier = BASELINE
    write_gaps_file(args.output, utt_id, duration, min_gap, gaps, classifier=classifier)
    return 0


def cmd_score(args) -> int:
    if not args.alignment:
        raise ValidationError("score needs at least one --alignment NAME=PATH")
    methods = []
    for spec in args.alignment:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ValidationError(f"--alignment expects NAME=PATH, got {spec!r}")
        if any(name == n for n, _ in methods):
            raise ValidationError(f"duplicate alignment name {name!r}")
        methods.append((name, path))

    ref_words = read_ref_transcript(args.reference)
    hyp = read_hyp_transcript(args.hypothesis)
    pairs = levenshtein_align([w.text for w in ref_words], hyp.words)
    neighbor_refs = neighbors_of_untranscribed(pairs)

    rows = {}
    for name, path in methods:
        timings = alignment_timings(read_alignment_file(path))
        scored = score_matched_pairs(pairs, ref_words, timings, args.matches_only)
        entry = {ALL_WORDS: summarize(scored, ALL_WORDS).as_dict()}
        near = [s for s in scored if s.ref_index in neighbor_refs]
        try:
            entry[AROUND_UNTRANSCRIBED] = summarize(near, AROUND_UNTRANSCRIBED).as_dict()
        except NoPairsError:
            entry[AROUND_UNTRANSCRIBED] = None
        rows[name] = entry
    write_report({"matches_only": args.matches_only, "methods": rows}, args.output)
    return 0


def cmd_wer(args) -> int:
    ref_words = read_ref_transcript(args.reference)
    hyp = read_hyp_transcript(args.hypothesis)
    if not ref_words:
        raise EmptyReferenceError("WER is undefined for an empty reference")
    pairs = levenshtein_align([w.text for w in ref_words], hyp.words)
    counts = edit_counts(pairs)
    cat = categorize_words(pairs, [w.disfluent for w in ref_words])
    write_report({
        "wer": (counts["substitute"] + counts["delete"] + counts["insert"])
        / len(ref_words),
        "substitutions": counts["substitute"],
        "deletions": counts["delete"],
        "insertions": counts["insert"],
        "matches": counts["match"],
        "reference_words": len(ref_words),
        "categorization": cat.as_dict(),
    }, args.output)
    return 0


def cmd_segment(args) -> int:
    cfg = resolve_config(args.config, {
        "silence_threshold": args.silence_threshold,
        "max_segment": args.max_segment,
        "min_edge_distance": args.min_edge_distance,
    })
    ref_words = read_ref_transcript(args.reference)
    segments = plan_segments(ref_words, args.duration, cfg.silence_threshold,
                             cfg.max_segment, cfg.min_edge_distance)
    write_report({
        "duration": r3(args.duration),
        "segments": [{"start": r3(s.start), "end": r3(s.end),
                      "first_word": s.first_word, "last_word": s.last_word}
                     for s in segments],
    }, args.output)
    return 0


def cmd_dataset(args) -> int:
    cfg = resolve_config(args.config, {
        "c": args.c, "min_gap": args.min_gap,
        "overlap_threshold": args.overlap_threshold, "seed": args.seed,
    })
    if not 0 <= args.split_fraction <= 1:
        raise ValidationError(f"split fraction must be in [0, 1], got {args.split_fraction}")
    utterances = read_manifest(args.manifest)
    run_dataset(utterances, cfg, args.split_fraction, args.output_dir)
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args.config, {
        "c": args.c, "min_gap": args.min_gap,
        "overlap_threshold": args.overlap_threshold,
        "baseline_threshold": args.baseline_threshold,
        "classifier": args.classifier,
    })
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ValidationError("evaluate needs at least one method")
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    utterances = read_manifest(args.manifest)
    report = evaluate_corpus(utterances, cfg, methods,
                             matches_only=args.matches_only,
                             predictions_path=args.predictions,
                             sweep_csv_path=args.sweep_csv)
    write_report(report, args.output)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        _emit_error("usage", str(e))
        return 3
    try:
        return args.func(args)
    except ValidationError as e:
        _emit_error(e.code, str(e), path=e.path, line=e.line)
        return 3
    except InfeasibleError as e:
        _emit_error(e.code, str(e))
        return 2
    except GapAlignError as e:
        _emit_error(e.code, str(e))
        return 1
    except OSError as e:
        _emit_error("io", str(e))
        return 1


def entry() -> None:
    sys.exit(main())
