"""Command-line pipeline around the library.

Subcommands cover each stage (``ter-tag``, ``align``, ``extract-phrases``,
``lm-train``, ``lm-score``, ``refine``, ``tree-annotate``), the end-to-end
builder (``build-corpus``), plus ``evaluate``, ``stats`` and ``concat``.

Conventions:

* stdout carries data; progress and notes go to stderr;
* every option can also come from a ``--config`` file of ``key=value``
  lines, with explicit flags taking precedence;
* each run echoes its resolved configuration next to its outputs (for
  stdout-only commands, to stderr);
* exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal
  error; errors print a single ``error: ...`` line on stderr;
* identical inputs and configuration produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace
from typing import Any, Callable, Optional, Sequence

from .align import BidirectionalAligner, format_alignment, parse_alignment
from .corpus import (
    Dataset,
    QeSample,
    Tag,
    read_dataset,
    read_plain,
    read_tags,
    write_dataset,
    write_tags,
)
from .correct import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_MAX_TOKENS,
    DEFAULT_MIN_TOKENS,
    CorrectionParams,
    Strategy,
    build_artificial_corpus,
    length_filter,
    refine_tags,
    tree_annotate,
)
from .lm import NGramLanguageModel
from .metrics import confusion, dataset_stats, f1, mcc, span_f1
from .phrase import DEFAULT_MAX_PHRASE_LEN, extract_phrases, format_phrase_pair
from .ter import DEFAULT_MAX_SHIFT_DIST, ter_tags
from .tree import flat_tree, parse_bracketed

__all__ = ["main"]

_UNSET = object()
_REQUIRED = object()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # spec exit-code policy: usage problems exit 1, not argparse's 2
    def error(self, message: str) -> None:
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


@dataclass(frozen=True)
class Opt:
    """One CLI option: flag, type, default and config-file behavior."""

    name: str
    kind: str  # str | path | int | float | bool
    default: Any = _REQUIRED
    help: str = ""
    choices: Optional[tuple[str, ...]] = None
    multiple: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _cast(opt: Opt, raw: str) -> Any:
    if opt.multiple:
        return raw.split()
    if opt.kind == "int":
        return int(raw)
    if opt.kind == "float":
        return float(raw)
    if opt.kind == "bool":
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"bad boolean value {raw!r} for {opt.flag}")
    return raw


_IO = {
    "mt": Opt("mt", "path", help="MT sentences, one per line"),
    "pe": Opt("pe", "path", help="post-edit / pseudo-PE sentences"),
    "src": Opt("src", "path", default=None, help="source sentences (optional)"),
    "output": Opt("output", "path", help="output file or directory"),
    "jobs": Opt("jobs", "int", default=1, help="worker threads"),
}

_ALIGN_PARAMS = [
    Opt("iterations", "int", default=5, help="EM iterations"),
    Opt("tension", "float", default=4.0, help="diagonal prior strength"),
    Opt("null_prob", "float", default=0.08, help="null-alignment mass"),
    Opt(
        "heuristic",
        "str",
        default="grow-diag-final-and",
        choices=("intersection", "union", "grow-diag-final-and"),
        help="symmetrization heuristic",
    ),
]

_LM_PARAMS = [
    Opt("order", "int", default=3, help="n-gram order (1-5)"),
    Opt("boundaries", "bool", default=True, help="pad with <s>/</s> (default: on)"),
]

OPTIONS: dict[str, list[Opt]] = {
    "ter-tag": [
        _IO["mt"],
        _IO["pe"],
        _IO["output"],
        Opt(
            "shifts",
            "bool",
            default=False,
            help="enable greedy block shifts (default: off)",
        ),
        Opt("max_shift_dist", "int", default=DEFAULT_MAX_SHIFT_DIST),
        _IO["jobs"],
    ],
    "align": [
        Opt("source", "path", help="source-side sentences"),
        Opt("target", "path", help="target-side sentences"),
        _IO["output"],
        *_ALIGN_PARAMS,
        _IO["jobs"],
    ],
    "extract-phrases": [
        _IO["mt"],
        _IO["pe"],
        Opt("alignments", "path", help="Pharaoh i-j alignment lines"),
        _IO["output"],
        Opt("max_phrase_len", "int", default=DEFAULT_MAX_PHRASE_LEN),
    ],
    "lm-train": [
        Opt("corpus", "path", help="training sentences, one per line"),
        _IO["output"],
        *_LM_PARAMS,
    ],
    "lm-score": [
        Opt("model", "path", help="serialized model from lm-train"),
        Opt("input", "path", help="sentences to score"),
        Opt("output", "path", default=None, help="write scores here (default stdout)"),
    ],
    "refine": [
        _IO["src"],
        _IO["mt"],
        _IO["pe"],
        Opt("tags", "path", help="tags to refine"),
        Opt("alignments", "path", help="MT-PE alignments (Pharaoh)"),
        Opt("model", "path", help="serialized language model"),
        _IO["output"],
        Opt("audit", "path", default=None, help="audit log (default <output>.audit.jsonl)"),
        Opt("alpha", "float", default=DEFAULT_ALPHA, help="|delta-ppl| flip threshold"),
    ],
    "tree-annotate": [
        _IO["src"],
        _IO["mt"],
        _IO["pe"],
        Opt("alignments", "path", help="MT-PE alignments (Pharaoh)"),
        Opt("model", "path", help="serialized language model"),
        Opt("trees", "path", default=None, help="bracketed trees, one per MT line"),
        _IO["output"],
        Opt("audit", "path", default=None, help="audit log (default <output>.audit.jsonl)"),
        Opt("beta", "float", default=DEFAULT_BETA, help="delta-ppl-per-token threshold"),
    ],
    "build-corpus": [
        _IO["src"],
        Opt("tgt", "path", help="target sentences (become the pseudo-PE)"),
        _IO["mt"],
        Opt("trees", "path", default=None, help="bracketed trees, one per MT line"),
        _IO["output"],
        Opt(
            "strategy",
            "str",
            default=Strategy.TER_ONLY.value,
            choices=tuple(s.value for s in Strategy),
        ),
        Opt("alpha", "float", default=DEFAULT_ALPHA),
        Opt("beta", "float", default=DEFAULT_BETA),
        Opt("min_tokens", "int", default=DEFAULT_MIN_TOKENS),
        Opt("max_tokens", "int", default=DEFAULT_MAX_TOKENS),
        Opt(
            "shifts",
            "bool",
            default=False,
            help="enable greedy block shifts (default: off)",
        ),
        Opt("max_shift_dist", "int", default=DEFAULT_MAX_SHIFT_DIST),
        *_ALIGN_PARAMS,
        *_LM_PARAMS,
        Opt("language_pair", "str", default=""),
        _IO["jobs"],
    ],
    "evaluate": [
        _IO["mt"],
        Opt("gold", "path", help="gold tags file"),
        Opt("pred", "path", help="predicted tags file"),
    ],
    "stats": [
        Opt("dataset", "path", default=None, help="dataset directory"),
        Opt("mt", "path", default=None, help="MT file (with --tags)"),
        Opt("tags", "path", default=None, help="tags file (with --mt)"),
        Opt("json", "bool", default=False, help="emit JSON instead of the table"),
    ],
    "concat": [
        Opt("inputs", "path", multiple=True, help="dataset directories"),
        _IO["output"],
    ],
}


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="qecorpus",
        description="Build and correct word-level MT quality-estimation corpora.",
    )
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command, opts in OPTIONS.items():
        sub = subs.add_parser(command)
        sub.add_argument("--config", default=None, help="key=value option file")
        for opt in opts:
            if opt.kind == "bool":
                # argparse would render the unset sentinel in --help, so
                # booleans use None as "not given" instead
                sub.add_argument(
                    opt.flag,
                    dest=opt.name,
                    action=argparse.BooleanOptionalAction,
                    default=None,
                    help=opt.help,
                )
            elif opt.multiple:
                sub.add_argument(
                    opt.flag, dest=opt.name, nargs="+", default=_UNSET, help=opt.help
                )
            else:
                caster = {"int": int, "float": float}.get(opt.kind, str)
                sub.add_argument(
                    opt.flag,
                    dest=opt.name,
                    type=caster,
                    default=_UNSET,
                    choices=opt.choices,
                    help=opt.help,
                )
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace, cfg: dict[str, str], opts: list[Opt]):
    known = {o.name for o in opts}
    for key in cfg:
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
    resolved = {}
    for opt in opts:
        value = getattr(args, opt.name)
        if value is _UNSET or (opt.kind == "bool" and value is None):
            if opt.name in cfg:
                value = _cast(opt, cfg[opt.name])
            elif opt.default is _REQUIRED:
                raise UsageError(f"missing required option {opt.flag}")
            else:
                value = opt.default
        if opt.choices is not None and value not in opt.choices:
            raise UsageError(f"{opt.flag} must be one of {', '.join(opt.choices)}")
        resolved[opt.name] = value
    return SimpleNamespace(**resolved)


def _fmt_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _echo_config(command: str, opts: SimpleNamespace, dest: Optional[Path]) -> None:
    lines = [f"command={command}"]
    lines += [f"{k}={_fmt_value(v)}" for k, v in sorted(vars(opts).items())]
    if dest is None:
        for line in lines:
            print(f"config: {line}", file=sys.stderr)
    else:
        dest.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _read_parallel(*paths: str) -> list[list[list[str]]]:
    """Read several line-aligned token files, enforcing equal line counts."""
    sides = [read_plain(p) for p in paths]
    counts = {len(side) for side in sides}
    if len(counts) > 1:
        raise ValueError(
            "line counts differ: "
            + ", ".join(f"{p}={len(s)}" for p, s in zip(paths, sides))
        )
    return sides


def _require_nonempty(sentences: Sequence[Sequence[str]], path: str) -> None:
    for k, sent in enumerate(sentences, 1):
        if not sent:
            raise ValueError(f"{path}:{k}: empty sentence")


def _write_audit(records: list[dict], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


# --------------------------------------------------------------- handlers


def _cmd_ter_tag(o) -> None:
    mt, pe = _read_parallel(o.mt, o.pe)
    _require_nonempty(mt, o.mt)
    _require_nonempty(pe, o.pe)

    def tag(pair):
        return ter_tags(
            pair[0], pair[1], use_shifts=o.shifts, max_shift_dist=o.max_shift_dist
        )

    pairs = list(zip(mt, pe))
    if o.jobs > 1:
        with ThreadPoolExecutor(max_workers=o.jobs) as pool:
            seqs = list(pool.map(tag, pairs))
    else:
        seqs = [tag(pair) for pair in pairs]
    write_tags(seqs, o.output)
    _echo_config("ter-tag", o, Path(o.output + ".config"))


def _fit_aligner(pairs, o) -> BidirectionalAligner:
    aligner = BidirectionalAligner(
        iterations=o.iterations,
        diagonal_tension=o.tension,
        null_prob=o.null_prob,
        heuristic=o.heuristic,
        n_jobs=o.jobs,
    )
    return aligner.fit(pairs)


def _cmd_align(o) -> None:
    source, target = _read_parallel(o.source, o.target)
    _require_nonempty(source, o.source)
    _require_nonempty(target, o.target)
    pairs = list(zip(source, target))
    aligner = _fit_aligner(pairs, o)
    with open(o.output, "w", encoding="utf-8") as fh:
        for src, tgt in pairs:
            fh.write(format_alignment(aligner.align(src, tgt)) + "\n")
    _echo_config("align", o, Path(o.output + ".config"))


def _read_alignments(path: str, expected: int):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) != expected:
        raise ValueError(f"{path}: {len(lines)} lines for {expected} sentences")
    out = []
    for lineno, line in enumerate(lines, 1):
        try:
            out.append(parse_alignment(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def _cmd_extract_phrases(o) -> None:
    mt, pe = _read_parallel(o.mt, o.pe)
    alignments = _read_alignments(o.alignments, len(mt))
    with open(o.output, "w", encoding="utf-8") as fh:
        for mt_sent, pe_sent, align in zip(mt, pe, alignments):
            pairs = sorted(
                extract_phrases(len(mt_sent), len(pe_sent), align, o.max_phrase_len)
            )
            fh.write("\t".join(format_phrase_pair(p) for p in pairs) + "\n")
    _echo_config("extract-phrases", o, Path(o.output + ".config"))


def _cmd_lm_train(o) -> None:
    sentences = read_plain(o.corpus)
    model = NGramLanguageModel(order=o.order, use_boundaries=o.boundaries)
    model.fit(sentences)
    model.save(o.output)
    _echo_config("lm-train", o, Path(o.output + ".config"))


def _cmd_lm_score(o) -> None:
    model = NGramLanguageModel.load(o.model)
    sentences = read_plain(o.input)
    _require_nonempty(sentences, o.input)
    lines = [repr(model.perplexity(s)) for s in sentences]
    if o.output is None:
        for line in lines:
            print(line)
        _echo_config("lm-score", o, None)
    else:
        Path(o.output).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
        _echo_config("lm-score", o, Path(o.output + ".config"))


def _load_correction_inputs(o):
    if o.src is not None:
        src, mt, pe = _read_parallel(o.src, o.mt, o.pe)
    else:
        mt, pe = _read_parallel(o.mt, o.pe)
        src = [[] for _ in mt]
    _require_nonempty(mt, o.mt)
    _require_nonempty(pe, o.pe)
    alignments = _read_alignments(o.alignments, len(mt))
    lm = NGramLanguageModel.load(o.model)
    return src, mt, pe, alignments, lm


def _cmd_refine(o) -> None:
    src, mt, pe, alignments, lm = _load_correction_inputs(o)
    tags = read_tags(o.tags, [len(s) for s in mt])
    audit: list[dict] = []
    out = []
    for k, (s, m, p, t, a) in enumerate(zip(src, mt, pe, tags, alignments)):
        sample = QeSample(k, tuple(s), tuple(m), tuple(p), t)
        out.append(refine_tags(sample, a, lm, o.alpha, audit))
    write_tags(out, o.output)
    _write_audit(audit, Path(o.audit or o.output + ".audit.jsonl"))
    _echo_config("refine", o, Path(o.output + ".config"))


def _read_trees(path: Optional[str], mt: Sequence[Sequence[str]], indices=None):
    """Parse one tree per MT line; blank lines fall back to the flat tree."""
    if path is None:
        return [None] * (len(indices) if indices is not None else len(mt))
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) != len(mt):
        raise ValueError(f"{path}: {len(lines)} trees for {len(mt)} sentences")
    wanted = indices if indices is not None else range(len(mt))
    trees = []
    for k in wanted:
        line = lines[k].strip()
        if not line:
            trees.append(None)
            continue
        try:
            trees.append(parse_bracketed(line, tokens=mt[k]))
        except ValueError as exc:
            raise ValueError(f"{path}:{k + 1}: {exc}") from None
    return trees


def _cmd_tree_annotate(o) -> None:
    src, mt, pe, alignments, lm = _load_correction_inputs(o)
    trees = _read_trees(o.trees, mt)
    audit: list[dict] = []
    out = []
    for k, (s, m, p, a, tree) in enumerate(zip(src, mt, pe, alignments, trees)):
        sample = QeSample(k, tuple(s), tuple(m), tuple(p))
        out.append(
            tree_annotate(sample, tree or flat_tree(m), a, lm, o.beta, audit)
        )
    write_tags(out, o.output)
    _write_audit(audit, Path(o.audit or o.output + ".audit.jsonl"))
    _echo_config("tree-annotate", o, Path(o.output + ".config"))


def _cmd_build_corpus(o) -> None:
    src, tgt, mt = _read_parallel(o.src, o.tgt, o.mt)
    pairs, mts, kept = length_filter(
        list(zip(src, tgt)), mt, o.min_tokens, o.max_tokens
    )
    _note(f"kept {len(kept)} of {len(mt)} samples after length filtering")
    out_dir = Path(o.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    strategy = Strategy(o.strategy)
    audit: list[dict] = []
    if not kept:
        dataset = Dataset((), language_pair=o.language_pair)
    else:
        trees = _read_trees(o.trees, mt, kept)
        params = CorrectionParams(alpha=o.alpha, beta=o.beta, strategy=strategy)
        if strategy is Strategy.TER_ONLY:
            aligner, lm = None, None
        else:
            _note("training language model on target side")
            lm = NGramLanguageModel(order=o.order, use_boundaries=o.boundaries)
            lm.fit([s for s in tgt if s])
            _note("training aligners between MT and pseudo-PE")
            aligner = _fit_aligner([(m, p) for m, (_, p) in zip(mts, pairs)], o)
        dataset = build_artificial_corpus(
            pairs,
            mts,
            params,
            aligner,
            lm,
            trees=trees,
            language_pair=o.language_pair,
            use_shifts=o.shifts,
            audit=audit,
        )
    write_dataset(dataset, out_dir)
    _write_audit(audit, out_dir / "audit.jsonl")
    _echo_config("build-corpus", o, out_dir / "config.txt")


def _cmd_evaluate(o) -> None:
    mt = read_plain(o.mt)
    lengths = [len(s) for s in mt]
    gold = read_tags(o.gold, lengths)
    pred = read_tags(o.pred, lengths)
    c = confusion(gold, pred)
    have_gaps = all(t.gap_tags is not None for t in gold) and all(
        t.gap_tags is not None for t in pred
    )
    star = mcc(confusion(gold, pred, include_gaps=True)) if have_gaps else None
    report = [
        ("MCC", mcc(c)),
        ("MCC*", star),
        ("F-OK", f1(c, Tag.OK)),
        ("F-BAD", f1(c, Tag.BAD)),
        ("F-BAD-Span", span_f1(gold, pred)),
    ]
    for name, value in report:
        print(f"{name} n/a" if value is None else f"{name} {100 * value:.2f}")
    _echo_config("evaluate", o, None)


def _cmd_stats(o) -> None:
    if o.dataset is not None:
        dataset = read_dataset(o.dataset)
    elif o.mt is not None and o.tags is not None:
        mt = read_plain(o.mt)
        tags = read_tags(o.tags, [len(s) for s in mt])
        samples = tuple(
            QeSample(k, (), tuple(m), None, t)
            for k, (m, t) in enumerate(zip(mt, tags))
        )
        dataset = Dataset(samples)
    else:
        raise UsageError("stats needs --dataset or both --mt and --tags")
    report = dataset_stats(dataset)
    if o.json:
        print(json.dumps(report.to_dict()))
    else:
        print("samples\ttokens\tbad_tokens\tbad_gaps\tall_ok")
        print(
            f"{report.samples}\t{report.tokens}"
            f"\t{report.bad_tokens} ({report.bad_token_pct:.2f}%)"
            f"\t{report.bad_gaps} ({report.bad_gap_pct:.2f}%)"
            f"\t{report.all_ok_samples}"
        )
    _echo_config("stats", o, None)


def _cmd_concat(o) -> None:
    datasets = [read_dataset(path) for path in o.inputs]
    language_pairs = {d.language_pair for d in datasets}
    if len(language_pairs) > 1:
        raise ValueError(f"language pairs differ: {sorted(language_pairs)}")
    has_pe = {all(s.pe is not None for s in d) for d in datasets if len(d)}
    if len(has_pe) > 1:
        raise ValueError("cannot concatenate datasets with and without PE")
    samples = []
    for dataset in datasets:
        for sample in dataset:
            samples.append(
                QeSample(len(samples), sample.src, sample.mt, sample.pe, sample.tags)
            )
    merged = Dataset(tuple(samples), language_pair=datasets[0].language_pair)
    out_dir = Path(o.output)
    write_dataset(merged, out_dir)
    _echo_config("concat", o, out_dir / "config.txt")


HANDLERS: dict[str, Callable] = {
    "ter-tag": _cmd_ter_tag,
    "align": _cmd_align,
    "extract-phrases": _cmd_extract_phrases,
    "lm-train": _cmd_lm_train,
    "lm-score": _cmd_lm_score,
    "refine": _cmd_refine,
    "tree-annotate": _cmd_tree_annotate,
    "build-corpus": _cmd_build_corpus,
    "evaluate": _cmd_evaluate,
    "stats": _cmd_stats,
    "concat": _cmd_concat,
}


def _error_line(exc: BaseException) -> str:
    return " ".join(f"{exc}".split()) or exc.__class__.__name__


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        print("error: no subcommand given", file=sys.stderr)
        return 1
    try:
        cfg = _read_config_file(args.config) if args.config else {}
        opts = _resolve(args, cfg, OPTIONS[args.command])
        HANDLERS[args.command](opts)
    except UsageError as exc:
        print(f"error: {_error_line(exc)}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {_error_line(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: internal: {_error_line(exc)}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
