"""Command-line front end: certify candidate zeros of a polynomial system.

Reads a system file and a JSON candidate list, certifies every candidate
(optionally in parallel), groups the certified boxes by overlap, classifies
reality and positivity, and writes a structured report whose printed box
bounds are themselves outward-rounded (the report is a sound certificate).
Uncertified candidates are a normal outcome and do not affect the exit
code; only input and IO errors do.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, isfinite

from . import expr, mparith
from .certify import Candidate, certify_candidate
from .distinct import DistinctnessReport, group_overlaps
from .errors import KrawcertError, SolutionsFormatError
from .precision import DEFAULT_MAX_BITS, ladder

__all__ = [
    "RunOptions",
    "CertificationSummary",
    "load_solutions",
    "run",
    "write_report",
    "main",
]

_F64 = 53


@dataclass(frozen=True)
class RunOptions:
    max_bits: int = DEFAULT_MAX_BITS
    seed: int = 0
    threads: int = 1
    output: str = None
    horner: bool = True


@dataclass(frozen=True)
class CertificationSummary:
    total_candidates: int
    certified_count: int
    distinct_count: int
    real_count: int
    positive_count: int
    results: tuple
    distinctness: DistinctnessReport
    config: dict = field(compare=False)


def load_solutions(path):
    """Candidate list from a JSON array of rows of [re, im] pairs."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SolutionsFormatError(
                f"solutions file is not valid JSON: {exc}"
            ) from None
    if not isinstance(data, list):
        raise SolutionsFormatError("solutions file must be a JSON array of rows")
    candidates = []
    width = None
    for idx, row in enumerate(data):
        if not isinstance(row, list) or not row:
            raise SolutionsFormatError(
                f"row {idx} must be a nonempty array of [re, im] pairs"
            )
        coords = []
        for pair in row:
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in pair
                )
            ):
                raise SolutionsFormatError(
                    f"row {idx} must contain [re, im] number pairs"
                )
            re, im = float(pair[0]), float(pair[1])
            if not (isfinite(re) and isfinite(im)):
                raise SolutionsFormatError(
                    f"row {idx} contains a non-finite number"
                )
            coords.append(complex(re, im))
        if width is None:
            width = len(coords)
        elif len(coords) != width:
            raise SolutionsFormatError(
                f"row {idx} has {len(coords)} coordinates, expected {width}"
            )
        candidates.append(Candidate(x=tuple(coords), index=idx))
    return candidates


def run(system_path, solutions_path, options=None):
    """Certify every candidate and assemble the summary (and report file)."""
    opts = options or RunOptions()
    system = expr.load_system(system_path)
    compiled = expr.compile(system, horner=opts.horner)
    candidates = load_solutions(solutions_path)
    if candidates and len(candidates[0].x) != compiled.n:
        raise SolutionsFormatError(
            f"rows have {len(candidates[0].x)} coordinates but the system "
            f"has {compiled.n} variables"
        )
    levels = ladder(opts.max_bits)
    if opts.threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(
                pool.map(
                    lambda cand: certify_candidate(compiled, cand, levels),
                    candidates,
                )
            )
    else:
        results = [
            certify_candidate(compiled, cand, levels) for cand in candidates
        ]
    certified_idx = [i for i, r in enumerate(results) if r.certified]
    grouped = group_overlaps(
        [results[i].box for i in certified_idx], seed=opts.seed
    )
    # group indices refer to positions in the certified sublist; translate
    groups = tuple(
        tuple(certified_idx[p] for p in g) for g in grouped.groups
    )
    distinctness = DistinctnessReport(
        groups=groups,
        representatives=tuple(g[0] for g in groups),
        distinct_count=grouped.distinct_count,
        anchor=grouped.anchor,
        distances=grouped.distances,
        comparisons=grouped.comparisons,
    )
    real_count = sum(
        1 for i in distinctness.representatives if results[i].reality == "real"
    )
    positive_count = sum(
        1 for i in distinctness.representatives if results[i].positive == "yes"
    )
    summary = CertificationSummary(
        total_candidates=len(candidates),
        certified_count=len(certified_idx),
        distinct_count=distinctness.distinct_count,
        real_count=real_count,
        positive_count=positive_count,
        results=tuple(results),
        distinctness=distinctness,
        config={
            "system": str(system_path),
            "solutions": str(solutions_path),
            "ladder_bits": [lvl.significand_bits for lvl in levels],
            "seed": opts.seed,
            "horner": opts.horner,
        },
    )
    if opts.output:
        write_report(summary, opts.output)
    return summary


def _f64_directed(x, roundup):
    # 17 digits round-trip most doubles; directed rounding can push the
    # value past the round-trip set, in which case one more digit always
    # lands within half an ulp of x
    fr = Fraction(x)
    for digits in (17, 18):
        s = mparith.decimal_up(fr, digits) if roundup else mparith.decimal_down(fr, digits)
        if float(s) == x:
            return s
    return s


def _bound_strings(interval):
    """[lo, hi] decimal strings, lo rounded down and hi rounded up, with
    enough digits that parsing them back contains the binary interval."""
    if interval.bits == _F64:
        return [_f64_directed(interval.lo, False), _f64_directed(interval.hi, True)]
    digits = max(17, ceil(interval.bits * 0.30103) + 2)
    return [
        mparith.decimal_down(interval.lo_fraction(), digits),
        mparith.decimal_up(interval.hi_fraction(), digits),
    ]


def _box_json(box):
    out = []
    for entry in box.entries:
        re = _bound_strings(entry.re)
        im = _bound_strings(entry.im)
        out.append([re[0], re[1], im[0], im[1]])
    return out


def write_report(summary, path):
    """Write the structured JSON report; deterministic for identical runs."""
    group_of = {}
    for gid, group in enumerate(summary.distinctness.groups):
        for idx in group:
            group_of[idx] = gid
    representatives = set(summary.distinctness.representatives)
    rows = []
    for i, res in enumerate(summary.results):
        row = {
            "index": i,
            "status": res.status,
            "precision_bits": res.precision_used.significand_bits,
        }
        if res.certified:
            row["reality"] = res.reality
            row["positive"] = res.positive
            row["contraction_norm"] = res.contraction_norm
            row["group"] = group_of[i]
            row["representative"] = i in representatives
            row["box"] = _box_json(res.box)
        else:
            row["reason"] = res.reason
        rows.append(row)
    doc = {
        "config": summary.config,
        "counts": {
            "total_candidates": summary.total_candidates,
            "certified": summary.certified_count,
            "distinct": summary.distinct_count,
            "real": summary.real_count,
            "positive": summary.positive_count,
        },
        "anchor": [[z.real, z.imag] for z in summary.distinctness.anchor],
        "exact_comparisons": summary.distinctness.comparisons,
        "results": rows,
    }
    text = json.dumps(doc, indent=2) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="certify",
        description=(
            "Certify approximate zeros of a square polynomial or rational "
            "system with interval arithmetic."
        ),
    )
    parser.add_argument(
        "--system", required=True, help="system definition file"
    )
    parser.add_argument(
        "--solutions", required=True, help="JSON file of candidate zeros"
    )
    parser.add_argument(
        "--output", required=True, help="path for the JSON report"
    )
    parser.add_argument(
        "--max-bits",
        type=int,
        default=None,
        help=(
            "precision ladder cap in significand bits "
            f"(default: $CERTIFY_MAX_BITS or {DEFAULT_MAX_BITS})"
        ),
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="seed for the distinctness anchor"
    )
    parser.add_argument(
        "--threads", type=int, default=1, help="worker threads for candidates"
    )
    parser.add_argument(
        "--no-horner",
        action="store_true",
        help="compile expressions verbatim instead of Horner form",
    )
    args = parser.parse_args(argv)
    max_bits = args.max_bits
    if max_bits is None:
        env = os.environ.get("CERTIFY_MAX_BITS", "")
        try:
            max_bits = int(env) if env else DEFAULT_MAX_BITS
        except ValueError:
            print(
                f"certify: invalid CERTIFY_MAX_BITS value {env!r}",
                file=sys.stderr,
            )
            return 1
    options = RunOptions(
        max_bits=max_bits,
        seed=args.seed,
        threads=args.threads,
        output=args.output,
        horner=not args.no_horner,
    )
    try:
        summary = run(args.system, args.solutions, options)
    except (KrawcertError, OSError, ValueError) as exc:
        print(f"certify: {exc}", file=sys.stderr)
        return 1
    print(f"candidates: {summary.total_candidates}")
    print(f"certified:  {summary.certified_count}")
    print(f"distinct:   {summary.distinct_count}")
    print(f"real:       {summary.real_count}")
    print(f"positive:   {summary.positive_count}")
    print(f"report written to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
