"""povmquad command line.

Subcommands: construct, certify, strength, simulate, score, table.
Exit codes: 0 success, 1 verification failure, 2 I/O error,
3 insufficient data, 64 usage error, 65 parse error.

Every subcommand is deterministic given its flags; `simulate` therefore
requires an explicit --seed. The grid directory for `table` resolves as
--grids flag, then the POVMQUAD_GRIDS environment variable, then the
grids bundled with the package.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    DomainError,
    DuplicatePoint,
    NotNormalized,
    ParseError,
    PovmQuadError,
    WeightError,
    ZeroVector,
)
from .povm import (
    OPERATOR_CHECK_CAP,
    exact_score,
    legendre_pure_counts,
    mixed_min_elements,
    operator_completeness_residual,
    povm_from_json,
    povm_from_quadrature,
    povm_to_csv,
    povm_to_json,
    scalar_completeness_residual,
    spin_subspaces,
)
from .quadrature import certify, ingest_pointset, product_rule, product_rule_count
from .simulate import quadrature_averaged_score, run_game, score_by_direction

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_IO = 2
EXIT_INSUFFICIENT = 3
EXIT_USAGE = 64
EXIT_PARSE = 65

ENV_GRIDS = "POVMQUAD_GRIDS"
MIN_TRIALS = 100

# Static reference data: minimal known POVM sizes (search-based, N <= 7).
LATORRE_COUNTS = {1: 2, 2: 4, 3: 6, 4: 10, 5: 12, 6: 18, 7: 22}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed_value(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="povmquad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build the product-rule POVM for N copies")
    p.add_argument("copies", type=_positive_int, metavar="N")
    p.add_argument("--out", type=Path, help="write the POVM to this file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--residual-tol", type=float, default=1e-9,
                   help="completeness residual bound for exit status")

    p = sub.add_parser("certify", help="residuals per harmonic order of a point-set file")
    p.add_argument("file", type=Path)
    p.add_argument("--lmax", type=_positive_int, default=20)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--expect", type=int, help="exit 1 unless strength >= this order")
    p.add_argument("--weights", choices=("auto", "uniform", "explicit"), default="auto")
    p.add_argument("--signed", action="store_true",
                   help="measure exactness even if some weights are negative")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("strength", help="detected design strength of a point-set file")
    p.add_argument("file", type=Path)
    p.add_argument("--cap", type=_positive_int, default=20)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--weights", choices=("auto", "uniform", "explicit"), default="auto")
    p.add_argument("--signed", action="store_true")

    p = sub.add_parser("simulate", help="Monte Carlo estimation game on a POVM file")
    p.add_argument("file", type=Path)
    p.add_argument("--trials", type=_positive_int, default=1_000_000)
    p.add_argument("--seed", type=_seed_value, required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("score", help="exact score and conditional-score diagnostics")
    p.add_argument("file", type=Path)
    p.add_argument("--grid", type=Path,
                   help="emit E[score|direction] for directions in this point file")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("table", help="element counts per construction method")
    p.add_argument("--nmax", type=_positive_int, default=15)
    p.add_argument("--grids", type=Path, help=f"grid directory (default ${ENV_GRIDS} or bundled)")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    return parser


def _read_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readlines()


def _detect_weight_mode(lines) -> str:
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            return "explicit" if len(line.split()) == 4 else "uniform"
    return "uniform"


def _load_pointset(path: Path, mode: str):
    lines = _read_lines(path)
    if mode == "auto":
        mode = _detect_weight_mode(lines)
    return ingest_pointset(lines, mode, label=path.name)


def cmd_construct(args) -> int:
    povm = povm_from_quadrature(product_rule(args.copies), args.copies)
    scalar = scalar_completeness_residual(povm)
    operator = None
    if args.copies <= OPERATOR_CHECK_CAP:
        operator = operator_completeness_residual(povm)
    if args.out is not None:
        text = povm_to_json(povm) if args.format == "json" else povm_to_csv(povm)
        try:
            args.out.write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"povmquad construct: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    print(f"n: {povm.n}")
    print(f"score_exact: {exact_score(povm)!r}")
    print(f"scalar_residual: {scalar:.3e}")
    if operator is None:
        print(f"operator_residual: skipped (N > {OPERATOR_CHECK_CAP})")
    else:
        print(f"operator_residual: {operator:.3e}")
    residuals = [scalar] + ([operator] if operator is not None else [])
    return EXIT_OK if all(r < args.residual_tol for r in residuals) else EXIT_VERIFY


def cmd_certify(args) -> int:
    q = _load_pointset(args.file, args.weights)
    report = certify(q, args.lmax, args.tol, allow_signed=args.signed)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"points: {report.n_points}")
        print(f"weight_sum/4pi - 1: {report.weight_sum / (4 * math.pi) - 1.0:.3e}")
        if not report.all_weights_positive:
            print("warning: non-positive weights present (not POVM-suitable)")
        print("l  max|sum w Ylm|")
        for l in range(1, report.l_max_tested + 1):
            print(f"{l:<3d}{report.residual(l):.6e}")
        print(f"strength: {report.strength}")
    if args.expect is not None and report.strength < args.expect:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_strength(args) -> int:
    q = _load_pointset(args.file, args.weights)
    report = certify(q, args.cap, args.tol, allow_signed=args.signed)
    print(report.strength)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        text = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"povmquad simulate: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_IO
    povm = povm_from_json(text, label=args.file.name)
    report = run_game(povm, args.trials, args.seed)
    if args.format == "json":
        print(report.to_json())
    else:
        print(f"N: {report.copies}")
        print(f"trials: {report.trials}")
        print(f"seed: {report.seed}")
        print(f"mean_score: {report.mean_score:.6f}")
        print(f"std_error: {report.std_error:.3e}")
        print(f"expected: {report.expected:.6f}")
        print(f"chunks: {report.chunks}")
    if args.trials < MIN_TRIALS:
        print(f"insufficient trials ({args.trials} < {MIN_TRIALS})", file=sys.stderr)
        return EXIT_INSUFFICIENT
    ok = abs(report.mean_score - report.expected) < 5.0 * report.std_error
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_score(args) -> int:
    try:
        text = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"povmquad score: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_IO
    povm = povm_from_json(text, label=args.file.name)
    if args.grid is None:
        score = exact_score(povm)
        averaged = quadrature_averaged_score(povm)
        print(f"score_exact: {score!r}")
        print(f"score_quadrature_avg: {averaged!r}")
        print(f"difference: {abs(score - averaged):.3e}")
        return EXIT_OK if abs(score - averaged) < 1e-10 else EXIT_VERIFY
    grid = _load_pointset(args.grid, "uniform")
    values = score_by_direction(povm, (grid.theta, grid.phi))
    if args.format == "json":
        rows = ",\n    ".join(
            f'{{"theta": {t:.17g}, "phi": {p:.17g}, "score": {v:.17g}}}'
            for t, p, v in zip(grid.theta, grid.phi, values)
        )
        out = f'{{\n  "N": {povm.copies},\n  "scores": [\n    {rows}\n  ]\n}}\n'
    else:
        lines = ["theta,phi,score"]
        lines += [
            f"{t:.17g},{p:.17g},{v:.17g}"
            for t, p, v in zip(grid.theta, grid.phi, values)
        ]
        out = "\n".join(lines) + "\n"
    if args.out is not None:
        try:
            args.out.write_text(out, encoding="utf-8")
        except OSError as exc:
            print(f"povmquad score: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(out)
    return EXIT_OK


@dataclass
class TableRow:
    """One table row: copies N and the element count per method."""

    copies: int
    counts: dict = field(default_factory=dict)  # column -> int
    sources: dict = field(default_factory=dict)  # column -> computed|ingested|reference

    def cell(self, column, value, source):
        if value is not None:
            self.counts[column] = int(value)
            self.sources[column] = source

    def to_dict(self) -> dict:
        out = {"N": self.copies}
        for col in TABLE_COLUMNS:
            out[col] = self.counts.get(col)
        out["sources"] = {c: self.sources[c] for c in TABLE_COLUMNS if c in self.sources}
        return out


TABLE_COLUMNS = (
    "latorre",
    "legendre",
    "lebedev",
    "design",
    "legendre_mixed",
    "lebedev_mixed",
)


def default_grid_dir() -> Path:
    return Path(str(resources.files("povmquad") / "data" / "grids"))


def _scan_grids(grids_dir: Path, cap: int):
    """Certified (strength, count) data for grid files; absent dir -> empty."""
    lebedev = {}  # exact strength -> count
    designs = []  # (strength, count)
    if grids_dir is None or not grids_dir.is_dir():
        return lebedev, designs
    for path in sorted(grids_dir.glob("*.txt")):
        is_lebedev = path.name.startswith("lebedev")
        is_design = path.name.startswith("design")
        if not (is_lebedev or is_design):
            continue
        try:
            q = _load_pointset(path, "auto")
            report = certify(q, cap, allow_signed=is_lebedev)
        except (PovmQuadError, OSError) as exc:
            print(f"povmquad table: skipping {path.name}: {exc}", file=sys.stderr)
            continue
        if is_lebedev:
            # Fill only at the exact order: the failure at strength+1 must be
            # observed below the cap, otherwise the true order is unknown.
            if report.strength < cap:
                prev = lebedev.get(report.strength)
                if prev is None or q.n < prev:
                    lebedev[report.strength] = q.n
        else:
            designs.append((report.strength, q.n))
    return lebedev, designs


def build_table(nmax: int, grids_dir: Path | None) -> list[TableRow]:
    lebedev, designs = _scan_grids(grids_dir, nmax + 1)
    rows = []
    for copies in range(1, nmax + 1):
        row = TableRow(copies)
        row.cell("latorre", LATORRE_COUNTS.get(copies), "reference")
        row.cell("legendre", product_rule_count(copies), "computed")
        row.cell("lebedev", lebedev.get(copies), "ingested")
        design_counts = [n for s, n in designs if s >= copies]
        row.cell("design", min(design_counts) if design_counts else None, "ingested")
        row.cell(
            "legendre_mixed",
            mixed_min_elements(copies, legendre_pure_counts(copies)),
            "computed",
        )
        if copies % 2 == 1:
            pure = {1: product_rule_count(1)}
            pure.update({s: lebedev[s] for s in lebedev if s % 2 == 1})
            if all(two_s in pure for two_s in spin_subspaces(copies)):
                row.cell(
                    "lebedev_mixed", mixed_min_elements(copies, pure), "ingested"
                )
        rows.append(row)
    return rows


def cmd_table(args) -> int:
    grids_dir = args.grids
    if grids_dir is None:
        env = os.environ.get(ENV_GRIDS)
        grids_dir = Path(env) if env else default_grid_dir()
    rows = build_table(args.nmax, grids_dir)
    if args.format == "json":
        payload = {
            "nmax": args.nmax,
            "grids_dir": str(grids_dir) if grids_dir is not None else None,
            "rows": [row.to_dict() for row in rows],
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    header = ("N",) + TABLE_COLUMNS
    cells = [
        [str(row.copies)] + [str(row.counts.get(c, "")) for c in TABLE_COLUMNS]
        for row in rows
    ]
    if args.format == "csv":
        print(",".join(header))
        for line in cells:
            print(",".join(line))
        return EXIT_OK
    widths = [max(len(h), *(len(line[i]) for line in cells)) for i, h in enumerate(header)]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    for line in cells:
        print("  ".join(v.ljust(widths[i]) for i, v in enumerate(line)))
    return EXIT_OK


_HANDLERS = {
    "construct": cmd_construct,
    "certify": cmd_certify,
    "strength": cmd_strength,
    "simulate": cmd_simulate,
    "score": cmd_score,
    "table": cmd_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except OSError as exc:
        print(f"povmquad {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParseError, ZeroVector, DuplicatePoint, NotNormalized) as exc:
        print(f"povmquad {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"povmquad {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WeightError, PovmQuadError) as exc:
        print(f"povmquad {args.command}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
