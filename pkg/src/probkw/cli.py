"""Command-line interface.

::

    probkw test   PROBS PHENO [--methods gkw,dosage] [--tie-correction on|off]
    probkw scan   PROBS PHENO [--methods gkw] [--min-group-sum 5] [--permute SEED] [--workers 4]
    probkw simulate type1|power|coverage CONFIG [--seed S] [--alpha A] [--pvalues FILE] [--json FILE]
    probkw oracle PROBS
    probkw qq     PVALUE_TSV [--column gkw_p_full]

Tables go to stdout or ``--out``; log messages go to stderr.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys

from . import simkit
from .dist import ks_uniform
from .errors import DataError, NumericalError
from .fileio import load_sim_config, parse_phenotype_file, read_prob_file
from .gkw import ProbMatrix
from .methods import parse_methods, run_methods
from .oracle import enumerate_null, verify_moment_identities
from .ranking import rank_midrank
from .scan import prepare_phenotype, qq_points, read_scan_pvalues, scan, write_scan

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("probkw")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _methods(text):
    try:
        return parse_methods(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--tie-correction", type=_on_off, default=True, metavar="on|off",
                        help="mid-rank variance adjustment for tied responses (default on)")

    p = _Parser(prog="probkw", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", parents=[common], help="test every record of a probability file")
    t.add_argument("probs")
    t.add_argument("pheno")
    t.add_argument("--methods", type=_methods, default=parse_methods("gkw"))

    s = sub.add_parser("scan", parents=[common], help="genome-scan style batch run")
    s.add_argument("probs")
    s.add_argument("pheno")
    s.add_argument("--methods", type=_methods, default=parse_methods("gkw"))
    s.add_argument("--min-group-sum", type=float, default=5.0)
    s.add_argument("--permute", type=int, metavar="SEED",
                   help="shuffle the phenotype first (null scan)")
    s.add_argument("--seed", type=int, help="alias for --permute")
    s.add_argument("--workers", type=int, default=1)

    m = sub.add_parser("simulate", parents=[common], help="type 1 error, power or coverage study")
    m.add_argument("study", choices=("type1", "power", "coverage"))
    m.add_argument("config", help="key=value file of SimConfig fields")
    m.add_argument("--seed", type=int)
    m.add_argument("--alpha", type=float)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--pvalues", help="type1: also write per-replicate null p-values here")
    m.add_argument("--json", help="also write a structured summary here")

    o = sub.add_parser("oracle", parents=[common], help="exact permutation moments (N <= 9)")
    o.add_argument("probs")

    q = sub.add_parser("qq", parents=[common], help="QQ plot data and KS uniformity test")
    q.add_argument("pvalues")
    q.add_argument("--column", help="p-value column (default gkw_p_full, else gkw)")
    return p


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def cmd_test(args) -> int:
    header, records = read_prob_file(args.probs)
    ids, values = parse_phenotype_file(args.pheno)
    y = prepare_phenotype(header.subjects, ids, values)
    rr = rank_midrank(y)
    worst = EXIT_OK
    with _output(args.out) as fh:
        fh.write("record\tmethod\tstatistic\tdf\tp_value\tneglog10p\twarnings\n")
        for rec in records:
            pm = ProbMatrix(rec.probs)
            for method, res in run_methods(pm, rr, args.methods, args.tie_correction).items():
                if isinstance(res, Exception):
                    log.error("%s %s: %s: %s", rec.id, method.value, type(res).__name__, res)
                    worst = max(worst, EXIT_NUMERICAL if isinstance(res, NumericalError) else EXIT_DATA)
                    fh.write(f"{rec.id}\t{method.value}\tNA\tNA\tNA\tNA\t{type(res).__name__}\n")
                    continue
                for w in res.warnings:
                    log.warning("%s %s: SmallEffectiveGroup: group %d has summed probability %.4g < 5",
                                rec.id, method.value, w.group, w.effective_size)
                df = str(res.df) if res.df2 is None else f"{res.df},{res.df2}"
                warn = ",".join(str(w) for w in res.warnings) or "."
                fh.write(f"{rec.id}\t{method.value}\t{res.statistic!r}\t{df}\t"
                         f"{res.p_value:.6g}\t{res.neg_log10_p:.6g}\t{warn}\n")
    return worst


def cmd_scan(args) -> int:
    permute = args.permute if args.permute is not None else args.seed
    results = scan(args.probs, args.pheno, args.methods, args.min_group_sum, permute,
                   args.workers, args.tie_correction)
    with _output(args.out) as fh:
        counts = write_scan(results, args.methods, fh)
    log.info("records: %d tested, %d skipped, %d with errors",
             counts["tested"], counts["skipped"], counts["error"])
    return EXIT_OK


def cmd_simulate(args) -> int:
    changes = {"tie_correct": args.tie_correction}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    cfgs = [c.with_(**changes) for c in load_sim_config(args.config)]
    reports = []
    for cfg in cfgs:
        log.info("cell %s", simkit.cell_label(cfg))
        reports.append(simkit.run_cell(cfg, type1=args.study == "type1",
                                       power=args.study == "power",
                                       coverage=args.study == "coverage",
                                       workers=args.workers))
    table = {"type1": simkit.type1_table, "power": simkit.power_table,
             "coverage": simkit.coverage_table}[args.study](reports)
    with _output(args.out) as fh:
        fh.write(table)
    if args.pvalues and args.study == "type1":
        with open(args.pvalues, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(f"# {simkit.cell_label(r.config)}\n")
                fh.write(simkit.pvalue_table(r))
    if args.json:
        import json

        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump([r.summary() for r in reports], fh, indent=2, sort_keys=True)
    return EXIT_OK


def cmd_oracle(args) -> int:
    header, records = read_prob_file(args.probs)
    with _output(args.out) as fh:
        for rec in records:
            pm = ProbMatrix(rec.probs)
            exact = enumerate_null(pm)
            report = verify_moment_identities(pm)
            fh.write(f"# record {rec.id}: N={pm.n} k={pm.k}\n")
            for line in report.lines():
                fh.write(line + "\n")
            fh.write("group\texact_mean\texact_var\n")
            for i in range(pm.k):
                fh.write(f"{i}\t{float(exact.exact_mean[i])!r}\t{float(exact.exact_cov[i, i])!r}\n")
            if exact.statistic_values is None:
                fh.write(f"statistic_undefined\t{exact.undefined_reason}\n")
            else:
                fh.write("chi2_critical\texact_tail_prob\n")
                for c, pr in exact.tail_probs.items():
                    fh.write(f"{c:.6g}\t{pr:.6g}\n")
    return EXIT_OK


def cmd_qq(args) -> int:
    column = args.column
    if column is None:
        with open(args.pvalues, encoding="utf-8") as fh:
            head = next((ln for ln in fh if not ln.startswith("#") and ln.strip()), "")
        cols = head.rstrip("\n").split("\t")
        column = "gkw_p_full" if "gkw_p_full" in cols else "gkw"
    try:
        p = read_scan_pvalues(args.pvalues, column)
    except KeyError as exc:
        raise DataError(str(exc)) from None
    if p.size == 0:
        raise DataError(f"no p-values in column {column!r}")
    d, ks_p = ks_uniform(p)
    expected, observed = qq_points(p)
    with _output(args.out) as fh:
        fh.write(f"#ks_D\t{d:.6g}\n#ks_p\t{ks_p:.6g}\n#n\t{p.size}\n")
        fh.write("expected\tobserved\n")
        for e, o in zip(expected, observed):
            fh.write(f"{e:.6g}\t{o:.6g}\n")
    log.info("KS uniformity: D=%.4g p=%.4g (n=%d)", d, ks_p, p.size)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "scan": cmd_scan, "simulate": cmd_simulate,
            "oracle": cmd_oracle, "qq": cmd_qq}


def main(argv=None) -> int:
    logging.basicConfig(format="probkw: %(levelname)s: %(message)s", stream=sys.stderr,
                        level=logging.INFO, force=True)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        log.setLevel(logging.DEBUG)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        # downstream reader (e.g. head) went away
        sys.stderr.close()
        return EXIT_OK
    except (DataError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
