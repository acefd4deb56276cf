"""Command-line front end.

Exit codes: 0 when the market (or binomial scheme) is free of instantaneous
profit, 2 when it is not, 1 for invalid input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .diagnostics import check_aip_global, check_awip, check_na_node
from .errors import IpDetected, ParseError, SizeError, SuperhedgeError
from .market import (MarketTree, binomial_tree, calibrate_multipliers, load_market,
                     read_price_series, save_market)
from .oracle import MAX_AWIP_LEAVES, oracle_awip_tiny, oracle_full_horizon, oracle_na
from .payoff import PayoffSpec
from .pricing import BinomialScheme, price_binomial_scheme, price_claim
from .report import RunReport, format_number, table_to_csv

log = logging.getLogger("superhedge")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IP = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as "instantaneous profit"
    def error(self, message):
        raise UsageError(message)


def _vector(v) -> Optional[list[float]]:
    return None if v is None else [float(x) for x in v]


def _emit(report: RunReport, target: Optional[str]) -> None:
    if target is None:
        return
    text = report.to_json()
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def _say(args, line: str) -> None:
    if args.report != "-":
        print(line)


def _market_report(args, tree: MarketTree) -> RunReport:
    return RunReport(command=list(args.argv), market=tree.summary())


# -- check ------------------------------------------------------------------

def cmd_check(args) -> int:
    tree = load_market(args.market)
    report = _market_report(args, tree)
    aip = check_aip_global(tree, with_na=args.per_node)
    report.result = {"aip": aip.holds, "failing": list(aip.failing)}
    if args.per_node:
        report.result["na"] = all(v.na for v in aip.verdicts.values())
        report.verdicts = [v.to_dict() for v in aip.verdicts.values()]
    else:
        report.verdicts = [aip.verdicts[n].to_dict() for n in aip.failing]
    for nid in aip.failing:
        report.certificates.append({"node": nid, **aip.verdicts[nid].certificate.to_dict()})
    if args.awip:
        awip = {}
        for t in range(tree.horizon):
            cert = check_awip(tree, t)
            awip[str(t)] = cert is not None
            if cert is not None:
                report.certificates.append({"kind": "martingale-weights", "t": t,
                                            "weights": dict(cert.leaf_weights)})
        report.result["awip"] = awip
        report.result["awip_global"] = all(awip.values())
        # with several assets the martingale certificate is still exact, but its
        # equivalence with the closure-based condition is not established here
        report.result["awip_equivalence_established"] = tree.dim == 1
    _say(args, "AIP: holds" if aip.holds else f"AIP: fails at {', '.join(aip.failing)}")
    if args.per_node:
        for v in aip.verdicts.values():
            _say(args, f"  {v.node}: aip={v.aip} na={v.na}")
    if args.awip:
        for t, ok in report.result["awip"].items():
            _say(args, f"AWIP from t={t}: {'holds' if ok else 'fails'}")
        _say(args, f"AWIP: {'holds' if report.result['awip_global'] else 'fails'}")
    return _finish(args, report, EXIT_OK if aip.holds else EXIT_IP)


# -- price ------------------------------------------------------------------

def _oracle_rows(tree: MarketTree, payoff, surface) -> tuple[list[dict], float]:
    rows, worst = [], 0.0
    for nid in tree.internal_nodes():
        try:
            ref = oracle_full_horizon(tree, payoff, nid).value
        except SizeError as exc:
            rows.append({"node": nid, "reason": str(exc)})
            continue
        got = surface.value(nid)
        if got == ref:
            dev = 0.0
        elif math.isinf(got) or math.isinf(ref):
            dev = math.inf
        else:
            dev = abs(got - ref)
        worst = max(worst, dev)
        rows.append({"node": nid, "value": got, "oracle": ref, "deviation": dev})
    return rows, worst


def cmd_price(args) -> int:
    tree = load_market(args.market)
    payoff = PayoffSpec.parse(args.payoff)
    report = _market_report(args, tree)
    surface = price_claim(tree, payoff)
    root = surface.root
    aip = check_aip_global(tree)
    report.result = {"payoff": str(payoff), "value": root.value, "aip": aip.holds,
                     "ip_nodes": surface.ip_nodes()}
    if args.hedge:
        report.result["hedge"] = _vector(root.hedge)
    if not root.finite:
        report.result["ip_theta"] = _vector(root.ip_theta)
    for nid in surface.ip_nodes():
        r = surface[nid]
        if r.ip_theta is not None:
            report.certificates.append({"node": nid, "kind": "separating-slope",
                                        "theta": _vector(r.ip_theta)})
    report.surface = [{"time": t, "node": nid, "value": v,
                       "theta": None if any(math.isnan(x) for x in th) else list(th)}
                      for t, nid, v, *th in surface.rows()]
    _say(args, f"value: {format_number(root.value)}")
    if not root.finite and root.ip_theta is not None:
        _say(args, "instantaneous profit, strategy: " + " ".join(format_number(x) for x in root.ip_theta))
    if args.hedge and root.hedge is not None:
        _say(args, "hedge: " + " ".join(format_number(x) for x in root.hedge))
    if args.oracle:
        rows, worst = _oracle_rows(tree, payoff, surface)
        report.result["oracle"] = {"method": "full-lp", "max_deviation": worst, "nodes": rows}
        _say(args, f"oracle max deviation: {format_number(worst)}")
    if args.surface:
        header = ["time", "node", "value"] + [f"theta_{k + 1}" for k in range(tree.dim)]
        Path(args.surface).write_text(table_to_csv(header, surface.rows()), encoding="utf-8")
    return _finish(args, report, EXIT_OK if aip.holds else EXIT_IP)


# -- binomial ---------------------------------------------------------------

def _read_multipliers(path) -> list[tuple[float, float]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip().lower() in ("kd", "k_d", "down"):
                continue
            if len(row) != 2:
                raise ParseError(f"multipliers line {lineno}: expected 'kd,ku'")
            try:
                out.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ParseError(f"multipliers line {lineno}: not a number") from None
    if not out:
        raise ParseError("multipliers file is empty")
    return out


def cmd_binomial(args) -> int:
    if args.multipliers:
        mults = _read_multipliers(args.multipliers)
        if args.steps is not None and args.steps != len(mults):
            raise UsageError(f"--steps {args.steps} disagrees with {len(mults)} rows in the multipliers file")
    else:
        if args.kd is None or args.ku is None or args.steps is None:
            raise UsageError("give --kd, --ku and --steps, or --multipliers")
        mults = [(args.kd, args.ku)] * args.steps
    payoff = PayoffSpec.parse(args.payoff)
    scheme = BinomialScheme(args.s0, tuple(mults))
    if not scheme.satisfies_aip():
        bad = [t for t, (kd, ku) in enumerate(scheme.multipliers) if not kd <= 1.0 <= ku]
        print(f"instantaneous profit: k^d <= 1 <= k^u fails at steps {bad}", file=sys.stderr)
        return EXIT_IP
    values = price_binomial_scheme(scheme, payoff)
    text = table_to_csv(["time", "state", "price", "value", "theta"], values.rows())
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"value: {format_number(values.root_value)}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- calibrate --------------------------------------------------------------

def cmd_calibrate(args) -> int:
    series = read_price_series(args.csv)
    mults = calibrate_multipliers(series, args.window)
    sys.stdout.write(table_to_csv(["step", "kd", "ku"], [(i, kd, ku) for i, (kd, ku) in enumerate(mults)]))
    ok = all(kd <= 1.0 <= ku for kd, ku in mults)
    if args.emit_tree is not None:
        if not args.output:
            raise UsageError("--emit-tree needs --output")
        if args.emit_tree < 1:
            raise UsageError("--emit-tree needs a positive horizon")
        # the most recent window describes the market going forward
        tree = binomial_tree(series[-1], [mults[-1]] * args.emit_tree)
        save_market(tree, args.output)
        ok = mults[-1][0] <= 1.0 <= mults[-1][1]
    return EXIT_OK if ok else EXIT_IP


# -- oracle -----------------------------------------------------------------

def cmd_oracle(args) -> int:
    tree = load_market(args.market)
    payoff = PayoffSpec.parse(args.payoff)
    report = _market_report(args, tree)
    node = args.node or tree.root
    if node not in tree:
        raise UsageError(f"unknown node {node!r}")
    ref = oracle_full_horizon(tree, payoff, node)
    got = price_claim(tree, payoff).value(node)
    dev = 0.0 if got == ref.value else (math.inf if math.isinf(got) or math.isinf(ref.value)
                                         else abs(got - ref.value))
    report.result = {"node": node, "payoff": str(payoff), "method": ref.method,
                     "oracle": ref.value, "value": got, "deviation": dev}
    na = {}
    for nid in tree.internal_nodes():
        a, b = oracle_na(tree, nid), check_na_node(tree, nid).na
        na[nid] = a
        report.verdicts.append({"node": nid, "na_oracle": a, "na": b, "agree": a == b})
    if len(tree.leaves()) <= MAX_AWIP_LEAVES:
        report.result["awip_oracle"] = {str(t): oracle_awip_tiny(tree, t) for t in range(tree.horizon)}
    _say(args, f"oracle value at {node}: {format_number(ref.value)}")
    _say(args, f"pricing value at {node}: {format_number(got)}")
    _say(args, f"deviation: {format_number(dev)}")
    aip = check_aip_global(tree)
    return _finish(args, report, EXIT_OK if aip.holds else EXIT_IP)


# ---------------------------------------------------------------------------

def _finish(args, report: RunReport, code: int) -> int:
    report.timing = {"seconds": time.perf_counter() - args.started}
    _emit(report, args.report)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superhedge", description="Super-hedging prices and arbitrage diagnostics on finite trees.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="AIP / NA / AWIP diagnostics")
    p.add_argument("market")
    p.add_argument("--awip", action="store_true", help="search for martingale weights from every t")
    p.add_argument("--per-node", action="store_true", help="verdicts (with NA) for every node")
    p.add_argument("--report", metavar="PATH", help="write the JSON report ('-' for stdout)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("price", help="super-hedging cost of a claim")
    p.add_argument("market")
    p.add_argument("payoff", help="call:K | put:K | pwl:x1,v1;x2,v2;... | leaf:{id:v,...}")
    p.add_argument("--surface", metavar="PATH", help="write per-node values as CSV")
    p.add_argument("--hedge", action="store_true", help="print the root hedge")
    p.add_argument("--oracle", action="store_true", help="cross-check every node against the full LP")
    p.add_argument("--report", metavar="PATH")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("binomial", help="value table of a convex claim in a binomial scheme")
    p.add_argument("payoff")
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--kd", type=float)
    p.add_argument("--ku", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--multipliers", metavar="CSV", help="one 'kd,ku' row per step")
    p.add_argument("--output", metavar="PATH", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_binomial, report=None)

    p = sub.add_parser("calibrate", help="rolling multipliers from a date,price CSV")
    p.add_argument("csv")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--emit-tree", type=int, metavar="T", help="write the induced binomial tree")
    p.add_argument("--output", metavar="PATH")
    p.set_defaults(func=cmd_calibrate, report=None)

    p = sub.add_parser("oracle", help="brute-force cross-check")
    p.add_argument("market")
    p.add_argument("payoff")
    p.add_argument("--node")
    p.add_argument("--report", metavar="PATH")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.argv = argv
    args.started = time.perf_counter()
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IpDetected as exc:
        print(f"instantaneous profit: {exc}", file=sys.stderr)
        return EXIT_IP
    except (SuperhedgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
