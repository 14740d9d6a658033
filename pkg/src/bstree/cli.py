"""Command-line entry point: ``bstree index | query | bench``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from bstree.bench import DEFAULT_RADII, ExperimentConfig, emit_plot_data, run_experiment
from bstree.exceptions import BSTreeError, ConfigError, DataError
from bstree.pruning import PruneReport, build_index
from bstree.query import RangeQuery, range_search
from bstree.sax import SAXConfig
from bstree.stream import SlidingWindow, StreamPoint, WindowArchive, WindowSpec, read_stream_file, synth_values
from bstree.tree import BSTree

logger = logging.getLogger("bstree")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _float_list(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags given on the command line win")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset", help="numeric stream file")
    src.add_argument("--synthetic", choices=["walk", "sine"], help="synthetic stream instead of a file")
    p.add_argument("--drop-first-column", action="store_true", help="skip a leading label column per row")
    p.add_argument("--tw", type=int, default=512, help="window length")
    p.add_argument("--nw", type=int, default=None, help="number of windows to index")
    p.add_argument("--slide", type=int, default=None, help="points between windows (default: tw)")
    p.add_argument("--word-len", type=int, default=8)
    p.add_argument("--alpha", type=_int_list, default=(4,), help="alphabet size(s), comma separated")
    p.add_argument("--order", type=int, default=32, help="B-tree order m")
    p.add_argument("--mbr-cap", type=int, default=64, help="words per MBR range c")
    p.add_argument("--htree", type=int, default=4, help="maximum tree height")
    p.add_argument("--tmpth", type=float, default=1.0, help="pruning threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (index: prune log, query: results, bench: report)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bstree", description="BSTree stream index tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.subcommands = sub.choices

    p = sub.add_parser("index", help="build an index and print its statistics")
    _add_common(p)
    p.add_argument("--dump", help="write the preorder tree dump here")
    p.add_argument("--catalog-out", help="export the MBR catalog (lo<TAB>hi lines)")

    p = sub.add_parser("query", help="build an index and run a batch of range queries")
    _add_common(p)
    p.add_argument("--queries", required=False, help="query file: radius<TAB>v1,v2,...,vw per line")
    p.add_argument("--mode", choices=["approximate", "exact"], default="exact")

    p = sub.add_parser("bench", help="precision/recall sweep over radii and alphabet sizes")
    _add_common(p)
    p.add_argument("--radii", type=_float_list, default=DEFAULT_RADII)
    p.add_argument("--mode", choices=["approximate", "exact"], default="approximate")
    p.add_argument("--queries", type=int, default=50, help="number of workload queries")
    p.add_argument("--noise", type=float, default=0.02, help="query perturbation (normalized units)")
    p.add_argument("--hot-fraction", type=float, default=1.0, help="share of windows queries are drawn from")
    p.add_argument("--random-fraction", type=float, default=0.0, help="share of pure random-walk queries")
    p.add_argument("--plot-dir", help="directory for the figure data tables")
    p.add_argument("--timing", action="store_true", help="add mean_query_us (makes output run-dependent)")
    p.set_defaults(alpha=(4, 6, 8))
    return parser


def read_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser.subcommands[args.command]
        settings = read_config_file(args.config)
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in settings.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            action = known[key]
            if action.const is True:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(value) if action.type else value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _stream_values(args, need: int | None) -> np.ndarray:
    if args.dataset:
        values = read_stream_file(args.dataset, drop_first_column=args.drop_first_column)
    else:
        if need is None:
            raise UsageError("--nw is required with a synthetic stream")
        kind = {"walk": "random-walk", "sine": "sine-with-noise"}[args.synthetic or "walk"]
        values = synth_values(kind, need, args.seed)
    if need is not None:
        if len(values) < need:
            raise DataError(f"dataset has {len(values)} points; {need} are required")
        values = values[:need]
    return values


def _build(args):
    slide = args.slide or args.tw
    need = None if args.nw is None else (args.nw - 1) * slide + args.tw
    values = _stream_values(args, need)
    cfg = SAXConfig(args.tw, args.word_len, args.alpha[0])
    archive = WindowArchive()
    window = SlidingWindow(WindowSpec(args.tw, args.slide), cfg, archive)
    prunes: list[PruneReport] = []
    tree = build_index(
        BSTree(cfg, args.order, args.mbr_cap),
        window.extend(StreamPoint(i, v) for i, v in enumerate(values.tolist())),
        args.htree,
        args.tmpth,
        on_prune=lambda _t, r: prunes.append(r),
    )
    return tree, archive, prunes


def cmd_index(args) -> int:
    tree, archive, prunes = _build(args)
    stats = {
        "windows": len(archive),
        "height": tree.height,
        "mbrs": len(tree),
        "words": tree.word_count(),
        "prunes": len(prunes),
    }
    for key, value in stats.items():
        print(f"{key}\t{value}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(PruneReport.csv_header() + "\n")
            fh.writelines(r.csv_row() + "\n" for r in prunes)
    if args.dump:
        Path(args.dump).write_text(tree.dump())
    if args.catalog_out:
        tree.catalog.export(args.catalog_out)
    return EXIT_OK


def read_query_file(path, w: int) -> list[tuple[float, np.ndarray]]:
    queries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            radius, body = line.split("\t", 1)
            pattern = np.array([float(v) for v in body.split(",")])
            r = float(radius)
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected radius<TAB>v1,...,v{w}") from None
        if len(pattern) != w:
            raise DataError(f"{path}:{lineno}: pattern has {len(pattern)} values, expected {w}")
        queries.append((r, pattern))
    return queries


def cmd_query(args) -> int:
    if not args.queries:
        raise UsageError("query needs --queries FILE")
    queries = read_query_file(args.queries, args.tw)
    tree, archive, _ = _build(args)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["query_index", "mode", "matches", "candidates", "nodes_visited", "elapsed_us"])
        for i, (radius, pattern) in enumerate(queries):
            res = range_search(tree, RangeQuery(pattern, radius, args.mode), archive)
            matches = " ".join(str(m) for m in sorted(res.matches))
            writer.writerow([i, args.mode, matches, res.candidates_examined, res.nodes_visited,
                             round(res.elapsed * 1e6)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bench(args) -> int:
    kind = {"walk": "random-walk", "sine": "sine-with-noise"}[args.synthetic or "walk"]
    cfg = ExperimentConfig(
        dataset=args.dataset,
        synthetic=kind,
        tw=args.tw,
        nw=args.nw or 3600,
        slide=args.slide,
        word_len=args.word_len,
        alphas=args.alpha,
        order=args.order,
        mbr_cap=args.mbr_cap,
        htree=args.htree,
        tmpth=args.tmpth,
        radii=args.radii,
        mode=args.mode,
        queries=args.queries,
        noise=args.noise,
        hot_fraction=args.hot_fraction,
        random_fraction=args.random_fraction,
        seed=args.seed,
        drop_first_column=args.drop_first_column,
    )
    report = run_experiment(cfg)
    out = args.out or "bench.csv"
    report.write_csv(out, include_timing=args.timing)
    if args.plot_dir:
        emit_plot_data(report, args.plot_dir)
    for alpha in cfg.alphas:
        print(f"alpha={alpha}\tpre={report.mean_precision(alpha, 'pre-prune'):.4f}"
              f"\tpost={report.mean_precision(alpha, 'post-prune'):.4f}")
    return EXIT_OK


COMMANDS = {"index": cmd_index, "query": cmd_query, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bstree: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"bstree: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BSTreeError, OSError) as exc:
        print(f"bstree: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
