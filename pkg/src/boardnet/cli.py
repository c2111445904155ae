"""Command line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 2 usage error, 3 stale/missing stage artifacts,
4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BoardnetError, StalenessError, UsageError
from .pipeline import STAGE_ORDER, PipelineConfig, run_stage

STAGE_HELP = {
    "synth": "generate a synthetic firm registry with planted structure",
    "ingest": "parse and filter raw firm/position/ownership tables",
    "project": "project positions onto the firm interlock graph",
    "components": "component statistics and giant-component extraction",
    "geocluster": "group firm locations into cityclusters",
    "aggregate": "aggregate the firm graph to the city level",
    "communities": "Louvain communities, both self-loop modes",
    "centrality": "degree, betweenness, eccentricity, distances",
    "locality": "local/nonlocal tie decomposition and hubs",
    "report": "assemble the summary bundle from all stages",
}


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="pipeline config JSON")
    common.add_argument("--out", metavar="DIR",
                        help="run directory (default: config out_dir or ./run)")
    common.add_argument("--seed", type=int, metavar="U64", help="override config seed")
    common.add_argument("--threads", type=int, metavar="N",
                        help="override worker process count")
    common.add_argument("--bandwidth", type=float, help="override MeanShift bandwidth")
    common.add_argument("--resolution", type=float, help="override Louvain resolution")

    parser = argparse.ArgumentParser(
        prog="boardnet",
        description="Board interlock network analysis pipeline")
    sub = parser.add_subparsers(dest="stage", required=True, metavar="STAGE")
    for stage in STAGE_ORDER:
        sub.add_parser(stage, parents=[common], help=STAGE_HELP[stage])
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
        if args.out is not None:
            config.out_dir = args.out
        if args.seed is not None:
            config.seed = args.seed
        if args.threads is not None:
            config.threads = args.threads
        if args.bandwidth is not None:
            config.bandwidth = args.bandwidth
        if args.resolution is not None:
            config.resolution = args.resolution
        entry = run_stage(args.stage, config, config.out_dir)
    except UsageError as err:
        print(f"boardnet {args.stage}: {err}", file=sys.stderr)
        return 2
    except StalenessError as err:
        print(f"boardnet {args.stage}: {err}", file=sys.stderr)
        return 3
    except (BoardnetError, OSError) as err:
        print(f"boardnet {args.stage}: {err}", file=sys.stderr)
        return 4
    print(f"[{args.stage}] ok {json.dumps(entry['counts'], sort_keys=True)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
