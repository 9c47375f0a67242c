"""Command line entry point: ``rwalk run|matrix|diagnose|sweep --config PATH``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .config import ExperimentConfig, load_config
from .errors import ConfigError, Divergence, NonConvergence, RwalkError
from .transition import stationary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_FAILURE = 4

log = logging.getLogger("rwalk")


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    result = harness.run_experiment(cfg)
    extra = {"resolved_gamma": result.gamma}
    blocks = []
    for sampler, trace in result.traces.items():
        harness.write_text(out / f"{cfg.output.csv}_{sampler}.csv",
                           trace.to_csv({**cfg.echo(), **extra}))
        blocks.append(harness.key_value_block(result.summaries[sampler]))
    summary = harness.file_header(cfg, "summary", extra) + "\n".join(blocks)
    harness.write_text(out / f"{cfg.output.csv}_summary.txt", summary)
    print("\n".join(blocks), end="")
    return EXIT_OK


def cmd_matrix(cfg: ExperimentConfig, out: Path) -> int:
    header = harness.file_header(cfg, "matrix")
    for name, p in harness.matrices(cfg).items():
        dump = p.to_text()
        first, rest = dump.split("\n", 1)
        harness.write_text(out / f"matrix_{name}.txt", first + "\n" + header + rest)
        try:
            pi = stationary(p)
            body = "".join(f"{v} {w:.17g}\n" for v, w in enumerate(pi))
        except NonConvergence as exc:
            body = f"# not converged: residual={exc.residual:.3g}\n"
        harness.write_text(out / f"stationary_{name}.txt",
                           f"# n={p.n} kind={name} stationary\n" + header + body)
        print(f"wrote matrix_{name}.txt stationary_{name}.txt")
    return EXIT_OK


def cmd_diagnose(cfg: ExperimentConfig, out: Path) -> int:
    report = harness.key_value_block(harness.diagnose(cfg))
    harness.write_text(out / "diagnose.txt", harness.file_header(cfg, "diagnose") + report)
    print(report, end="")
    return EXIT_OK


def parse_sweep(spec: str) -> tuple[str, list]:
    if not spec or "=" not in spec:
        raise ConfigError("--sweep expects name=v1,v2,...")
    name, raw = spec.split("=", 1)
    values = [json.loads(tok) if tok not in ("auto-grid",) else tok for tok in raw.split(",") if tok]
    if not values:
        raise ConfigError("sweep value list is empty")
    return name.strip(), values


def cmd_sweep(cfg: ExperimentConfig, out: Path, sweep_spec: str, replicas: int) -> int:
    name, values = parse_sweep(sweep_spec)
    rows = harness.sweep(cfg, name, values, replicas)
    text = harness.sweep_csv(cfg, rows, {"sweep": {"name": name, "values": values, "replicas": replicas}})
    harness.write_text(out / f"sweep_{name.replace('.', '_')}.csv", text)
    print(f"wrote {len(rows)} rows")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwalk", description=__doc__)
    parser.add_argument("command", choices=["run", "matrix", "diagnose", "sweep"])
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    parser.add_argument("--replicas", type=int, default=1, help="seed replicas per sweep value")
    parser.add_argument("--sweep", default=None,
                        help="parameter grid for the sweep command, e.g. algo.p_j=0.4,0.2")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "matrix":
            return cmd_matrix(cfg, args.out)
        if args.command == "diagnose":
            return cmd_diagnose(cfg, args.out)
        if args.sweep is None:
            raise ConfigError("sweep needs --sweep name=v1,v2,...")
        return cmd_sweep(cfg, args.out, args.sweep, args.replicas)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except Divergence as exc:
        log.error("diverged at iteration %d", exc.iteration)
        return EXIT_DIVERGENCE
    except RwalkError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
