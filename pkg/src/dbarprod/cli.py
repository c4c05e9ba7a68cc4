"""Command line entry point.

Settings resolve in the order: built-in default, config file, command-line
flag, then a DBARPROD_* environment variable (so CI can shadow any flag
without editing configs). The config file is flat INI text: a [run] section
for the global settings and one section per experiment for its options.

Exit status is 0 only when every tolerance the experiment asserts holds.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from .experiments import EXPERIMENTS, ExperimentConfig, emit, run

ENV_PREFIX = "DBARPROD_"
FLAGS = ("config", "experiment", "out", "format", "seed", "nodes", "mesh")


def build_parser():
    p = argparse.ArgumentParser(
        prog="dbarprod",
        description="Run reproducible experiments for the product-domain "
                    "dbar solver and its identities.")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS),
                   help="experiment to run (overrides the config file)")
    p.add_argument("--out", help="output path (default: <experiment>.<ext>)")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt")
    p.add_argument("--seed", type=int, help="64-bit seed for all sampling")
    p.add_argument("--nodes", type=int, help="boundary nodes per curve")
    p.add_argument("--mesh", help="area mesh as RADIALxANGULAR, e.g. 200x256")
    return p


def _env_override(name):
    return os.environ.get(ENV_PREFIX + name.upper())


def resolve_settings(argv=None):
    args = build_parser().parse_args(argv)
    cfg_path = _env_override("config") or args.config

    file_run, file_options = {}, {}
    experiment = args.experiment
    if cfg_path:
        ini = configparser.ConfigParser()
        with open(cfg_path) as fh:
            ini.read_file(fh)
        if ini.has_section("run"):
            file_run = dict(ini.items("run"))
        experiment = (_env_override("experiment") or args.experiment
                      or file_run.get("experiment"))
        if experiment and ini.has_section(experiment):
            file_options = dict(ini.items(experiment))
    else:
        experiment = _env_override("experiment") or args.experiment
    if not experiment:
        raise SystemExit("no experiment selected (flag, config or env)")

    def setting(name, flag_value, cast=str):
        v = _env_override(name)
        if v is None and flag_value is not None:
            v = flag_value
        if v is None:
            v = file_run.get(name)
        return cast(v) if v is not None else None

    return ExperimentConfig(
        experiment=experiment,
        options=file_options,
        seed=setting("seed", args.seed, int) or 12345,
        out=setting("out", args.out),
        fmt=setting("format", args.fmt) or "csv",
        nodes=setting("nodes", args.nodes, int),
        mesh=setting("mesh", args.mesh),
    )


def main(argv=None) -> int:
    config = resolve_settings(argv)
    table = run(config)
    out = config.out or f"{config.experiment}.{config.fmt}"
    emit(table, config.fmt, out)
    if table.passed:
        print(f"PASS {config.experiment}: {len(next(iter(table.columns.values()), []))} "
              f"rows -> {out} ({table.timings.get('total_s', 0):.1f}s)")
        return 0
    print(f"FAIL {config.experiment}: " + "; ".join(table.failures))
    print(f"results in {out}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
