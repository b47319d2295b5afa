"""Command-line surface: clean, split, train, generate, sample, evaluate,
compare, oracle, synth.

Candidates stream to stdout (or --output) one per line as they are produced;
with --with-prob each line is "<log10_prob>\\t<password>". A final JSON
run-summary line goes to the metadata sink (--meta, default stderr), so
downstream consumers of the candidate stream never see it.

Config precedence: flags > config file (simple key=value) > defaults.
Exit codes: 0 success, 2 config/usage, 3 I/O, 4 model file, 5 adapter
protocol.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from typing import Optional

from . import evaluate as ev
from .adapter import ExternalModel
from .engine import (
    GenerationConfig,
    OrderedSearch,
    brute_force_enumerate,
    random_sample_generate,
)
from .errors import (
    AdapterError,
    ConfigError,
    EmptyCorpusError,
    InvalidOrderError,
    MetricError,
    ModelError,
    OrdguessError,
    StateSpaceError,
    TargetUnreachableError,
)
from .models import InferenceCounter, load_model, save_model, train_ngram
from .search import PackingLadder

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MODEL = 4
EXIT_PROTOCOL = 5

LOG10 = math.log(10.0)


@dataclass
class RunConfig:
    """Generation knobs as they appear on the command line / config file."""

    p_min: float = 1e-7
    capacity_n: int = 100_000
    ladder: str = "0.05,0.005,0.0005,0.00005,0.000005"
    subsearches: int = 1
    fetch_k: int = 64
    max_len: int = 32
    min_len: int = 6
    packing: bool = True
    with_prob: bool = False
    seed: int = 0
    model: str = ""
    output: str = ""

    @classmethod
    def from_sources(cls, flag_values: dict, file_path: Optional[str]) -> "RunConfig":
        merged = {}
        if file_path:
            merged.update(parse_config_file(file_path))
        for key, value in flag_values.items():
            if value is not None:
                merged[key] = value
        known = {f.name: f for f in fields(cls)}
        cfg = cls()
        for key, value in merged.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(value, known[key].type, key))
        return cfg

    def to_file(self, path: str):
        with open(path, "w", encoding="ascii") as fh:
            for f in fields(self):
                fh.write(f"{f.name} = {getattr(self, f.name)}\n")

    def generation_config(self, stop_at_capacity: bool = False) -> GenerationConfig:
        return GenerationConfig(
            p_min=self.p_min,
            capacity=self.capacity_n,
            packing=self.packing,
            ladder=PackingLadder(parse_floats(self.ladder)) if self.packing else None,
            max_len=self.max_len,
            min_len=self.min_len,
            subsearches=self.subsearches,
            fetch_k=min(self.fetch_k, self.capacity_n),
            stop_at_capacity=stop_at_capacity,
        )


_BOOL_WORDS = {"true": True, "on": True, "yes": True, "1": True,
               "false": False, "off": False, "no": False, "0": False}


def _coerce(value, ftype, key):
    if isinstance(value, str):
        value = value.strip()
        try:
            if ftype in ("bool", bool):
                return _BOOL_WORDS[value.lower()] if isinstance(value, str) else bool(value)
            if ftype in ("int", int):
                return int(value)
            if ftype in ("float", float):
                return float(value)
            return value
        except (KeyError, ValueError):
            raise ConfigError(f"bad value {value!r} for config key {key!r}") from None
    return value


def parse_config_file(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{i}: expected key = value, got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def load_any_model(spec: str):
    if not spec:
        raise ConfigError("no model given (use --model)")
    if spec.startswith("external:"):
        return ExternalModel(spec[len("external:"):])
    return load_model(spec)


def read_lines(path: str) -> list[str]:
    # latin-1 round-trips arbitrary bytes so dirty corpora survive until cleaning
    with open(path, "rb") as fh:
        return [line.decode("latin-1") for line in fh.read().splitlines()]


def _open_out(path: str):
    return open(path, "w", encoding="ascii") if path else sys.stdout


def _meta_sink(path: str):
    return open(path, "w", encoding="ascii") if path else sys.stderr


def _emit_meta(args, payload: dict):
    sink = _meta_sink(getattr(args, "meta", "") or "")
    try:
        print(json.dumps(payload), file=sink)
    finally:
        if sink is not sys.stderr:
            sink.close()


# --- subcommands -----------------------------------------------------------


def cmd_clean(args) -> int:
    kept, stats = ev.clean_corpus(read_lines(args.infile))
    with _open_out(args.out) as out:
        for pw in kept:
            out.write(pw + "\n")
    print(json.dumps(stats.as_dict()), file=sys.stderr)
    return EXIT_OK


def cmd_split(args) -> int:
    lines = read_lines(args.infile)
    train, test = ev.split_corpus(lines, args.ratio, args.seed)
    for path, rows in ((args.train, train), (args.test, test)):
        with open(path, "w", encoding="latin-1") as fh:
            for pw in rows:
                fh.write(pw + "\n")
    print(json.dumps({"train": len(train), "test": len(test)}), file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = read_lines(args.corpus)
    model = train_ngram(corpus, args.order, args.smoothing)
    save_model(model, args.out)
    print(json.dumps({"order": args.order, "smoothing": args.smoothing,
                      "passwords": len(corpus)}), file=sys.stderr)
    return EXIT_OK


def _candidate_line(password: str, log_prob: float, with_prob: bool) -> str:
    if with_prob:
        return f"{log_prob / LOG10:.6f}\t{password}"
    return password


def cmd_generate(args) -> int:
    flag_values = {k: getattr(args, k) for k in
                   ("p_min", "capacity_n", "ladder", "subsearches", "fetch_k",
                    "max_len", "min_len", "model", "output", "seed")}
    if args.no_packing:
        flag_values["packing"] = False
    if args.with_prob:
        flag_values["with_prob"] = True
    cfg = RunConfig.from_sources(flag_values, args.config)
    model = load_any_model(cfg.model)
    search = OrderedSearch(model, cfg.generation_config())
    out = _open_out(cfg.output)
    try:
        for rec in search.run():
            out.write(_candidate_line(rec.password, rec.log_prob, cfg.with_prob) + "\n")
            out.flush()
    except BrokenPipeError:
        # downstream consumer closed the stream; partial output is valid
        try:
            sys.stdout.close()
        except BrokenPipeError:
            pass
        return EXIT_OK
    finally:
        if out is not sys.stdout:
            out.close()
        model.close()
    _emit_meta(args, {"command": "generate", **search.summary.as_dict()})
    return EXIT_OK


def cmd_sample(args) -> int:
    model = load_any_model(args.model)
    counter = InferenceCounter()
    out = _open_out(args.output)
    generated = 0
    inferences_by_rule = 0
    try:
        for pw, cost in random_sample_generate(
                model, args.count, args.seed, max_len=args.max_len,
                min_len=args.min_len, counter=counter):
            generated += 1
            inferences_by_rule += cost
            out.write(pw + "\n")
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
        model.close()
    _emit_meta(args, {"command": "sample", "generated": generated,
                      "inferences": counter.count,
                      "inferences_len_plus_one": inferences_by_rule})
    return EXIT_OK


def _read_candidates(path: str, with_prob: bool) -> list[str]:
    lines = read_lines(path)
    if with_prob:
        return [line.split("\t", 1)[1] for line in lines if "\t" in line]
    return lines


def cmd_evaluate(args) -> int:
    generated = set(_read_candidates(args.candidates, args.with_prob))
    test = set(read_lines(args.test))
    train = set(read_lines(args.train))
    report = ev.evaluate_generated(generated, test, train)
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        row = _DictRow(report.as_dict())
        print(ev.format_table([row], list(report.as_dict())))
    return EXIT_OK


class _DictRow:
    def __init__(self, d):
        self._d = d

    def as_dict(self):
        return self._d


def cmd_compare(args) -> int:
    model = load_any_model(args.model)
    try:
        if args.mode == "cover":
            if not (args.test and args.train and args.targets):
                raise ConfigError("cover mode needs --targets, --test and --train")
            cfg = GenerationConfig(
                p_min=args.p_min, capacity=args.capacity_n,
                max_len=args.max_len, min_len=args.min_len)
            rows = ev.compare_at_cover(
                model, parse_floats(args.targets),
                set(read_lines(args.test)), set(read_lines(args.train)), cfg,
                rs_seed=args.seed, rs_max_count=args.rs_max_count)
            columns = ["target", "method", "generated", "unique", "inferences"]
        else:
            if not args.capacities:
                raise ConfigError("capacity mode needs --capacities")
            rows = ev.frontier_capacity_sweep(
                model, [int(c) for c in parse_floats(args.capacities)],
                args.p_min, min_len=args.min_len, max_len=args.max_len)
            columns = ["capacity", "method", "passwords_found"]
    finally:
        model.close()
    if args.json:
        print(json.dumps([r.as_dict() for r in rows]))
    else:
        print(ev.format_table(rows, columns))
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = load_any_model(args.model)
    try:
        results = brute_force_enumerate(
            model, args.p_min, args.min_len, args.max_len,
            visit_budget=args.visit_budget)
    finally:
        model.close()
    out = _open_out(args.output)
    try:
        for pw, lp in results:
            out.write(_candidate_line(pw, lp, args.with_prob) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_synth(args) -> int:
    with _open_out(args.out) as out:
        for pw in ev.synth_corpus(args.count, args.seed):
            out.write(pw + "\n")
    return EXIT_OK


# --- parser wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ordguess",
        description="Ordered password-candidate generation and evaluation.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("clean", help="drop non-printable or out-of-length lines")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--out", default="")
    c.set_defaults(func=cmd_clean)

    c = sub.add_parser("split", help="seeded train/test partition")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--ratio", type=float, default=0.8)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--train", required=True)
    c.add_argument("--test", required=True)
    c.set_defaults(func=cmd_split)

    c = sub.add_parser("train", help="train and save an n-gram model")
    c.add_argument("--corpus", required=True)
    c.add_argument("--order", type=int, default=3)
    c.add_argument("--smoothing", type=float, default=0.01)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_train)

    c = sub.add_parser("generate", help="ordered candidate stream")
    c.add_argument("--config", default=None, help="key=value config file")
    c.add_argument("--model", default=None,
                   help="n-gram file, or external:<command> for an adapter")
    c.add_argument("--p-min", dest="p_min", type=float, default=None)
    c.add_argument("--capacity-n", dest="capacity_n", type=int, default=None)
    c.add_argument("--ladder", default=None, help="comma-separated thresholds")
    c.add_argument("--subsearches", type=int, default=None)
    c.add_argument("--fetch-k", dest="fetch_k", type=int, default=None)
    c.add_argument("--max-len", dest="max_len", type=int, default=None)
    c.add_argument("--min-len", dest="min_len", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--no-packing", action="store_true")
    c.add_argument("--with-prob", action="store_true")
    c.add_argument("--output", default=None)
    c.add_argument("--meta", default="")
    c.set_defaults(func=cmd_generate)

    c = sub.add_parser("sample", help="random-sampling baseline stream")
    c.add_argument("--model", required=True)
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-len", dest="max_len", type=int, default=32)
    c.add_argument("--min-len", dest="min_len", type=int, default=None)
    c.add_argument("--output", default="")
    c.add_argument("--meta", default="")
    c.set_defaults(func=cmd_sample)

    c = sub.add_parser("evaluate", help="cover/effect rates of a candidate file")
    c.add_argument("--candidates", required=True)
    c.add_argument("--test", required=True)
    c.add_argument("--train", required=True)
    c.add_argument("--with-prob", action="store_true",
                   help="candidate lines are '<log10_prob>\\t<password>'")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="cover-target or frontier-capacity sweeps")
    c.add_argument("--model", required=True)
    c.add_argument("--mode", choices=["cover", "capacity"], required=True)
    c.add_argument("--targets", default="", help="cover percentages")
    c.add_argument("--capacities", default="", help="frontier sizes")
    c.add_argument("--test", default="")
    c.add_argument("--train", default="")
    c.add_argument("--p-min", dest="p_min", type=float, default=1e-9)
    c.add_argument("--capacity-n", dest="capacity_n", type=int, default=100_000)
    c.add_argument("--max-len", dest="max_len", type=int, default=32)
    c.add_argument("--min-len", dest="min_len", type=int, default=6)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--rs-max-count", dest="rs_max_count", type=int,
                   default=2_000_000)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_compare)

    c = sub.add_parser("oracle", help="exhaustive enumeration (tiny spaces only)")
    c.add_argument("--model", required=True)
    c.add_argument("--p-min", dest="p_min", type=float, required=True)
    c.add_argument("--min-len", dest="min_len", type=int, default=1)
    c.add_argument("--max-len", dest="max_len", type=int, default=4)
    c.add_argument("--visit-budget", dest="visit_budget", type=int,
                   default=2_000_000)
    c.add_argument("--with-prob", action="store_true")
    c.add_argument("--output", default="")
    c.set_defaults(func=cmd_oracle)

    c = sub.add_parser("synth", help="seeded synthetic corpus for fixtures")
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default="")
    c.set_defaults(func=cmd_synth)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except InvalidOrderError as exc:
        # bad hyperparameters are usage errors, not model-file problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ConfigError, MetricError, EmptyCorpusError, StateSpaceError,
            TargetUnreachableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrdguessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
