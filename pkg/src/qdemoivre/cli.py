"""Command-line runner: exact tables, Gaussian and tail audits, convergence
sweeps, Monte Carlo estimates and the invariant suite.

Every command writes a metadata record (config echo, version, seed) and a
header row, then one row per result. Output is deterministic for a given
configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

from . import __version__
from .asymptotics import (
    Window,
    gaussian_high_density,
    gaussian_law,
    in_window,
    in_window_counts,
    max_relative_error,
    tail_bound,
)
from .binned_stats import distribution, quantum_prob
from .core import BinPartition, ParticleKind, iter_counts
from .haar_mc import MAX_BINNED_M, MAX_BINNED_N, MODES, mc_average
from .verification import run_all

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "run", "main"]

COMMANDS = ("exact", "gauss", "tail", "sweep", "mc", "verify")
FORMATS = ("csv", "json")
MAX_ROWS = 2_000_000
MAX_EXACT_N = 5000
LINEAR_FLOOR = 1e-300


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending setting."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    N: tuple[int, ...] = ()
    M: Optional[int] = None
    K: Optional[tuple[int, ...]] = None
    q: Optional[tuple[Fraction, ...]] = None
    alpha: Optional[Fraction] = None
    sigma: ParticleKind = ParticleKind.BOSON
    A: float = 1.0
    epsilon: float = 0.1
    samples: int = 10_000
    seed: Optional[int] = None
    mode: str = "haar_average"
    out: Optional[str] = None
    format: str = "csv"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    @property
    def window(self) -> Window:
        return Window(self.A, self.epsilon)

    def partition(self, N: int) -> BinPartition:
        """Bin partition used at particle number ``N``."""
        if self.K is not None:
            return BinPartition(self.K)
        M = self.M if self.M is not None else Fraction(N) / self.alpha
        if Fraction(M).denominator != 1:
            raise ConfigError("alpha", f"N={N} / alpha={self.alpha} is not an integer port count")
        try:
            return BinPartition.from_fractions(self.q, int(M))
        except ValueError as exc:
            raise ConfigError("q", str(exc)) from None

    def echo(self) -> dict[str, str]:
        """Flat ``key -> string`` record that :func:`parse_config` reads back."""
        out = {}
        for f in fields(self):
            if f.name in ("out", "threads"):
                continue
            value = getattr(self, f.name)
            if value is None or value == ():
                continue
            out[f.name] = _format_value(f.name, value)
        return out


def _format_value(name: str, value) -> str:
    if name == "sigma":
        return value.label
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


# -- parsing -----------------------------------------------------------------


def _int_list(name: str, text: str) -> tuple[int, ...]:
    """Comma list of integers or ``start:stop[:step]`` ranges (inclusive)
    or ``start:stop:xF`` geometric ranges."""
    values = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                bits = part.split(":")
                start, stop = int(bits[0]), int(bits[1])
                step = bits[2] if len(bits) > 2 else "1"
                if step.startswith("x"):
                    factor = int(step[1:])
                    if factor < 2:
                        raise ValueError("geometric factor must be at least 2")
                    v = start
                    while v <= stop:
                        values.append(v)
                        v *= factor
                else:
                    values.extend(range(start, stop + 1, int(step)))
            else:
                values.append(int(part))
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {text!r} ({exc})") from None
    if not values:
        raise ConfigError(name, "empty list")
    if any(v < 0 for v in values):
        raise ConfigError(name, "values must be non-negative")
    return tuple(values)


def _fraction(name: str, text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(name, f"not a number or fraction: {text!r}") from None


def _parse_field(name: str, text) -> object:
    text = str(text).strip()
    if name == "command":
        if text not in COMMANDS:
            raise ConfigError(name, f"unknown command {text!r}")
        return text
    if name == "N":
        return _int_list(name, text)
    if name == "K":
        K = _int_list(name, text)
        if any(k < 1 for k in K):
            raise ConfigError(name, "bin sizes must be positive")
        return K
    if name == "q":
        q = tuple(_fraction(name, part) for part in text.split(",") if part.strip())
        if not q or any(v <= 0 for v in q):
            raise ConfigError(name, "fractions must be positive")
        if sum(q) != 1:
            raise ConfigError(name, f"fractions sum to {sum(q)}, not 1")
        return q
    if name == "alpha":
        a = _fraction(name, text)
        if a <= 0:
            raise ConfigError(name, "density must be positive")
        return a
    if name == "sigma":
        try:
            return ParticleKind.parse(text)
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from None
    if name in ("A", "epsilon"):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(name, f"not a number: {text!r}") from None
    if name in ("M", "samples", "seed", "threads"):
        try:
            value = int(text)
        except ValueError:
            raise ConfigError(name, f"not an integer: {text!r}") from None
        if value < (0 if name == "seed" else 1):
            raise ConfigError(name, "value out of range")
        return value
    if name == "mode":
        if text not in MODES:
            raise ConfigError(name, f"choose from {', '.join(MODES)}")
        return text
    if name == "format":
        if text not in FORMATS:
            raise ConfigError(name, f"choose from {', '.join(FORMATS)}")
        return text
    if name == "out":
        return text
    raise ConfigError(name, "unknown setting")


def read_config_file(path: str) -> dict[str, str]:
    """Flat JSON object or ``key = value`` lines (``#`` starts a comment)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return {str(k): _flatten(v) for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _flatten(value) -> str:
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_config(values: dict) -> ExperimentConfig:
    """Build and validate a config from a flat ``name -> text`` mapping."""
    valid = {f.name for f in fields(ExperimentConfig)}
    parsed = {}
    for key, text in values.items():
        if key not in valid:
            raise ConfigError(key, "unknown setting")
        parsed[key] = _parse_field(key, text)
    if "command" not in parsed:
        raise ConfigError("command", "missing")
    try:
        config = ExperimentConfig(**parsed)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    _validate(config)
    return config


def _validate(c: ExperimentConfig) -> None:
    try:
        c.window
    except ValueError as exc:
        raise ConfigError("epsilon" if "epsilon" in str(exc) else "A", str(exc)) from None
    if c.command == "verify":
        return
    if not c.N:
        raise ConfigError("N", "required")
    if c.K is None and c.q is None:
        raise ConfigError("K", "give bin sizes K or fractions q")
    if c.K is not None and c.q is not None:
        raise ConfigError("q", "give either K or q, not both")
    if c.K is not None and c.M is not None and sum(c.K) != c.M:
        raise ConfigError("M", f"M={c.M} differs from sum(K)={sum(c.K)}")
    if c.q is not None and c.M is None and c.alpha is None:
        raise ConfigError("M", "fractions q need M or alpha")
    if c.K is not None and c.alpha is not None:
        raise ConfigError("alpha", "alpha sets M from q; with K the density is N/sum(K)")
    if c.q is not None and c.M is not None and c.alpha is not None:
        raise ConfigError("alpha", "give either M or alpha with q, not both")
    for N in c.N:
        K = c.partition(N)
        if c.command != "exact" and N == 0:
            raise ConfigError("N", "asymptotic and sampling commands need N >= 1")
        if c.sigma is ParticleKind.FERMION:
            if N > K.M:
                raise ConfigError("N", f"{N} fermions exceed {K.M} ports")
            if c.command in ("gauss", "tail", "sweep") and N >= K.M:
                raise ConfigError("N", "fermion asymptotics need N < M")
        if K.r < 2 and c.command in ("gauss", "tail", "sweep"):
            raise ConfigError("K", "asymptotic commands need at least two bins")
        _cost_guard(c, N, K)
    if c.command == "mc":
        if c.seed is None:
            raise ConfigError("seed", "required for mc")
        if c.samples < 2:
            raise ConfigError("samples", "need at least two samples")


def _cost_guard(c: ExperimentConfig, N: int, K: BinPartition) -> None:
    rows = comb(N + K.r - 1, K.r - 1)
    if c.command == "mc":
        if N > MAX_BINNED_N:
            raise ConfigError("N", f"mc is limited to N <= {MAX_BINNED_N}")
        if K.M > MAX_BINNED_M:
            raise ConfigError("M", f"mc is limited to M <= {MAX_BINNED_M}")
        if c.mode == "scattershot" and N > K.M:
            raise ConfigError("mode", "scattershot needs N <= M")
        return
    if c.command == "exact" and N > MAX_EXACT_N:
        raise ConfigError("N", f"exact tables are limited to N <= {MAX_EXACT_N}")
    if c.command in ("exact", "tail") and rows > MAX_ROWS:
        raise ConfigError("N", f"{rows} count vectors exceed the limit of {MAX_ROWS}")
    if c.command in ("gauss", "sweep"):
        width = 2 * c.window.half_width(N) + 1
        if width ** (K.r - 1) > MAX_ROWS:
            raise ConfigError("N", f"about {int(width ** (K.r - 1))} window counts exceed the limit of {MAX_ROWS}")


# -- commands ----------------------------------------------------------------


def _linear(p) -> float:
    # rationals convert with one rounding; exp(log p) would add a second
    value = float(p.exact) if p.exact is not None else (0.0 if p.logp == -math.inf else math.exp(p.logp))
    return value if value >= LINEAR_FLOOR else 0.0


def _count_fields(n: Sequence[int]) -> dict:
    return {f"n{i + 1}": v for i, v in enumerate(n)}


def _cmd_exact(c: ExperimentConfig) -> tuple[list[dict], int]:
    rows = []
    for N in c.N:
        K = c.partition(N)
        for n, p in distribution(N, K, c.sigma).items():
            rows.append(
                {
                    "N": N,
                    "M": K.M,
                    **_count_fields(n),
                    "prob_exact": str(p.exact) if p.exact is not None else "",
                    "prob": _linear(p),
                    "log_prob": p.logp,
                }
            )
    return rows, 0


def _cmd_gauss(c: ExperimentConfig) -> tuple[list[dict], int]:
    rows = []
    for N in c.N:
        K = c.partition(N)
        for n in in_window_counts(N, K, c.window):
            exact = quantum_prob(n, K, c.sigma, "logspace").logp
            law = gaussian_law(n, K, c.sigma, window=c.window)
            row = {
                "N": N,
                "M": K.M,
                **_count_fields(n),
                "log_exact": exact,
                "log_gauss": law.log_value,
                "rel_error": abs(math.expm1(exact - law.log_value)) if exact > -math.inf else math.inf,
                "error_scale": law.leading_error_scale,
            }
            if c.sigma is ParticleKind.BOSON:
                high = gaussian_high_density(n, K)
                row["log_high_density"] = high
                row["rel_error_high_density"] = abs(math.expm1(exact - high)) if exact > -math.inf else math.inf
            rows.append(row)
    return rows, 0


def _cmd_tail(c: ExperimentConfig) -> tuple[list[dict], int]:
    rows = []
    violations = 0
    for N in c.N:
        K = c.partition(N)
        for n in iter_counts(N, K.r):
            if in_window(n, K, c.window):
                continue
            exact = quantum_prob(n, K, c.sigma, "logspace").logp
            bound = tail_bound(n, K, c.sigma, window=c.window)
            holds = exact <= bound
            violations += not holds
            rows.append(
                {"N": N, "M": K.M, **_count_fields(n), "log_exact": exact, "log_bound": bound, "holds": holds}
            )
    return rows, int(violations > 0)


def _sweep_point(args) -> dict:
    N, K, sigma, window = args
    err, count = max_relative_error(N, K, sigma, window)
    fermi = ParticleKind(sigma) is ParticleKind.FERMION
    a = N / K.M
    scale = ((1 - a) ** -3 if fermi else 1.0) * N ** (-3 * window.epsilon)
    if ParticleKind(sigma) is ParticleKind.BOSON:
        scale += a / N
    return {"N": N, "M": K.M, "alpha": a, "max_rel_error": err, "window_counts": count, "error_scale": scale}


def _cmd_sweep(c: ExperimentConfig) -> tuple[list[dict], int]:
    jobs = [(N, c.partition(N), int(c.sigma), c.window) for N in c.N]
    if c.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(c.threads, len(jobs))) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]
    return rows, 0


def _cmd_mc(c: ExperimentConfig) -> tuple[list[dict], int]:
    rows = []
    for N in c.N:
        K = c.partition(N)
        est = mc_average(c.mode, K, c.sigma, c.samples, c.seed, N=N, workers=c.threads)
        exact = distribution(N, K, c.sigma)
        for n, e in est.items():
            target = float(exact[n])
            rows.append(
                {
                    "N": N,
                    "M": K.M,
                    **_count_fields(n),
                    "mean": e.mean,
                    "stderr": e.stderr,
                    "samples": e.samples,
                    "seed": e.seed,
                    "exact": target,
                    "z": e.z_score(target),
                }
            )
    return rows, 0


def _cmd_verify(c: ExperimentConfig) -> tuple[list[dict], int]:
    results = run_all()
    rows = [{"property": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    return rows, int(not all(r.passed for r in results))


HANDLERS = {
    "exact": _cmd_exact,
    "gauss": _cmd_gauss,
    "tail": _cmd_tail,
    "sweep": _cmd_sweep,
    "mc": _cmd_mc,
    "verify": _cmd_verify,
}


# -- output ------------------------------------------------------------------


def metadata(c: ExperimentConfig) -> dict:
    return {"tool": "qdemoivre", "version": __version__, "command": c.command, "seed": c.seed, "config": c.echo()}


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(c: ExperimentConfig, rows: list[dict]) -> str:
    meta = metadata(c)
    if c.format == "json":
        clean = [{k: _json_value(v) for k, v in row.items()} for row in rows]
        return json.dumps({"metadata": meta, "rows": clean}, indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# {json.dumps(meta, sort_keys=False)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = _columns(rows)
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in cols])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)  # JSON has no infinities
    return value


def run(config: ExperimentConfig) -> tuple[str, int]:
    """Execute ``config``; returns the rendered output and the exit status."""
    rows, status = HANDLERS[config.command](config)
    return render(config, rows), status


# -- entry point -------------------------------------------------------------

_FLAG_HELP = {
    "N": "particle numbers: list '2,4', range '2:10[:step]' or geometric '256:4096:x4'",
    "M": "number of output ports",
    "K": "bin sizes, e.g. 1,2,3",
    "q": "bin fractions, e.g. 1/3,2/3 (needs M or alpha)",
    "alpha": "density N/M; sets M = N/alpha per N when q is given",
    "sigma": "boson, fermion or distinguishable",
    "A": "window constant (default 1)",
    "epsilon": "window exponent inside (0, 1/6) (default 0.1)",
    "samples": "Monte Carlo samples (default 10000)",
    "seed": "master seed (required for mc)",
    "mode": f"Monte Carlo averaging: {', '.join(MODES)}",
    "out": "output file (default stdout)",
    "format": "csv or json (default csv)",
    "threads": "worker processes (default: CPU count)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdemoivre", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdemoivre {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value or JSON file; flags override its values")
        for flag, text in _FLAG_HELP.items():
            p.add_argument(f"--{flag}", default=None, help=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = read_config_file(args.config) if args.config else {}
        values.pop("command", None)
        for flag in _FLAG_HELP:
            v = getattr(args, flag)
            if v is not None:
                values[flag] = v
        values["command"] = args.command
        config = parse_config(values)
    except ConfigError as exc:
        print(f"qdemoivre: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        text, status = run(config)
    except ConfigError as exc:
        print(f"qdemoivre: invalid configuration: {exc}", file=sys.stderr)
        return 2
    if config.out and config.out != "-":
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
