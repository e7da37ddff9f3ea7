"""``bernproc`` command line: kernel tables, laws, paths, weights, verification.

Output is one JSON object ``{"metadata": ..., "data": ...}`` or a CSV whose
first line is ``# `` followed by the metadata as compact JSON, then a header
row and data rows.  Floats are written with ``repr`` so they round-trip.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import io
import itertools
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DomainError
from .mehler import HarmonicParams, mehler_closed, mehler_series
from .mixtures import MixtureParams, log_mixture_weight, mixture_weight_partial_sum, mixture_weight_tail_bound
from .processes import Kind, ProcessSpec, TimeGrid, covariance_gram, fdd_law, precision_matrix
from .samplers import (
    DEFAULT_SUBSTEPS,
    empirical_covariance,
    sample_exact,
    sample_ou_recursion,
    sample_periodic_ou,
)
from .verify import VerifyConfig, run_checks

SCHEMA_VERSION = "1"

DEFAULTS = {
    "lam": 1.0,
    "T": 1.0,
    "N": 1,
    "theta": 1.0,
    "truncation": 80,
    "quad_order": 128,
    "count": 100_000,
    "seed": 0,
    "grid_count": 11,
    "space_count": 9,
    "space_range": (-3.0, 3.0),
    "process": "stationary",
    "sampler": "exact",
    "format": "csv",
    "substeps": DEFAULT_SUBSTEPS,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; echoed into the output metadata."""

    subcommand: str
    lam: float = DEFAULTS["lam"]
    T: float = DEFAULTS["T"]
    N: int = DEFAULTS["N"]
    theta: float = DEFAULTS["theta"]
    endpoint: tuple[float, ...] | None = None
    process: str = DEFAULTS["process"]
    grid: tuple[float, ...] | None = None
    grid_count: int | None = None
    grid_range: tuple[float, float] | None = None
    space_count: int = DEFAULTS["space_count"]
    space_range: tuple[float, float] = DEFAULTS["space_range"]
    count: int = DEFAULTS["count"]
    seed: int = DEFAULTS["seed"]
    truncation: int = DEFAULTS["truncation"]
    quad_order: int = DEFAULTS["quad_order"]
    sampler: str = DEFAULTS["sampler"]
    substeps: int = DEFAULTS["substeps"]
    out: str | None = None
    format: str = DEFAULTS["format"]
    deterministic: bool = False
    perturb: float = 0.0

    @property
    def params(self) -> HarmonicParams:
        return HarmonicParams(self.lam, self.T, self.N)

    def endpoint_array(self) -> np.ndarray:
        if self.endpoint is None:
            return np.zeros(self.N)
        a = np.asarray(self.endpoint, dtype=float)
        if a.shape != (self.N,):
            raise DomainError(f"--endpoint needs {self.N} values, got {a.size}")
        return a

    def spec(self) -> ProcessSpec:
        p = self.params
        kind = Kind(self.process)
        if kind is Kind.BRIDGE:
            return ProcessSpec.bridge(p, tuple(self.endpoint_array()))
        if kind is Kind.PERIODIC:
            return ProcessSpec.periodic(p, self.theta)
        return {Kind.STATIONARY: ProcessSpec.stationary, Kind.PINNED: ProcessSpec.pinned, Kind.REVERSED: ProcessSpec.reversed}[
            kind
        ](p)

    def time_grid(self) -> TimeGrid:
        if self.grid is not None:
            if self.grid_count is not None or self.grid_range is not None:
                raise DomainError("--grid excludes --grid-count/--grid-range")
            return TimeGrid(self.grid)
        lo, hi = self.grid_range if self.grid_range is not None else (0.0, self.T)
        n = self.grid_count if self.grid_count is not None else DEFAULTS["grid_count"]
        if n < 1:
            raise DomainError("--grid-count must be >= 1")
        return TimeGrid.linspace(lo, hi, n) if n > 1 else TimeGrid((float(lo),))

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


# -- output --------------------------------------------------------------------


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _column_strings(values) -> list[str]:
    # tolist() yields Python floats/ints, whose repr round-trips.
    if isinstance(values, np.ndarray):
        if values.dtype.kind == "f":
            return list(map(repr, values.tolist()))
        if values.dtype.kind in "iu":
            return list(map(str, values.tolist()))
        values = values.tolist()
    return [_cell(v) for v in values]


def _metadata(cfg: RunConfig, extra: dict) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "subcommand": cfg.subcommand,
        "config": cfg.echo(),
        "defaults": _plain(DEFAULTS),
    }
    meta.update(_plain(extra))
    if not cfg.deterministic:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return meta


def render(cfg: RunConfig, names: list[str], columns: list, extra: dict) -> str:
    """Serialize a column-oriented table with its metadata."""
    meta = _metadata(cfg, extra)
    if cfg.format == "json":
        cols = [c.tolist() if isinstance(c, np.ndarray) else _plain(list(c)) for c in columns]
        data = {"columns": names, "rows": [list(r) for r in zip(*cols)]}
        return json.dumps({"metadata": meta, "data": data}, sort_keys=True, allow_nan=True) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    buf.write(",".join(names) + "\n")
    strs = [_column_strings(c) for c in columns]
    buf.write("".join(",".join(r) + "\n" for r in zip(*strs)))
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str, stdout):
    if cfg.out is None:
        stdout.write(text)
        return
    try:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write output file {cfg.out!r}: {exc.strerror or exc}") from exc


# -- subcommands ---------------------------------------------------------------


def _transpose(rows, width):
    return [[_plain(r[c]) for r in rows] for c in range(width)]


def cmd_kernel(cfg: RunConfig):
    """Closed form vs truncated series of the kernel on a square of points.

    Points sit on the first axis; the other coordinates are zero.
    """
    p = cfg.params
    if cfg.grid is None and cfg.grid_count is None and cfg.grid_range is None:
        times = np.array([cfg.T])
    else:
        times = cfg.time_grid().array
    side = np.linspace(cfg.space_range[0], cfg.space_range[1], cfg.space_count)
    rows = []
    for t in times:
        if not t > 0:
            raise DomainError("kernel times must be positive")
        for xv, yv in itertools.product(side, side):
            x = np.zeros(p.N)
            y = np.zeros(p.N)
            x[0], y[0] = xv, yv
            closed = mehler_closed(x, t, y, p)
            series = mehler_series(x, t, y, p, cfg.truncation)
            rows.append([float(xv), float(yv), float(t), closed, series.value, abs(series.value - closed), series.tail_bound])
    cols = ["x", "y", "t", "g_closed", "g_series", "abs_diff", "tail_bound"]
    return cols, _transpose(rows, len(cols)), {}


def cmd_law(cfg: RunConfig):
    """Covariance, precision and mean of one spec on a grid (one component)."""
    spec = cfg.spec()
    grid = cfg.time_grid()
    law = fdd_law(spec, grid)
    C = covariance_gram(spec, grid.array)
    try:
        P = precision_matrix(spec, grid)
    except DomainError as exc:
        P, why = None, str(exc)
    else:
        why = None
    t = grid.array
    rows = []
    for i, j in itertools.product(range(len(t)), repeat=2):
        rows.append([i, j, t[i], t[j], C[i, j], None if P is None else P[i, j]])
    extra = {
        "spec": spec.describe(),
        "times": t,
        "mean": law.mean.reshape(len(t), spec.N),
        "deterministic_coordinates": list(law.deterministic),
        "precision_note": why,
    }
    return ["i", "j", "time_i", "time_j", "covariance", "precision"], _transpose(rows, 6), extra


def _draw(cfg: RunConfig, spec: ProcessSpec, grid: TimeGrid):
    if cfg.sampler == "exact":
        return sample_exact(fdd_law(spec, grid), cfg.count, cfg.seed)
    if cfg.sampler == "ou":
        if spec.kind not in (Kind.STATIONARY, Kind.PINNED):
            raise DomainError("--sampler ou needs --process stationary or pinned")
        grid.check_within(spec.T)
        initial = "stationary" if spec.kind is Kind.STATIONARY else "origin"
        return sample_ou_recursion(spec.params, grid, initial, cfg.count, cfg.seed)
    if cfg.sampler == "periodic":
        if spec.kind is not Kind.PERIODIC:
            raise DomainError("--sampler periodic needs --process periodic")
        return sample_periodic_ou(spec.params, grid, cfg.count, cfg.seed, cfg.substeps, spec.theta)
    raise DomainError(f"unknown sampler {cfg.sampler!r}")


def cmd_sample(cfg: RunConfig):
    """Sampled paths in long format plus summary moments in the metadata."""
    spec = cfg.spec()
    grid = cfg.time_grid()
    # Validate the grid against the spec before drawing anything.
    grid.check_within(spec.T)
    if cfg.sampler == "exact":
        fdd_law(spec, grid)
    batch = _draw(cfg, spec, grid)
    t = grid.array
    n, N = len(t), spec.N
    pid, k, i = np.meshgrid(np.arange(batch.count), np.arange(n), np.arange(N), indexing="ij")
    k = k.ravel()
    columns = [pid.ravel(), k, t[k], i.ravel(), batch.paths.ravel()]
    extra = {
        "seed": batch.seed,
        "sampler_tag": batch.sampler_tag,
        "rng": batch.rng,
        "substeps": batch.substeps,
        "spec": spec.describe(),
        "times": t,
    }
    if batch.count >= 2:
        rep = empirical_covariance(batch)
        extra["summary"] = {
            "coordinate_order": "time-major, index k*N + i",
            "mean": rep.mean,
            "mean_se": rep.mean_se,
            "covariance": rep.covariance,
            "covariance_se": rep.covariance_se,
        }
    return ["path_id", "time_index", "time", "component", "value"], columns, extra


def cmd_weights(cfg: RunConfig):
    """Mixture weights for every multi-index with entries up to the truncation."""
    mp = MixtureParams(cfg.params, cfg.theta)
    N = cfg.N
    rows = []
    for m in itertools.product(range(cfg.truncation + 1), repeat=N):
        lw = log_mixture_weight(m, mp)
        rows.append([*m, float(np.exp(lw)), lw])
    extra = {
        "period": mp.period,
        "partial_sum": mixture_weight_partial_sum(mp, cfg.truncation),
        "tail_bound": mixture_weight_tail_bound(mp, cfg.truncation),
    }
    return [f"m{j + 1}" for j in range(N)] + ["weight", "log_weight"], _transpose(rows, N + 2), extra


def cmd_verify(cfg: RunConfig):
    vc = VerifyConfig(
        lam=cfg.lam,
        T=cfg.T,
        N=cfg.N,
        theta=cfg.theta,
        endpoint=cfg.endpoint,
        truncation=cfg.truncation,
        quad_order=cfg.quad_order,
        perturb=cfg.perturb,
    )
    results = run_checks(vc)
    rows = _transpose([[r.name, r.identity, r.error, r.tolerance, r.passed] for r in results], 5)
    n_fail = sum(not r.passed for r in results)
    extra = {"checks": len(results), "failed": n_fail, "all_passed": n_fail == 0}
    return ["name", "identity", "error", "tolerance", "passed"], rows, extra


COMMANDS = {
    "kernel": cmd_kernel,
    "law": cmd_law,
    "sample": cmd_sample,
    "weights": cmd_weights,
    "verify": cmd_verify,
}


# -- argument parsing ----------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--lambda", dest="lam", type=float, default=DEFAULTS["lam"], help="oscillator rate (default 1)")
    g.add_argument("--T", type=float, default=DEFAULTS["T"], help="horizon (default 1)")
    g.add_argument("--N", type=int, default=DEFAULTS["N"], help="spatial dimension (default 1)")
    g.add_argument("--theta", type=float, default=DEFAULTS["theta"], help="periodic family parameter (default 1)")
    g.add_argument("--endpoint", type=_floats, help="bridge endpoint a1,...,aN (default origin)")
    g.add_argument(
        "--process",
        choices=[k.value for k in Kind],
        default=DEFAULTS["process"],
        help="law for law/sample (default stationary)",
    )
    g = common.add_argument_group("grids")
    g.add_argument("--grid", type=_floats, help="explicit times t1,t2,...")
    g.add_argument("--grid-count", type=int, help="number of equispaced times (default 11)")
    g.add_argument("--grid-range", type=_pair, help="lo,hi for equispaced times (default 0,T)")
    g.add_argument("--space-count", type=int, default=DEFAULTS["space_count"], help="kernel points per axis")
    g.add_argument("--space-range", type=_pair, default=DEFAULTS["space_range"], help="kernel point range lo,hi")
    g = common.add_argument_group("numerics")
    g.add_argument("--paths", dest="count", type=int, default=DEFAULTS["count"], help="number of sampled paths")
    g.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    g.add_argument("--truncation", type=int, default=DEFAULTS["truncation"], help="series truncation M")
    g.add_argument("--quad-order", type=int, default=DEFAULTS["quad_order"])
    g.add_argument("--sampler", choices=["exact", "ou", "periodic"], default=DEFAULTS["sampler"])
    g.add_argument("--substeps", type=int, default=DEFAULTS["substeps"], help="periodic sampler refinement")
    g = common.add_argument_group("output")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--format", choices=["csv", "json"], default=DEFAULTS["format"])
    g.add_argument("--deterministic", action="store_true", help="omit the timestamp")

    parser = argparse.ArgumentParser(prog="bernproc", description="Harmonic Bernstein processes: kernels, laws, paths, checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("kernel", parents=[common], help="closed form vs series kernel table")
    sub.add_parser("law", parents=[common], help="covariance and precision on a grid")
    sub.add_parser("sample", parents=[common], help="sample paths")
    sub.add_parser("weights", parents=[common], help="mixture weights")
    v = sub.add_parser("verify", parents=[common], help="run every identity check")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    return RunConfig(**{k: v for k, v in vars(args).items() if k in fields})


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cols, rows, extra = COMMANDS[cfg.subcommand](cfg)
        _emit(cfg, render(cfg, cols, rows, extra), stdout)
    except (DomainError, np.linalg.LinAlgError) as exc:
        print(f"bernproc: error: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"bernproc: error: {exc}", file=stderr)
        return 3
    if cfg.subcommand == "verify":
        if extra["failed"]:
            print(f"bernproc: {extra['failed']} of {extra['checks']} checks failed", file=stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
