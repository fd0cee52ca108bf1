"""Command-line front end: ``kaclab <command> [flags]``.

Configuration is merged from defaults, a flat ``key=value`` file, ``KACLAB_*``
environment variables and flags, later sources winning.  Every CSV starts
with ``#`` lines echoing the effective configuration.

Exit status: 0 when every check holds, 1 when a check fails, 2 for
configuration or domain errors, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, clt, functionals, kac_walk
from .densities import Density, delta_schedule, invariant_suite
from .errors import ConfigError, InsufficientDataError, KacLabError, UnsupportedOrderError
from .normalization import log_Z, log_Z_gaussian
from .sphere import MAX_IS_N, uniform_sphere_sample

log = logging.getLogger("kaclab")

COMMANDS = ("density-check", "clt", "zn", "gamma", "sweep", "walk", "bounds")
DEFAULT_SWEEP = "32,64,128,256,512,1024"


def _intlist(s):
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    try:
        return tuple(int(x) for x in str(s).split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {s!r}") from None


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _opt_float(s):
    return None if s in (None, "", "none") else float(s)


def _opt_str(s):
    return None if s in (None, "", "none") else str(s)


def _seed(s):
    v = int(s)
    if not 0 <= v < 2 ** 64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return v


# key -> (parser, default)
SCHEMA = {
    "N": (_intlist, DEFAULT_SWEEP),
    "beta": (float, 0.1),
    "delta": (_opt_float, None),
    "seed": (_seed, 0),
    "samples": (int, 100000),
    "steps": (int, 10000),
    "stride": (int, 100),
    "init": (str, "uniform"),
    "points": (int, 201),
    "grid_theta": (int, 256),
    "grid_phi": (int, 256),
    "grid_r": (int, 128),
    "synthetic": (_bool, False),
    "oracle_gaussian": (_bool, False),
    "inject_violation": (_bool, False),
    "timing": (_bool, False),
    "threads": (int, os.cpu_count() or 1),
    "out": (_opt_str, None),
    "svg": (_opt_str, None),
}
# never echoed: they change where or how fast, not what
NOT_ECHOED = ("threads", "out", "svg")


def read_config_file(path: str) -> dict:
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = (p.strip() for p in line.split("=", 1))
            raw[k.replace("-", "_")] = v
    return raw


def resolve_config(flags: dict, env=None, file_path: str | None = None) -> dict:
    """Merge defaults < file < environment < flags and coerce types."""
    env = os.environ if env is None else env
    merged = {k: default for k, (_, default) in SCHEMA.items()}
    layers = []
    if file_path:
        layers.append(read_config_file(file_path))
    layers.append({k: env[f"KACLAB_{k.upper()}"] for k in SCHEMA if f"KACLAB_{k.upper()}" in env})
    layers.append({k: v for k, v in flags.items() if v is not None})
    for layer in layers:
        unknown = sorted(set(layer) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        merged.update(layer)
    try:
        cfg = {k: SCHEMA[k][0](v) if v is not None else None for k, v in merged.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    return cfg


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


class Table:
    def __init__(self, command: str, cfg: dict, columns):
        self.command = command
        self.cfg = cfg
        self.columns = list(columns)
        self.rows = []
        self.notes = []

    def add(self, *values):
        self.rows.append(values)

    def note(self, text: str):
        self.notes.append(text)

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(f"# kaclab {__version__}\n# command={self.command}\n")
        for k in sorted(self.cfg):
            if k not in NOT_ECHOED:
                v = self.cfg[k]
                v = ",".join(map(str, v)) if isinstance(v, tuple) else fmt(v) if v is not None else "none"
                buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(x) for x in r])
        for n in self.notes:
            buf.write(f"# {n}\n")
        return buf.getvalue()


def emit(table: Table, out: str | None):
    text = table.render()
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single_N(cfg) -> int:
    if len(cfg["N"]) != 1:
        raise ConfigError("this command takes a single N")
    return cfg["N"][0]


def _density(cfg, N: int | None = None) -> Density:
    if cfg["oracle_gaussian"]:
        return Density.gaussian()
    if cfg["delta"] is not None:
        return Density.kac(cfg["delta"])
    if N is None:
        raise ConfigError("need --delta, or --N with --beta")
    return Density.kac(delta_schedule(N, cfg["beta"]))


# ---------------------------------------------------------------------------
# commands; each returns (table, ok)
# ---------------------------------------------------------------------------

def cmd_density_check(cfg):
    if cfg["delta"] is None and not cfg["oracle_gaussian"]:
        raise ConfigError("density-check needs --delta")
    dens = _density(cfg)
    t = Table("density-check", cfg, ["check", "value", "expected", "tolerance", "status"])
    ok = True
    for name, val, exp, tol in invariant_suite(dens):
        good = abs(val - exp) <= tol
        ok &= good
        t.add(name, val, exp, tol, "PASS" if good else "FAIL")
    if dens.is_collapsed:
        t.note("collapse: delta = 1/2 is the standard Gaussian")
    return t, ok


def cmd_clt(cfg):
    N = _single_N(cfg)
    if not cfg["oracle_gaussian"] and N < clt.MIN_ORDER:
        raise UnsupportedOrderError(f"convolution order {N} < {clt.MIN_ORDER}")
    dens = _density(cfg, N)
    s2 = dens.sigma2
    lo, hi = clt.bulk_interval(N, s2)
    u = np.linspace(lo, hi, cfg["points"])
    exact = clt.conv_power(dens, N, u)
    gauss = clt.gaussian_llt(N, s2, u)
    t = Table("clt", cfg, ["u", "exact", "gaussian", "deviation"])
    for row in zip(u, exact, gauss, exact - gauss):
        t.add(*row)
    eps = clt.measured_eps(dens, N, 0)
    t.note(f"eps0={fmt(eps.value)}")
    t.note(f"eps0_at={fmt(eps.u_at)}")
    ok = True
    if dens.mix < 0.5:
        cert = clt.clt_certificate(dens.delta, N, cfg["beta"])
        scaled = math.sqrt(N * s2) * cert.total.value
        ok = cert.holds and eps.value <= scaled
        t.note(f"certificate_total={fmt(cert.total.value)}")
        t.note(f"certificate_scaled={fmt(scaled)}")
        t.note(f"certificate_holds={fmt(ok)}")
    else:
        t.note("certificate=n/a (rotation-invariant density)")
    return t, ok


def cmd_zn(cfg):
    dens = _density(cfg, cfg["N"][0] if len(cfg["N"]) == 1 else None)
    t = Table("zn", cfg, ["N", "u", "log_Z", "log_Z_llt", "log_Z_mc", "log_Z_mc_stderr"])
    for N in cfg["N"]:
        d = dens if cfg["delta"] is not None or cfg["oracle_gaussian"] else _density(cfg, N)
        for u in (N / 2, float(N), 2.0 * N):
            lz = log_Z(d, N, u).logZ.log
            llt = log_Z_gaussian(d, N, 0, u).logZ.log if N >= clt.MIN_ORDER else math.nan
            mc, se = _mc_log_Z(d, N, u, cfg["samples"], cfg["seed"])
            t.add(N, u, lz, llt, mc, se)
    return t, True


def _mc_log_Z(d: Density, N: int, u: float, samples: int, seed: int):
    # plain Monte Carlo of the sphere average of prod f; a second route to Z
    if samples <= 0 or N > MAX_IS_N:
        return math.nan, math.nan
    v = uniform_sphere_sample(N, math.sqrt(u), seed, size=samples).velocities
    lp = d.logpdf(v).sum(axis=1)
    m = lp.max()
    w = np.exp(lp - m)
    mean = w.mean()
    return float(m + math.log(mean)), float(w.std(ddof=1) / math.sqrt(samples) / mean)


SWEEP_COLUMNS = ["N", "beta", "delta", "H_per_particle", "numerator_per_particle", "ratio",
                 "ratio_lower_bound", "paper_bound_per_particle", "eps0", "eps1", "eps2"]


@dataclass(frozen=True)
class SweepRecord:
    N: int
    beta: float
    delta: float
    H_per_particle: float
    numerator_per_particle: float
    ratio: float
    ratio_lower_bound: float
    paper_bound_per_particle: float
    eps0: float
    eps1: float
    eps2: float
    runtime_seconds: float = 0.0

    def violations(self) -> list[str]:
        bad = []
        if not all(math.isfinite(x) for x in asdict(self).values()):
            bad.append("non-finite field")
        if self.ratio < self.ratio_lower_bound - 1e-9:
            bad.append("ratio below 2/(N-1)")
        if self.numerator_per_particle > self.paper_bound_per_particle:
            bad.append("numerator above its closed-form bound")
        return bad


def sweep_point(N: int, beta: float, grid: tuple, synthetic: bool = False) -> SweepRecord:
    t0 = time.perf_counter()
    d = delta_schedule(N, beta)
    if synthetic:
        ratio = math.log(N) / N ** (1 - 2 * beta)
        H = math.log(2) / 2
        bound = functionals.paper_numerator_bound(N, d, 0.0, 0.0)
        return SweepRecord(N, beta, d.value, H, ratio * H, ratio, 2 / (N - 1), bound,
                           0.0, 0.0, 0.0, time.perf_counter() - t0)
    rep = functionals.gamma_ratio(N, d, grid=functionals.PolarGrid(*grid))
    return SweepRecord(N, beta, d.value, rep.entropy / N, rep.per_particle, rep.ratio,
                       rep.lower_bound, rep.paper_bound, rep.eps0, rep.eps1, rep.eps2,
                       time.perf_counter() - t0)


def _sweep_table(command, cfg, records):
    cols = SWEEP_COLUMNS + (["runtime_seconds"] if cfg["timing"] else [])
    t = Table(command, cfg, cols)
    ok = True
    for r in records:
        vals = asdict(r)
        t.add(*(vals[c] for c in cols))
        for v in r.violations():
            ok = False
            t.note(f"VIOLATION N={r.N}: {v}")
    return t, ok


def _grid(cfg):
    return (cfg["grid_theta"], cfg["grid_phi"], cfg["grid_r"])


def cmd_gamma(cfg):
    N = _single_N(cfg)
    rec = sweep_point(N, cfg["beta"], _grid(cfg), cfg["synthetic"])
    return _sweep_table("gamma", cfg, [rec])


def run_sweep(Ns, beta, grid, synthetic=False, threads=1):
    Ns = sorted(set(Ns))
    if threads > 1 and len(Ns) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(Ns))) as pool:
            futs = [pool.submit(sweep_point, N, beta, grid, synthetic) for N in Ns]
            recs = [f.result() for f in futs]
    else:
        recs = [sweep_point(N, beta, grid, synthetic) for N in Ns]
    return sorted(recs, key=lambda r: r.N)


def cmd_sweep(cfg):
    Ns = cfg["N"]
    if len(set(Ns)) < 5:
        raise InsufficientDataError(f"a sweep needs at least 5 distinct N, got {len(set(Ns))}")
    recs = run_sweep(Ns, cfg["beta"], _grid(cfg), cfg["synthetic"], cfg["threads"])
    t, ok = _sweep_table("sweep", cfg, recs)
    chk = functionals.villani_scaling_check(recs, cfg["beta"])
    t.note(f"slope={fmt(chk.slope)}")
    t.note(f"spread={fmt(chk.spread)}")
    t.note(f"ratio_decreasing={fmt(chk.decreasing)}")
    if cfg["svg"]:
        write_svg(recs, cfg["beta"], cfg["svg"])
    return t, ok


def write_svg(records, beta: float, path: str) -> bool:
    """Log-log plot of the ratio with ``C log N / N^(1-2 beta)`` fitted at the largest N."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        matplotlib.rcParams["svg.hashsalt"] = "kaclab"
        N = np.array([r.N for r in records], dtype=float)
        ratio = np.array([r.ratio for r in records])
        ref = np.log(N) / N ** (1 - 2 * beta)
        ref *= ratio[-1] / ref[-1]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(N, ratio, "o-", label="measured ratio")
        ax.loglog(N, ref, "--", label=f"C log N / N^{1 - 2 * beta:g}")
        ax.loglog(N, 2 / (N - 1), ":", label="2/(N-1)")
        ax.set_xlabel("N")
        ax.set_ylabel("numerator / entropy")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return True
    except Exception as exc:  # plotting must never fail a computation
        log.warning("SVG output skipped: %s", exc)
        return False


def cmd_walk(cfg):
    N = _single_N(cfg)
    wc = kac_walk.WalkConfig(N=N, steps=cfg["steps"], seed=cfg["seed"], init=cfg["init"],
                             delta=cfg["delta"], stride=cfg["stride"])
    trace = kac_walk.run(wc)
    t = Table("walk", cfg, list(trace.columns))
    for row in trace.rows:
        t.add(*row)
    drift = float(np.max(np.abs(trace.column("energy") - N)))
    ok = drift <= 1e-9 * N
    t.note(f"max_energy_drift={fmt(drift)}")
    t.note(f"reprojections={trace.reprojections}")
    return t, ok


def cmd_bounds(cfg):
    N = _single_N(cfg)
    beta = cfg["beta"]
    d = cfg["delta"] if cfg["delta"] is not None else delta_schedule(N, beta)
    rows = clt.appendix_checks()
    rows += clt.special_property_checks(d, beta, n=N - 1)
    cert = clt.clt_certificate(d, N, beta)
    rows.append(("certificate:outside", cert.measured_outside, cert.outside.value))
    rows.append(("certificate:inside", cert.measured_inside, cert.inside.value))
    if cfg["inject_violation"]:
        rows.append(("injected:violation", 1.0, 0.0))
    t = Table("bounds", cfg, ["check", "lhs", "rhs", "status"])
    ok = True
    for label, lhs, rhs in rows:
        good = lhs <= rhs
        ok &= good
        t.add(label, lhs, rhs, "HOLD" if good else "FAIL")
    for name, term in zip(("outside_t1", "outside_t2", "outside_t3"), cert.outside.terms):
        t.note(f"{name}={fmt(term)}")
    for name, term in zip(("inside_t1", "inside_t2", "inside_t3", "inside_t4"), cert.inside.terms):
        t.note(f"{name}={fmt(term)}")
    return t, ok


HANDLERS = {
    "density-check": cmd_density_check,
    "clt": cmd_clt,
    "zn": cmd_zn,
    "gamma": cmd_gamma,
    "sweep": cmd_sweep,
    "walk": cmd_walk,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kaclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kaclab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--N", dest="N", help="comma-separated particle numbers")
    p.add_argument("--beta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--init", choices=("uniform", "product"))
    p.add_argument("--points", type=int, help="u grid size for the clt command")
    p.add_argument("--grid-theta", dest="grid_theta", type=int)
    p.add_argument("--grid-phi", dest="grid_phi", type=int)
    p.add_argument("--grid-r", dest="grid_r", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--svg")
    for flag in ("synthetic", "oracle-gaussian", "inject-violation", "timing"):
        p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), action="store_const", const=True)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="kaclab: %(message)s")
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    cfg_file = args.pop("config") or os.environ.get("KACLAB_CONFIG")
    try:
        cfg = resolve_config(args, file_path=cfg_file)
        table, ok = HANDLERS[command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"kaclab: error: {exc}", file=sys.stderr)
        return 2
    except KacLabError as exc:
        print(f"kaclab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    emit(table, cfg["out"])
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
