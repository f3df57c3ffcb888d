"""Command line front end.

Subcommands write their reports into ``--out`` and return exit code 0 on
success, 1 when a quantitative check fails and 2 on usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, inputs, scattering
from .domain import DomainError, load_domain, rasterize
from .functions import GridFunction
from .quadrature import KernelId, convolve_direct, convolve_fft, kernel_table

logger = logging.getLogger("scatter_ab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_COMPLEX_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([+-])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?i\s*$")


class ConfigError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``"a+bi"`` / ``"a-bi"``; the sign between the parts is required."""
    m = _COMPLEX_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse wave number {text!r}; expected the form a+bi, e.g. 2+1i")
    re_part = float(m.group(1))
    im_part = float(m.group(3)) if m.group(3) else 1.0
    return complex(re_part, im_part if m.group(2) == "+" else -im_part)


def format_complex(k: complex) -> str:
    return f"{k.real:g}{'+' if k.imag >= 0 else '-'}{abs(k.imag):g}i"


@dataclass
class RunConfig:
    domain: str = "square"
    n: tuple[int, ...] = (64,)
    margin: float = 4.0
    theta: float = scattering.DEFAULT_THETA
    k: tuple[complex, ...] = (2 + 1j,)
    p: float = 4.0
    epsilon: float | None = None
    trials: int = 32
    seed: int = 0
    out: str = "out"
    u: str = "gaussian"
    tol: float = 0.02
    k_moduli: tuple[float, ...] = ()
    k_phase: float = math.pi / 4
    slope_min: float = -1.3
    slope_max: float = -0.8
    kernels: tuple[str, ...] = ()

    def validate(self) -> None:
        if any(n < 8 for n in self.n):
            raise ConfigError(f"grid size n must be >= 8, got {min(self.n)}")
        if not 0 < self.theta <= 1:
            raise ConfigError(f"theta must lie in (0, 1], got {self.theta}")
        if self.margin < 1:
            raise ConfigError(f"margin must be >= 1, got {self.margin}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.u not in inputs.NAMES:
            raise ConfigError(f"unknown --u {self.u!r}; choose from {', '.join(inputs.NAMES)}")


_FIELD_TYPES = {
    "n": lambda v: tuple(int(x) for x in _as_list(v)),
    "k": lambda v: tuple(parse_complex(str(x)) for x in _as_list(v)),
    "k_moduli": lambda v: tuple(float(x) for x in _as_list(v)),
    "kernels": lambda v: tuple(str(x) for x in _as_list(v)),
    "margin": float, "theta": float, "p": float, "tol": float, "k_phase": float,
    "slope_min": float, "slope_max": float,
    "epsilon": lambda v: None if v is None else float(v),
    "trials": int, "seed": int, "domain": str, "out": str, "u": str,
}


def _as_list(v):
    if isinstance(v, str):
        return [x for x in v.split(",") if x.strip()]
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


def build_config(defaults: dict, config_file: str | None, overrides: dict) -> RunConfig:
    """Defaults, then the JSON config file, then explicit command line flags."""
    values = dict(defaults)
    if config_file:
        try:
            with open(config_file) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(_FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(data)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        converted = {k: _FIELD_TYPES[k](v) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(**converted)
    cfg.validate()
    return cfg


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify_identity(cfg: RunConfig) -> int:
    if len(cfg.k) != 1:
        raise ConfigError("verify-identity takes a single --k")
    k = cfg.k[0]
    if k == 0:
        raise ConfigError("k = 0 is not allowed: the decomposition divides by k (the 1/k factor)")
    domain = load_domain(cfg.domain)
    for n in cfg.n:
        grid = rasterize(domain, n, cfg.margin)
        scattering.check_resolution(k, grid.h, cfg.theta)
    rep = scattering.verify_identity(
        domain, lambda g: inputs.make_input(cfg.u, g, domain, cfg.seed), k, cfg.n,
        margin=cfg.margin, theta=cfg.theta)
    out = _outdir(cfg)
    monotone = all(b < a for a, b in zip(rep.residuals, rep.residuals[1:]))
    order_ok = all(o >= 1.0 for o in rep.orders)
    passed = bool(rep.residuals[-1] <= cfg.tol and monotone and order_ok)
    payload = rep.to_dict() | {"tolerance": cfg.tol, "passed": passed, "domain": cfg.domain,
                               "u": cfg.u, "monotone": monotone, "order_at_least_one": order_ok}
    _write_json(out / "identity.json", payload)
    _write_csv(out / "identity.csv", ["n", "h", "residual"],
               [{"n": n, "h": h, "residual": r} for n, h, r in zip(rep.ns, rep.hs, rep.residuals)])
    for n, r in zip(rep.ns, rep.residuals):
        print(f"n={n:5d}  residual={r:.6e}")
    print("orders:", " ".join(f"{o:.3f}" for o in rep.orders))
    print("PASS" if passed else f"FAIL: final residual {rep.residuals[-1]:.4g} (tol {cfg.tol:g}), "
          f"monotone={monotone}, orders>=1={order_ok}")
    return EXIT_OK if passed else EXIT_FAIL


def _sweep_moduli(cfg: RunConfig) -> tuple[tuple[float, ...], float]:
    if cfg.k_moduli:
        return cfg.k_moduli, cfg.k_phase
    phases = {round(math.atan2(k.imag, k.real), 12) for k in cfg.k}
    if len(phases) > 1:
        raise ConfigError("sweep wave numbers must share one phase")
    return tuple(abs(k) for k in cfg.k), math.atan2(cfg.k[0].imag, cfg.k[0].real)


def cmd_sweep_decay(cfg: RunConfig) -> int:
    moduli, phase = _sweep_moduli(cfg)
    if len(moduli) < 3:
        raise ConfigError(f"need >= 3 points to fit a slope, got {len(moduli)}")
    domain = load_domain(cfg.domain)
    grid = rasterize(domain, cfg.n[0], cfg.margin)
    for m in moduli:
        scattering.check_resolution(m, grid.h, cfg.theta)
    u = inputs.make_input(cfg.u, grid, domain, cfg.seed)
    rep = analysis.decay_sweep(u, moduli, phase, cfg.p, grid, cfg.theta)
    out = _outdir(cfg)
    _write_csv(out / "sweep.csv", ["k_re", "k_im", "p", "norm_u", "norm_ABu", "ratio"], rep.rows())
    summary = {"slope": rep.slope, "halfwidth": rep.halfwidth, "degenerate": rep.degenerate,
               "bracket": [cfg.slope_min, cfg.slope_max], "n": cfg.n[0], "margin": cfg.margin,
               "p": cfg.p, "k_phase": phase}
    if rep.degenerate:
        summary["passed"] = False
        _write_json(out / "sweep.json", summary)
        print("degenerate sweep: ||AB u|| vanishes, slope undefined", file=sys.stderr)
        return EXIT_USAGE
    passed = cfg.slope_min <= rep.slope <= cfg.slope_max
    summary["passed"] = passed
    _write_json(out / "sweep.json", summary)
    for row in rep.rows():
        print(f"|k|={math.hypot(row['k_re'], row['k_im']):8.4g}  ||ABu||={row['norm_ABu']:.6e}")
    print(f"slope={rep.slope:.4f} +- {rep.halfwidth:.4f}")
    print("PASS" if passed else f"FAIL: slope outside [{cfg.slope_min}, {cfg.slope_max}]")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_check_inequalities(cfg: RunConfig) -> int:
    domain = load_domain(cfg.domain)
    rep = analysis.check_constituents(cfg.n[0], cfg.seed, domain, cfg.trials, cfg.margin)
    out = _outdir(cfg)
    _write_csv(out / "constituents.csv", ["operator", "p_in", "p_out_kind", "n", "seed", "ratio"],
               [r.as_dict() for r in rep.rows])
    failures = rep.failures()
    _write_json(out / "constituents.json", {"growth": rep.growth, "ceilings": rep.ceilings,
                                            "growth_limit": analysis.GROWTH_LIMIT,
                                            "failures": failures, "passed": not failures})
    for r in rep.rows:
        print(f"{r.operator:22s} n={r.n:4d} ratio={r.ratio:.5g}")
    for name, g in rep.growth.items():
        print(f"{name:22s} growth={g:.4f}")
    for msg in failures:
        print("FAIL:", msg)
    print("PASS" if not failures else "FAIL")
    return EXIT_OK if not failures else EXIT_FAIL


def cmd_benchmark(cfg: RunConfig) -> int:
    domain = load_domain(cfg.domain)
    kernels = [KernelId(k) for k in cfg.kernels] if cfg.kernels else list(KernelId)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for n in cfg.n:
        grid = rasterize(domain, n, 1.0)
        f = GridFunction(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
        for kern in kernels:
            table = kernel_table(kern, grid)
            for path, fn in (("direct", convolve_direct), ("fft", convolve_fft)):
                t0 = time.perf_counter()
                fn(table, f)
                rows.append({"kernel": kern.value, "n": n, "path": path,
                             "seconds": time.perf_counter() - t0})
                print(f"{kern.value:12s} n={n:4d} {path:6s} {rows[-1]['seconds']:.4f}s")
    _write_csv(_outdir(cfg) / "benchmark.csv", ["kernel", "n", "path", "seconds"], rows)
    return EXIT_OK


COMMANDS = {
    "verify-identity": (cmd_verify_identity, {"n": (64, 128, 256), "margin": 1.0}),
    "sweep-decay": (cmd_sweep_decay, {"n": (512,), "margin": 4.0, "p": 4.0,
                                      "k_moduli": (2.0, 4.0, 8.0, 16.0, 32.0)}),
    "check-inequalities": (cmd_check_inequalities, {"n": (128,), "margin": 2.0}),
    "benchmark": (cmd_benchmark, {"n": (32, 64)}),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatter-ab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file mirroring the flags")
        sp.add_argument("--domain", help="square, lshape or a JSON vertex file")
        sp.add_argument("--n", help="grid size(s), comma separated")
        sp.add_argument("--margin", type=float)
        sp.add_argument("--theta", type=float, help="oscillation guard for |k| h")
        sp.add_argument("--k", help="wave number(s) a+bi, comma separated")
        sp.add_argument("--p", type=float)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--u", help=f"input function: {', '.join(inputs.NAMES)}")
        sp.add_argument("--tol", type=float, help="residual tolerance (verify-identity)")
        sp.add_argument("--k-moduli", dest="k_moduli", help="|k| values (sweep-decay)")
        sp.add_argument("--k-phase", dest="k_phase", type=float, help="arg k in radians (sweep-decay)")
        sp.add_argument("--slope-min", dest="slope_min", type=float)
        sp.add_argument("--slope-max", dest="slope_max", type=float)
        sp.add_argument("--kernels", help="kernel names (benchmark)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func, defaults = COMMANDS[args.command]
    overrides = {f.name: getattr(args, f.name, None) for f in dataclasses.fields(RunConfig)}
    if args.k is not None and args.command == "sweep-decay" and args.k_moduli is None:
        overrides["k_moduli"] = None
        defaults = {k: v for k, v in defaults.items() if k != "k_moduli"}
    try:
        cfg = build_config(defaults, args.config, overrides)
        return func(cfg)
    except (ValueError, OSError) as exc:
        # ConfigError, DomainError, OscillationError, DecompositionError, ExponentError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
