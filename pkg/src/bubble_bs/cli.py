"""Command-line interface: ``price``, ``surface``, ``compare`` and ``coeffs``.

Defaults: ``r = 0.2`` and ``alpha = 0.8``; sigma, strike, maturity and the
bubble window are arbitrary choices of this package.

Exit codes: 0 success, 2 validation failure, 3 numerical guard
(SingularBubble / StiffRegime) on a single-point run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import pde
from .core import MarketParams, SquareBubble
from .errors import BubbleValueError, NumericalGuard, OutOfHorizon
from .operators import triangle
from .series import DEFAULT_N_MAX, Method, price_curve, quote

DEFAULT_H_LIST = (0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.10, 1.20, 1.40, 1.80)
NEAR_POLE_TOL = 0.01

DEFAULTS = dict(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0,
                f0=0.0, tau1=0.25, tau2=0.75)


class NearPole(BubbleValueError):
    """Bubble ratio too close to h = 1 without ``--allow-near-pole`` (validation, exit 2)."""


@dataclass
class GridSpec:
    n_s: int = 400
    n_tau: int = 400

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        try:
            ns, nt = text.lower().split("x")
            return cls(int(ns), int(nt))
        except ValueError:
            raise BubbleValueError(f"--grid must look like NSxNT, got {text!r}") from None

    def to_config(self) -> pde.GridConfig:
        return pde.GridConfig(n_s=self.n_s, n_tau=self.n_tau)


@dataclass
class SweepSpec:
    h_values: list[float] = field(default_factory=lambda: list(DEFAULT_H_LIST))
    s_min: float = 0.0
    s_max: float = 300.0
    n_s: int = 61
    n_tau: int = 41
    window_s: list[float] = field(default_factory=lambda: [0.5, 1.5])  # multiples of strike
    window_tau_points: int = 20


@dataclass
class OutputSpec:
    path: str | None = None
    format: str | None = None


@dataclass
class RunConfig:
    market: MarketParams
    bubble: SquareBubble
    method: Method = Method.EXACT
    n_max: int = DEFAULT_N_MAX
    spot: float | None = None
    tau: float | None = None
    grid: GridSpec | None = None
    output: OutputSpec = field(default_factory=OutputSpec)
    sweep: SweepSpec | None = None
    methods: list[Method] | None = None
    allow_near_pole: bool = False
    oracle: bool = False

    def __post_init__(self) -> None:
        self.method = Method(self.method)
        if self.methods is not None:
            self.methods = [Method(m) for m in self.methods]
        self.bubble.check_horizon(self.market)
        if self.output.format not in (None, "csv", "json"):
            raise BubbleValueError(f"format must be csv or json, got {self.output.format!r}")
        if self.sweep is not None and not self.allow_near_pole:
            for h in self.sweep.h_values:
                if abs(h - 1.0) < NEAR_POLE_TOL:
                    raise NearPole(
                        f"SingularBubble: sweep value h={h} is within {NEAR_POLE_TOL} of the pole h=1; "
                        "pass --allow-near-pole to keep it"
                    )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["methods"] = None if self.methods is None else [m.value for m in self.methods]
        d["bubble"]["f0"] = _encode_float(self.bubble.f0)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        bubble = dict(d["bubble"])
        bubble["f0"] = _decode_float(bubble["f0"])
        return cls(
            market=MarketParams(**d["market"]),
            bubble=SquareBubble(**bubble),
            method=Method(d.get("method", Method.EXACT.value)),
            n_max=d.get("n_max", DEFAULT_N_MAX),
            spot=d.get("spot"),
            tau=d.get("tau"),
            grid=None if d.get("grid") is None else GridSpec(**d["grid"]),
            output=OutputSpec(**d.get("output", {})),
            sweep=None if d.get("sweep") is None else SweepSpec(**d["sweep"]),
            methods=d.get("methods"),
            allow_near_pole=d.get("allow_near_pole", False),
            oracle=d.get("oracle", False),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        return cls.from_dict(json.loads(text))


def _encode_float(x: float):
    return "inf" if math.isinf(x) else x


def _decode_float(x) -> float:
    return float(x)


def fmt(x: float) -> str:
    """Shortest round-trip rendering used in every CSV (parses back bit-for-bit)."""
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _check_single_h(cfg: RunConfig) -> None:
    f0 = cfg.bubble.f0
    if f0 == 0 or math.isinf(f0):
        return
    h = f0 / cfg.market.sigma
    if abs(h - 1.0) < NEAR_POLE_TOL and not cfg.allow_near_pole:
        raise NearPole(
            f"SingularBubble: h = f0/sigma = {h:.6g} is within {NEAR_POLE_TOL} of the pole h=1; "
            "pass --allow-near-pole to price it anyway"
        )


def _bubble_for(cfg: RunConfig, value: float, method: Method) -> SquareBubble:
    b = cfg.bubble
    if method.is_dual:
        return SquareBubble.from_dual_ratio(value, cfg.market.sigma, b.tau1, b.tau2)
    return SquareBubble.from_ratio(value, cfg.market.sigma, b.tau1, b.tau2)


# -- commands -------------------------------------------------------------------------------


def cmd_price(cfg: RunConfig, out=None) -> dict:
    out = out or sys.stdout
    _check_single_h(cfg)
    mp = cfg.market
    spot = mp.strike if cfg.spot is None else cfg.spot
    tau = mp.maturity if cfg.tau is None else cfg.tau
    q = quote(spot, tau, mp, cfg.bubble, cfg.method, cfg.n_max)
    result = q.to_dict()
    result["params"] = {"spot": spot, "tau": tau, **cfg.to_dict()}
    if cfg.oracle:
        grid_cfg = (cfg.grid or GridSpec()).to_config()
        est = pde.richardson(mp, cfg.bubble, spot, tau, grid_cfg)
        result["oracle"] = {
            "value": est.value,
            "richardson_error": est.error_estimate,
            "relative_gap": abs(q.price - est.value) / abs(est.value) if est.value else math.nan,
            "grid": f"{grid_cfg.n_s}x{grid_cfg.n_tau}",
        }

    if cfg.output.format == "json":
        text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    else:
        lines = [
            f"price    {q.price:.12g}",
            f"regime   {q.regime.value}",
            f"method   {q.method.value}" + (f" (n_max={q.n_max})" if q.method in (Method.EXACT, Method.DUAL_EXACT) else ""),
            f"basis    rate={q.rate_basis.value}  x={q.x:.12g}",
            "",
            f"{'order':>5}  {'weight':>20}  {'S^n d^nC':>20}  {'contribution':>20}",
        ]
        for t in q.terms:
            lines.append(f"{t.order:>5}  {t.weight:>20.12g}  {t.greek:>20.12g}  {t.contribution:>20.12g}")
        if cfg.oracle:
            o = result["oracle"]
            lines += ["", f"oracle   {o['value']:.12g}  (grid {o['grid']}, Richardson error {o['richardson_error']:.3g})",
                      f"gap      {o['relative_gap']:.3e} relative"]
        text = "\n".join(lines) + "\n"
    if cfg.output.path:
        _atomic_write(Path(cfg.output.path), text)
    else:
        out.write(text)
    return result


def _axes(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    sw = cfg.sweep or SweepSpec()
    s = np.linspace(sw.s_min, sw.s_max, sw.n_s)
    taus = np.linspace(0.0, cfg.market.maturity, sw.n_tau)
    return s, taus


def surface_rows(cfg: RunConfig, value: float) -> list[list[str]]:
    """Rows (tau-major, then S) for one sweep value."""
    mp = cfg.market
    bubble = _bubble_for(cfg, value, cfg.method)
    s, taus = _axes(cfg)
    rows = []
    for tau in taus:
        prices = price_curve(s, float(tau), mp, bubble, cfg.method, cfg.n_max)
        for S, p in zip(s, prices):
            rows.append([fmt(S), fmt(tau), fmt(p), cfg.method.value, fmt(value)])
    return rows


def surface_filename(method: Method, value: float) -> str:
    tag = "hstar" if method.is_dual else "h"
    return f"surface_{method.value}_{tag}{value:.2f}.csv"


def cmd_surface(cfg: RunConfig, out=None) -> list[Path]:
    out = out or sys.stdout
    sw = cfg.sweep or SweepSpec()
    out_dir = Path(cfg.output.path or "surfaces")
    written = []
    for value in sw.h_values:
        rows = surface_rows(cfg, value)
        path = out_dir / surface_filename(cfg.method, value)
        _atomic_write(path, _csv_text(["S", "tau", "price", "method", "h"], rows))
        written.append(path)
        out.write(f"{path}\n")
    return written


COMPARE_HEADER = [
    "h", "method", "n_max", "status", "max_abs_error", "atm_rel_error",
    "series_atm", "oracle_atm", "oracle_richardson_abs", "oracle_richardson_rel",
]


def compare_rows(cfg: RunConfig, log=None) -> list[list[str]]:
    mp = cfg.market
    sw = cfg.sweep or SweepSpec()
    methods = cfg.methods or [Method.EXACT, Method.TRUNC3, Method.PERTURB3]
    grid_cfg = (cfg.grid or GridSpec(800, 800)).to_config()
    spot = mp.strike if cfg.spot is None else cfg.spot
    probe_tau = 0.5 * (cfg.bubble.tau1 + cfg.bubble.tau2) if cfg.tau is None else cfg.tau
    rows = []
    for h in sw.h_values:
        bubble = SquareBubble.from_ratio(h, mp.sigma, cfg.bubble.tau1, cfg.bubble.tau2)
        try:
            fine = pde.solve(mp, bubble, grid_cfg)
            est = pde.richardson(mp, bubble, spot, probe_tau, grid_cfg, fine=fine)
        except (NumericalGuard, BubbleValueError) as exc:
            for m in methods:
                rows.append([fmt(h), m.value, str(_n_max(m, cfg)), type(exc).__name__] + [""] * 6)
            if log:
                log.write(f"h={h}: oracle refused ({type(exc).__name__}: {exc})\n")
            continue
        s_lo, s_hi = (w * mp.strike for w in sw.window_s)
        s_mask = (fine.s >= s_lo) & (fine.s <= s_hi)
        s_win = fine.s[s_mask]
        stride = max(1, (len(fine.tau) - 1) // sw.window_tau_points)
        t_idx = list(range(stride, len(fine.tau), stride))
        for m in methods:
            try:
                max_abs = 0.0
                for j in t_idx:
                    series = price_curve(s_win, float(fine.tau[j]), mp, bubble, m, cfg.n_max)
                    max_abs = max(max_abs, float(np.max(np.abs(series - fine.surface[j, s_mask]))))
                series_atm = quote(spot, probe_tau, mp, bubble, m, cfg.n_max).price
            except (NumericalGuard, BubbleValueError) as exc:
                rows.append([fmt(h), m.value, str(_n_max(m, cfg)), type(exc).__name__] + [""] * 6)
                continue
            rel = abs(series_atm - est.value) / abs(est.value)
            rows.append([
                fmt(h), m.value, str(_n_max(m, cfg)), "ok", fmt(max_abs), fmt(rel),
                fmt(series_atm), fmt(est.value), fmt(est.error_estimate),
                fmt(est.error_estimate / abs(est.value)),
            ])
    return rows


def _n_max(m: Method, cfg: RunConfig) -> int:
    return cfg.n_max if m in (Method.EXACT, Method.DUAL_EXACT) else 3


def cmd_compare(cfg: RunConfig, out=None) -> list[list[str]]:
    out = out or sys.stdout
    start = time.perf_counter()
    rows = compare_rows(cfg, log=sys.stderr)
    text = _csv_text(COMPARE_HEADER, rows)
    if cfg.output.path:
        _atomic_write(Path(cfg.output.path), text)
        out.write(f"{cfg.output.path} ({len(rows)} rows, {time.perf_counter() - start:.1f}s)\n")
    else:
        out.write(text)
    return rows


def cmd_coeffs(n_max: int, out=None) -> None:
    out = out or sys.stdout
    tri = triangle(n_max)
    for row in tri.rows:
        out.write(" ".join(str(v) for v in row) + "\n")


# -- argument parsing -----------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_market_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("market and bubble (sigma, strike, maturity, tau1, tau2 defaults are arbitrary choices)")
    g.add_argument("--config", help="JSON RunConfig file; explicit flags override it")
    g.add_argument("--r", type=float, help="risk-free rate (default 0.2)")
    g.add_argument("--alpha", type=float, help="drift of the underlying (default 0.8)")
    g.add_argument("--sigma", type=float, help="volatility (default 0.4, arbitrary)")
    g.add_argument("--strike", type=float, help="strike K (default 100, arbitrary)")
    g.add_argument("--maturity", type=float, help="maturity T (default 1.0, arbitrary)")
    g.add_argument("--f0", type=float, help="bubble height (default 0)")
    g.add_argument("--h", type=float, help="bubble height as a ratio f0/sigma (alternative to --f0)")
    g.add_argument("--tau1", type=float, help="lower edge of the bubble window in tau (default 0.25)")
    g.add_argument("--tau2", type=float, help="upper edge of the bubble window in tau (default 0.75)")
    g.add_argument("--method", choices=[m.value for m in Method], help="series method (default exact)")
    g.add_argument("--n-max", type=int, help=f"highest order of the exact series (default {DEFAULT_N_MAX})")
    g.add_argument("--grid", help="PDE grid NSxNT")
    g.add_argument("--out", help="output path (file, or directory for surface)")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--allow-near-pole", action="store_true", default=None)
    g.add_argument("--dump-config", action="store_true", help="print the resolved JSON config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubble-bs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one (S, tau) point")
    _add_market_flags(p)
    p.add_argument("--spot", "--S", dest="spot", type=float, help="spot price (default strike)")
    when = p.add_mutually_exclusive_group()
    when.add_argument("--tau", type=float, help="time to maturity (default T)")
    when.add_argument("--t", type=float, help="calendar time; converted to tau = T - t")
    p.add_argument("--oracle", action="store_true", default=None, help="also run the PDE oracle")

    p = sub.add_parser("surface", help="write price surfaces, one CSV per sweep value")
    _add_market_flags(p)
    p.add_argument("--h-list", help="comma-separated sweep values (h, or h* for dual methods)")
    p.add_argument("--s-range", help="S_MIN:S_MAX:N (default 0:300:61)")
    p.add_argument("--tau-points", type=int, help="tau samples on [0, T] (default 41)")

    p = sub.add_parser("compare", help="series-vs-oracle error report")
    _add_market_flags(p)
    p.add_argument("--methods", help="comma-separated methods (default exact,trunc3,perturb3)")
    p.add_argument("--h-list", help="comma-separated h = f0/sigma values")
    p.add_argument("--spot", "--S", dest="spot", type=float, help="probe spot (default strike)")
    p.add_argument("--tau", type=float, help="probe tau (default mid-bubble)")

    p = sub.add_parser("coeffs", help="print the coefficient triangle")
    p.add_argument("--n-max", type=int, default=7)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    market = dict(base.get("market", {}))
    for key in ("r", "alpha", "sigma", "strike", "maturity"):
        if getattr(args, key, None) is not None:
            market[key] = getattr(args, key)
    for key, val in DEFAULTS.items():
        if key in ("r", "alpha", "sigma", "strike", "maturity"):
            market.setdefault(key, val)
    mp = MarketParams(**market)

    bubble = dict(base.get("bubble", {}))
    for key in ("f0", "tau1", "tau2"):
        if getattr(args, key, None) is not None:
            bubble[key] = getattr(args, key)
    if getattr(args, "h", None) is not None:
        if getattr(args, "f0", None) is not None:
            raise BubbleValueError("give either --f0 or --h, not both")
        bubble["f0"] = args.h * mp.sigma
    for key in ("f0", "tau1", "tau2"):
        bubble.setdefault(key, DEFAULTS[key])
    bubble["f0"] = float(bubble["f0"])

    d = dict(base)
    d["market"] = {k: market[k] for k in ("r", "alpha", "sigma", "strike", "maturity")}
    d["bubble"] = bubble
    if args.method is not None:
        d["method"] = args.method
    elif args.command == "surface" and "method" not in base:
        d["method"] = Method.PERTURB3.value
    if args.n_max is not None:
        d["n_max"] = args.n_max
    if args.grid is not None:
        d["grid"] = asdict(GridSpec.parse(args.grid))
    out = dict(base.get("output", {}))
    if args.out is not None:
        out["path"] = args.out
    if args.format is not None:
        out["format"] = args.format
    d["output"] = out
    if args.allow_near_pole:
        d["allow_near_pole"] = True
    if getattr(args, "spot", None) is not None:
        d["spot"] = args.spot
    if getattr(args, "tau", None) is not None:
        d["tau"] = args.tau
    if getattr(args, "t", None) is not None:
        if not 0 <= args.t <= mp.maturity:
            raise OutOfHorizon(f"--t={args.t} outside [0, T={mp.maturity}]")
        d["tau"] = mp.maturity - args.t
    if getattr(args, "oracle", None):
        d["oracle"] = True
    if getattr(args, "methods", None):
        d["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]

    if args.command in ("surface", "compare"):
        sweep = dict(base.get("sweep") or asdict(SweepSpec()))
        if getattr(args, "h_list", None):
            sweep["h_values"] = _floats(args.h_list)
        if getattr(args, "s_range", None):
            try:
                lo, hi, n = args.s_range.split(":")
                sweep.update(s_min=float(lo), s_max=float(hi), n_s=int(n))
            except ValueError:
                raise BubbleValueError(f"--s-range must be S_MIN:S_MAX:N, got {args.s_range!r}") from None
        if getattr(args, "tau_points", None) is not None:
            sweep["n_tau"] = args.tau_points
        d["sweep"] = sweep
    return RunConfig.from_dict(d)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "coeffs":
            cmd_coeffs(args.n_max)
            return 0
        cfg = config_from_args(args)
        if args.dump_config:
            sys.stdout.write(cfg.to_json() + "\n")
            return 0
        if args.command == "price":
            cmd_price(cfg)
        elif args.command == "surface":
            cmd_surface(cfg)
        elif args.command == "compare":
            cmd_compare(cfg)
    except NearPole as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericalGuard as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    except (BubbleValueError, ValueError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
