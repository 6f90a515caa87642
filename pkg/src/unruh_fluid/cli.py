"""Command-line driver: dispersion tables, rate and temperature sweeps,
laboratory-unit mapping and oracle cross-checks.

Exit codes: 0 success, 1 verification failure (or no row could be computed),
2 usage error, 3 physical-constraint violation.
"""
import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from ._backend import backend_name
from .dispersion import CondensateParams, UnitDispersion, analyze_roton, f_squared
from .errors import (
    CutoffError,
    DomainError,
    InstabilityError,
    PhysicalConstraintError,
    QuadratureError,
    TruncationError,
)
from .limits import li_limit
from .oracle import auto_smearing, wightman_rate
from .response import DetectorOrbit, detailed_balance_temperature, rate_pair, transition_rate
from .units import SETUP_LABELS, UNIT_LABELS, PhysicalSetup, constants_checksum, derive_scales

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_PHYSICAL = 0, 1, 2, 3
THREADS_ENV = "UNRUH_FLUID_THREADS"
FLOAT_FMT = "%.16e"

SWEEP_AXES = {
    "dispersion": ("zeta",),
    "rate": ("omega0", "v", "a_chem"),
    "temperature": ("v", "omega0", "a_chem"),
}

# options that change how a run executes but never what it computes
_NON_SEMANTIC = {"--threads": True, "--out": True}


class UsageError(Exception):
    pass


# numerical failures reported per row rather than aborting a sweep
NUMERIC_ERRORS = (DomainError, InstabilityError, TruncationError, CutoffError, QuadratureError)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    log: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and self.start < self.stop):
            raise UsageError(f"sweep needs finite start < stop, got {self.start}:{self.stop}")
        if self.points < 2:
            raise UsageError("sweep needs at least 2 points")
        if self.log and self.start <= 0.0:
            raise UsageError("--log sweeps need a positive start")

    def values(self):
        if self.log:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def parse_sweep(text, command, log=False):
    """'AXIS=start:stop:points' (or bare 'start:stop:points' for dispersion)."""
    axes = SWEEP_AXES[command]
    if "=" in text:
        axis, rng = text.split("=", 1)
    elif len(axes) == 1:
        axis, rng = axes[0], text
    else:
        raise UsageError(f"sweep must name its axis, one of {', '.join(axes)}")
    axis = axis.strip()
    if axis not in axes:
        raise UsageError(f"cannot sweep {axis!r} in {command}; choose from {', '.join(axes)}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise UsageError(f"sweep range must be start:stop:points, got {rng!r}")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad sweep range {rng!r}: {exc}") from None
    return SweepSpec(axis, start, stop, points, log)


# ---------------------------------------------------------------------------
# configuration files

def _strip_unit(key):
    key = key.strip()
    if key.endswith("]") and " [" in key:
        key = key[: key.rindex(" [")]
    return key.replace("-", "_")


def _coerce(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_config(path):
    """Flat key=value text or a JSON object; see docs/config.md."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise UsageError(f"config {path}: expected a JSON object")
        return {_strip_unit(k): v for k, v in raw.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config {path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[_strip_unit(key)] = _coerce(val)
    return out


def _apply_config(args, config, allowed, ignored=()):
    for key, val in config.items():
        if key in ignored:
            continue
        if key not in allowed:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, key, None) is None:
            setattr(args, key, val)


# ---------------------------------------------------------------------------
# output helpers

def fmt(x):
    return FLOAT_FMT % x


def provenance(argv, params):
    kept = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        name = tok.split("=", 1)[0]
        if name in _NON_SEMANTIC:
            skip = "=" not in tok
            continue
        kept.append(tok)
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
    return (f"# unruh-fluid {__version__} backend={backend_name()} "
            f"argv={' '.join(kept)} params-sha256={digest}")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def write_csv(path, header_line, columns, rows):
    fh, close = _open_out(path)
    try:
        fh.write(header_line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    finally:
        if close:
            fh.close()


def thread_count(args):
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get(THREADS_ENV)
        try:
            n = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def ordered_map(fn, items, threads):
    """fn over items, results in input order whatever the worker count."""
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands

def _medium(args, a_chem=None):
    if getattr(args, "unit_dispersion", False):
        return UnitDispersion()
    return CondensateParams(args.r0, args.a if a_chem is None else a_chem)


def _gap(args):
    if args.etilde is not None and args.omega0_mstar is not None:
        raise UsageError("give either --etilde or --omega0-mstar, not both")
    if args.etilde is not None:
        return float(args.etilde)
    if args.omega0_mstar is not None:
        return float(args.omega0_mstar) * args.mtilde
    return None


def cmd_dispersion(args, argv):
    _apply_config(args, args.config_data, {"r0", "a", "zeta", "log", "threads"})
    if args.r0 is None or args.a is None:
        raise UsageError("dispersion needs --r0 and --a")
    thread_count(args)  # validated for a uniform interface; the table is vectorised
    spec = parse_sweep(args.zeta or "0:4:401", "dispersion", bool(args.log))
    p = CondensateParams(args.r0, args.a)
    z = spec.values()
    f2 = np.asarray(f_squared(p, z), dtype=float)
    rows = []
    for zi, fi2 in zip(z, f2):
        if fi2 < 0.0:
            rows.append([fmt(zi), fmt(fi2), "", "UNSTABLE"])
        else:
            rows.append([fmt(zi), fmt(fi2), fmt(math.sqrt(fi2)), "OK"])
    params = {"cmd": "dispersion", "r0": p.r0, "a": p.a_chem, "sweep": asdict(spec)}
    write_csv(args.out, provenance(argv, params), ["zeta", "f_squared", "f", "flag"], rows)
    return EXIT_OK


_ORBIT_KEYS = {"r0", "a", "mtilde", "v", "etilde", "omega0_mstar", "sweep", "log", "tol", "threads",
               "unit_dispersion", "verify"}


def _check_orbit_args(args, need_gap=True):
    if args.mtilde is None:
        raise UsageError(f"{args.command} needs --mtilde (the orbit radius in units hbar c0 / M*)")
    if not args.unit_dispersion and (args.r0 is None or args.a is None):
        raise UsageError(f"{args.command} needs --r0 and --a")
    if args.unit_dispersion:
        args.r0 = 0.0 if args.r0 is None else args.r0
        args.a = 1.0 if args.a is None else args.a
    args.tol = 1e-8 if args.tol is None else float(args.tol)


def _validate_inputs(args, spec, e_fixed):
    """Build medium and orbit at both sweep ends so bad fixed inputs are usage errors."""
    ends = spec.values()[[0, -1]] if spec else [None]
    for x in ends:
        v = x if spec and spec.axis == "v" else args.v
        e = x * args.mtilde if spec and spec.axis == "omega0" else e_fixed
        a = x if spec and spec.axis == "a_chem" else None
        _medium(args, a)
        DetectorOrbit(args.mtilde, e, v)


def _rate_row(args, axis, x, e_fixed):
    v = args.v
    e = e_fixed
    a = None
    if axis == "omega0":
        e = x * args.mtilde
    elif axis == "v":
        v = x
    elif axis == "a_chem":
        a = x
    try:
        p = _medium(args, a)
        orbit = DetectorOrbit(args.mtilde, e, v)
        up, down = rate_pair(p, orbit, args.tol)
    except InstabilityError:
        return [fmt(x), "error:instability"] + [""] * 6, None
    except NUMERIC_ERRORS as exc:
        return [fmt(x), f"error:{type(exc).__name__}"] + [""] * 6, None
    row = [fmt(x), fmt(up.value), fmt(down.value), str(up.m_min), str(up.m_used),
           fmt(max(up.tail_bound, down.tail_bound)), str(int(up.multi_root or down.multi_root)),
           str(int(up.near_singular or down.near_singular))]
    return row, (p, orbit, up.value)


def cmd_rate(args, argv):
    _apply_config(args, args.config_data, _ORBIT_KEYS)
    _check_orbit_args(args)
    e_fixed = _gap(args)
    spec = parse_sweep(args.sweep, "rate", bool(args.log)) if args.sweep else None
    axis = spec.axis if spec else None
    if axis != "v" and args.v is None:
        raise UsageError("rate needs --v unless sweeping v")
    if axis != "omega0" and e_fixed is None:
        raise UsageError("rate needs --etilde or --omega0-mstar unless sweeping omega0")
    xs = spec.values() if spec else [e_fixed if e_fixed is not None else 0.0]
    _validate_inputs(args, spec, e_fixed)
    if spec is None:
        axis = "etilde"
    threads = thread_count(args)
    results = ordered_map(lambda x: _rate_row(args, axis, float(x), e_fixed), xs, threads)
    rows = [r for r, _ in results]
    params = {"cmd": "rate", "r0": args.r0, "a": args.a, "mtilde": args.mtilde, "v": args.v,
              "etilde": e_fixed, "tol": args.tol, "unit_dispersion": bool(args.unit_dispersion),
              "sweep": asdict(spec) if spec else None}
    cols = ["axis_value", "rate_excite", "rate_deexcite", "m_min", "m_used", "tail_bound",
            "multi_root", "near_singular"]
    write_csv(args.out, provenance(argv, params), cols, rows)
    if all(info is None for _, info in results):
        print("error: no row could be computed", file=sys.stderr)
        return EXIT_VERIFY
    if args.verify:
        bad = 0
        for _, info in results:
            if info is None:
                continue
            p, orbit, value = info
            ok = _smeared_check(p, orbit, value)[2]
            bad += not ok
        if bad:
            print(f"verify: {bad} row(s) disagree with the smeared-delta oracle", file=sys.stderr)
            return EXIT_VERIFY
    return EXIT_OK


def _temperature_row(args, axis, x, omega0):
    v, a = args.v, None
    if axis == "v":
        v = x
    elif axis == "omega0":
        omega0 = x
    elif axis == "a_chem":
        a = x
    try:
        p = _medium(args, a)
        tp = detailed_balance_temperature(p, DetectorOrbit(args.mtilde, omega0 * args.mtilde, v), args.tol)
    except InstabilityError:
        return [fmt(x), "", "error:instability"], False
    except NUMERIC_ERRORS as exc:
        return [fmt(x), "", f"error:{type(exc).__name__}"], False
    temp = "" if tp.temperature is None else fmt(tp.temperature)
    return [fmt(x), temp, tp.status], True


def cmd_temperature(args, argv):
    _apply_config(args, args.config_data, _ORBIT_KEYS)
    _check_orbit_args(args)
    if args.etilde is not None:
        raise UsageError("temperature takes the gap as --omega0-mstar (units M*/hbar)")
    omega0 = 1.0 if args.omega0_mstar is None else float(args.omega0_mstar)
    spec = parse_sweep(args.sweep, "temperature", bool(args.log)) if args.sweep else None
    axis = spec.axis if spec else "v"
    if axis != "v" and args.v is None:
        raise UsageError("temperature needs --v unless sweeping v")
    if spec is None:
        if args.v is None:
            raise UsageError("temperature needs --v or a v sweep")
        xs = [args.v]
    else:
        xs = spec.values()
    _validate_inputs(args, spec, omega0 * args.mtilde)
    results = ordered_map(lambda x: _temperature_row(args, axis, float(x), omega0), xs, thread_count(args))
    params = {"cmd": "temperature", "r0": args.r0, "a": args.a, "mtilde": args.mtilde, "v": args.v,
              "omega0_mstar": omega0, "tol": args.tol, "unit_dispersion": bool(args.unit_dispersion),
              "sweep": asdict(spec) if spec else None}
    write_csv(args.out, provenance(argv, params), [axis, "temperature", "status"], [r for r, _ in results])
    if not any(ok for _, ok in results):
        print("error: no row could be computed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


_SETUP_KEYS = {f.name for f in fields(PhysicalSetup)}


def cmd_map_physical(args, argv):
    _apply_config(args, args.config_data, _SETUP_KEYS, ignored=set(UNIT_LABELS) | {"constants_sha256"})
    kwargs = {k: getattr(args, k) for k in _SETUP_KEYS if getattr(args, k, None) is not None}
    fh, close = _open_out(args.out)
    try:
        try:
            setup = PhysicalSetup(**kwargs)
            scales = derive_scales(setup)
        except PhysicalConstraintError as exc:
            fh.write(json.dumps(exc.to_dict()) + "\n")
            return EXIT_PHYSICAL
        out = {}
        for f in fields(PhysicalSetup):
            out[f"{f.name} [{SETUP_LABELS[f.name]}]"] = getattr(setup, f.name)
        for key, val in scales.as_dict().items():
            out[f"{key} [{UNIT_LABELS[key]}]"] = val
        out["constants_sha256"] = constants_checksum()
        fh.write(json.dumps(out, indent=2) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


@dataclass
class Comparison:
    name: str
    reference: float
    value: float
    deviation: float
    tolerance: float
    passed: bool
    expected_fail: bool = False


def _smeared_check(p, orbit, value, tol=1e-3):
    """Richardson-extrapolated smeared-delta oracle vs the mode sum."""
    sigma = min(1e-3, 0.05 / orbit.m_tilde)
    coarse, _ = auto_smearing(p, orbit, sigma)
    fine, _ = auto_smearing(p, orbit, 0.5 * sigma)
    ref = (4.0 * fine - coarse) / 3.0
    dev = abs(ref - value) / max(abs(value), 1e-300)
    return ref, dev, bool(dev <= tol or abs(ref - value) <= 1e-12)


def cmd_verify(args, argv):
    _apply_config(args, args.config_data, _ORBIT_KEYS | {"wightman", "format"})
    _check_orbit_args(args)
    e = _gap(args)
    if args.v is None or e is None:
        raise UsageError("verify needs --v and --etilde (or --omega0-mstar)")
    p = _medium(args)
    if isinstance(p, CondensateParams):
        info = analyze_roton(p)
        if not info.stable:
            print(f"unstable spectrum: f^2 < 0 near zeta = {info.zeta_c:.6g}", file=sys.stderr)
            return EXIT_VERIFY
    orbit = DetectorOrbit(args.mtilde, e, args.v)
    value = transition_rate(p, orbit, args.tol).value
    comps = []
    ref, dev, ok = _smeared_check(p, orbit, value)
    comps.append(Comparison("smeared_delta", ref, value, dev, 1e-3, ok))
    if args.wightman:
        res = wightman_rate(p, orbit)
        dev = abs(res.value - value) / max(abs(value), 1e-300)
        comps.append(Comparison("wightman", res.value, value, dev, 5e-2,
                                bool(dev <= 5e-2 or abs(res.value - value) <= res.resolution)))
    if args.mtilde >= 100.0 and isinstance(p, CondensateParams):
        lim = li_limit(p, orbit, args.tol)
        p0_only = lim.p0 / args.mtilde ** 2
        dev0 = abs(value - p0_only) / value
        if lim.delta_p > 0.0:
            full = lim.combined(args.mtilde)
            dev1 = abs(value - full) / value
            comps.append(Comparison("p0_only", p0_only, value, dev0, 5e-2, bool(dev0 <= 5e-2), expected_fail=True))
            comps.append(Comparison("p0_plus_delta_p", full, value, dev1, 5e-2, bool(dev1 <= 5e-2 and dev1 < dev0)))
        else:
            comps.append(Comparison("p0", p0_only, value, dev0, 5e-2, bool(dev0 <= 5e-2)))
    failed = [c for c in comps if not c.passed and not c.expected_fail]
    if args.format == "json":
        report = {"rate": value, "comparisons": [asdict(c) for c in comps], "passed": not failed}
        text = json.dumps(report, indent=2) + "\n"
    else:
        lines = [f"{'comparison':<16} {'reference':>24} {'deviation':>10} {'tol':>8}  result"]
        for c in comps:
            res = "PASS" if c.passed else ("XFAIL" if c.expected_fail else "FAIL")
            lines.append(f"{c.name:<16} {fmt(c.reference):>24} {c.deviation:10.2e} {c.tolerance:8.0e}  {res}")
        lines.append(f"mode-sum rate {fmt(value)}")
        text = "\n".join(lines) + "\n"
    fh, close = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    if failed:
        print("failing pair(s): " + ", ".join(f"mode_sum vs {c.name}" for c in failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(sp):
    sp.add_argument("--config", help="key=value or JSON file with defaults (docs/config.md)")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.add_argument("--threads", type=int, default=None,
                    help=f"worker threads for sweeps (default ${THREADS_ENV} or 1)")


def _medium_flags(sp):
    sp.add_argument("--r0", type=float, help="dipolar-to-contact ratio in [0, sqrt(pi/2)]")
    sp.add_argument("--a", type=float, help="chemical potential in units hbar omega_z")


def _orbit_flags(sp):
    _medium_flags(sp)
    sp.add_argument("--mtilde", type=float, help="orbit radius R M*/(hbar c0); required")
    sp.add_argument("--v", type=float, help="orbital speed in units of c0")
    sp.add_argument("--etilde", type=float, help="gap R omega0 / c0 (negative: de-excitation)")
    sp.add_argument("--omega0-mstar", dest="omega0_mstar", type=float, help="gap in units M*/hbar")
    sp.add_argument("--tol", type=float, help="relative tolerance of the mode sum (default 1e-8)")
    sp.add_argument("--unit-dispersion", action="store_true", default=None,
                    help="replace f by 1 (Lorentz-invariant reference medium)")


def build_parser():
    parser = _Parser(prog="unruh-fluid", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("dispersion", help="tabulate f^2 and f over zeta")
    _common(sp)
    _medium_flags(sp)
    sp.add_argument("--zeta", "--sweep", dest="zeta", help="start:stop:points (default 0:4:401)")
    sp.add_argument("--log", action="store_true", default=None, help="log-spaced sweep")

    sp = sub.add_parser("rate", help="excitation and de-excitation rates")
    _common(sp)
    _orbit_flags(sp)
    sp.add_argument("--sweep", help="AXIS=start:stop:points, AXIS in omega0 (M*/hbar), v, a_chem")
    sp.add_argument("--log", action="store_true", default=None, help="log-spaced sweep")
    sp.add_argument("--verify", action="store_true", default=None,
                    help="cross-check every row against the smeared-delta oracle")

    sp = sub.add_parser("temperature", help="detailed-balance temperature")
    _common(sp)
    _orbit_flags(sp)
    sp.add_argument("--sweep", help="AXIS=start:stop:points, AXIS in v, omega0, a_chem")
    sp.add_argument("--log", action="store_true", default=None, help="log-spaced sweep")

    sp = sub.add_parser("map-physical", help="laboratory parameters to dimensionless inputs (JSON)")
    _common(sp)
    for f in fields(PhysicalSetup):
        sp.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=float,
                        help=f"[{SETUP_LABELS[f.name]}]")

    sp = sub.add_parser("verify", help="mode sum against the oracles and the Lorentz-invariant limit")
    _common(sp)
    _orbit_flags(sp)
    sp.add_argument("--wightman", action="store_true", default=None, help="include the two-point-function oracle")
    sp.add_argument("--format", choices=("table", "json"), default=None)
    return parser


COMMANDS = {
    "dispersion": cmd_dispersion,
    "rate": cmd_rate,
    "temperature": cmd_temperature,
    "map-physical": cmd_map_physical,
    "verify": cmd_verify,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        args.config_data = load_config(args.config) if args.config else {}
        if getattr(args, "format", None) is None and args.command == "verify":
            args.format = "table"
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"unruh-fluid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhysicalConstraintError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return EXIT_PHYSICAL
    except DomainError as exc:
        print(f"unruh-fluid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"unruh-fluid {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
