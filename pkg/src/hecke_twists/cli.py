"""Command-line front end.

Usage:
    hecke-twists coeffs --N 1000 -o tau.csv          tau(n), a(n) table plus binary cache
    hecke-twists chars --q 60                        characters mod q
    hecke-twists lvalue --q 13 --char 1 --s 0.5j     one central value, with FE residual
    hecke-twists moment --q 1009                     full moment report (JSON)
    hecke-twists moment --q-range 3:50 --format csv  one row per modulus
    hecke-twists predict --q 1009                    main term only
    hecke-twists check --q 1009                      prime-divisor condition diagnostics
    hecke-twists fit --q-range 200:400               least-squares K1, K2 (diagnostic)

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 resource budget.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .arith import (
    check_assumption,
    divisor_condition_sum,
    euler_product_P,
    factorize,
    psi,
    small_divisor_threshold,
)
from .characters import build_group
from .eigenform import (
    EigenformCoefficients,
    cache_dir,
    delta_coefficients,
    hecke_extend,
    load_delta,
    load_prime_values,
    write_tau_cache,
)
from .lvalue import TableTooShort, afe_length, fe_residual, l_value_afe
from .moments import (
    DEFAULT_BUDGET,
    K_CUTOFF,
    BudgetError,
    MomentReport,
    default_K,
    default_threads,
    diagonal_sum,
    double_sum_range,
    fit_secondary_constants,
    main_term,
    moment_report,
)

log = logging.getLogger("hecke_twists")

SCHEMA = "# schema=1"
MOMENT_COLUMNS = ("q", "direct", "double_sum", "diagonal", "off_diagonal", "small_div",
                  "large_div", "main_term", "ratio", "condition_lhs", "condition_rhs",
                  "divisor_condition_sum")
_REPORT_FOR_COLUMN = {"diagonal": "diagonal_part", "off_diagonal": "off_diagonal_part",
                      "small_div": "small_divisor_part", "large_div": "large_divisor_part"}

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    q: int | None = None
    q_range: tuple[int, int] | None = None
    k: int = 12
    coeffs: str = "builtin-delta"
    tol: float = 1e-6
    threads: int = 1
    format: str = "json"
    output: str | None = None
    K_override: float | None = None
    N: int | None = None
    char: int | None = None
    s: complex = 0j
    double_sum: bool = True
    budget: int = DEFAULT_BUDGET
    cache: str | None = None

    def validate(self) -> "RunConfig":
        if not 1e-12 <= self.tol <= 1e-3:
            raise ConfigError(f"tol must lie in [1e-12, 1e-3], got {self.tol}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format is csv or json")
        if self.k < 12 or self.k % 2:
            raise ConfigError("weight must be an even integer >= 12")
        if self.coeffs == "builtin-delta" and self.k != 12:
            raise ConfigError("the built-in form is Delta (k = 12); pass --coeffs FILE for other weights")
        if self.q is not None and self.q < 1:
            raise ConfigError("q must be positive")
        if self.q_range is not None and self.q_range[0] > self.q_range[1]:
            raise ConfigError("empty q range")
        if self.budget < 1:
            raise ConfigError("budget must be positive")
        return self


# -- parsing and configuration -------------------------------------------------

def _parse_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad q range {text!r}; expected A:B") from None


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERT = {
    "q": int, "q_range": _parse_range, "k": int, "coeffs": str, "tol": float,
    "threads": int, "format": str, "output": str, "K_override": float, "N": int,
    "char": int, "s": complex, "double_sum": _parse_bool, "budget": int, "cache": str,
}


def read_config_file(path) -> dict:
    """Line-based "key = value"; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERT:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONVERT[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file (flags take precedence)")
    common.add_argument("--k", type=int, help="weight (default 12)")
    common.add_argument("--coeffs", help="'builtin-delta' or a file of 'p a_f(p)' lines")
    common.add_argument("--tol", type=float, help="truncation tolerance (default 1e-6)")
    common.add_argument("--threads", type=int, help="worker threads (default $HTM_THREADS or 1)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("-o", "--output", help="output path (default stdout)")
    common.add_argument("--K-override", dest="K_override", type=float,
                        help="Rankin-Selberg constant for a sensitivity ratio")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="hecke-twists", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("coeffs", parents=[common], help="coefficient table",
                       argument_default=argparse.SUPPRESS)
    c.add_argument("--N", type=int)
    c.add_argument("--cache", help="binary tau cache path")

    c = sub.add_parser("chars", parents=[common], help="characters mod q",
                       argument_default=argparse.SUPPRESS)
    c.add_argument("--q", type=int)

    c = sub.add_parser("lvalue", parents=[common], help="L(f x chi, 1/2 + s)",
                       argument_default=argparse.SUPPRESS)
    c.add_argument("--q", type=int)
    c.add_argument("--char", type=int, help="character index (enumeration order)")
    c.add_argument("--s", type=complex, help="point on Re(s) = 0, e.g. 0.5j")

    for name, hlp in (("moment", "second moment report"), ("predict", "main term only"),
                      ("check", "condition diagnostics"), ("fit", "fit K1, K2 over a q range")):
        c = sub.add_parser(name, parents=[common], help=hlp, argument_default=argparse.SUPPRESS)
        c.add_argument("--q", type=int)
        c.add_argument("--q-range", dest="q_range", type=_parse_range)
        if name == "moment":
            c.add_argument("--no-double-sum", dest="double_sum", action="store_false",
                           help="skip the orthogonality route")
            c.add_argument("--budget", type=int, help="largest nm bound for the double sum")
    return p


def resolve_config(argv=None) -> tuple[RunConfig, bool]:
    ns = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if k not in ("config", "verbose")}
    merged = {"threads": default_threads()}
    if hasattr(ns, "config"):
        merged.update(read_config_file(ns.config))
    merged.update(flags)
    if merged.get("command") in ("moment", "fit") and "format" not in merged and "q_range" in merged:
        merged["format"] = "csv"
    cfg = RunConfig(**merged)
    return cfg.validate(), getattr(ns, "verbose", False)


# -- helpers ---------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits; integers stay integers."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, int)):
        return str(int(x))
    return "%.17g" % x


def _json_value(x):
    if isinstance(x, complex):
        return {"re": _json_value(x.real), "im": _json_value(x.imag)}
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {str(k): _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def dumps(obj) -> str:
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(_json_value(obj), indent=2, sort_keys=False) + "\n"


def report_to_dict(r: MomentReport) -> dict:
    return r.canonical()


def report_from_dict(d: dict) -> MomentReport:
    vals = {}
    for f in fields(MomentReport):
        if f.name == "runtime_breakdown":
            continue
        v = d[f.name]
        if v is None and f.name not in ("ratio_K_override", "K_override"):
            v = float("nan")
        vals[f.name] = v
    return MomentReport(**vals)


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(cfg.output)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _load_coeffs(cfg: RunConfig, N: int) -> EigenformCoefficients:
    if cfg.coeffs == "builtin-delta":
        return load_delta(N)
    try:
        primes = load_prime_values(cfg.coeffs)
    except OSError as exc:
        raise OSError(f"cannot read coefficient file: {exc}") from exc
    try:
        return hecke_extend(primes, N, cfg.k)
    except KeyError as exc:
        raise TableTooShort(f"coefficient file does not cover n <= {N}: {exc}") from None


def _moduli(cfg: RunConfig) -> list[int]:
    if cfg.q is not None and cfg.q_range is not None:
        raise ConfigError("give --q or --q-range, not both")
    if cfg.q is not None:
        return [cfg.q]
    if cfg.q_range is not None:
        return list(range(cfg.q_range[0], cfg.q_range[1] + 1))
    raise ConfigError("--q or --q-range is required")


def _needed_length(qs, tol: float, double: bool) -> int:
    n = K_CUTOFF
    for q in qs:
        n = max(n, afe_length(q, 0j, 12, tol)[0])
        if double:
            n = max(n, double_sum_range(q))
    return n


# -- commands ----------------------------------------------------------------------

def cmd_coeffs(cfg: RunConfig) -> int:
    if cfg.N is None or cfg.N < 1:
        raise ConfigError("--N must be a positive integer")
    N = cfg.N
    if cfg.coeffs == "builtin-delta":
        co = delta_coefficients(N, exact_limit=N)
        tau = co.exact
    else:
        co = _load_coeffs(cfg, N)
        tau = None
    rows = ((n, tau[n - 1] if tau else None, co.a[n]) for n in range(1, N + 1))
    _emit(_csv_text(("n", "tau", "a"), rows), cfg)
    if tau is not None:
        cache = Path(cfg.cache) if cfg.cache else (
            Path(cfg.output + ".tau") if cfg.output not in (None, "-") else cache_dir() / f"delta_tau_{N}.bin")
        cache.parent.mkdir(parents=True, exist_ok=True)
        write_tau_cache(cache, co)
        log.info("wrote tau cache %s", cache)
    return EXIT_OK


def cmd_chars(cfg: RunConfig) -> int:
    if cfg.q is None:
        raise ConfigError("--q is required")
    g = build_group(cfg.q)
    header = ("index", "exponents", "conductor", "primitive", "parity", "gauss_re", "gauss_im")
    rows = []
    for chi in g.characters():
        t = chi.gauss_sum
        rows.append((chi.index, " ".join(map(str, chi.exponents)), chi.conductor,
                     int(chi.is_primitive), chi.parity(), t.real, t.imag))
    if cfg.format == "csv":
        _emit(_csv_text(header, rows), cfg)
    else:
        _emit(dumps({"q": cfg.q, "orders": list(g.orders),
                     "characters": [dict(zip(header, r)) for r in rows]}), cfg)
    return EXIT_OK


def cmd_lvalue(cfg: RunConfig) -> int:
    if cfg.q is None or cfg.char is None:
        raise ConfigError("--q and --char are required")
    g = build_group(cfg.q)
    if not 0 <= cfg.char < len(g):
        raise ConfigError(f"character index {cfg.char} out of range (0..{len(g) - 1})")
    chi = g.character(cfg.char)
    if not chi.is_primitive:
        raise ConfigError(f"character {cfg.char} mod {cfg.q} is not primitive (conductor {chi.conductor})")
    if cfg.s.real != 0:
        raise ConfigError("s must lie on Re(s) = 0")
    N = max(afe_length(cfg.q, cfg.s, cfg.k, cfg.tol)[0], afe_length(cfg.q, -cfg.s, cfg.k, cfg.tol)[0])
    co = _load_coeffs(cfg, N)
    res = l_value_afe(co, chi, cfg.s, cfg.tol)
    out = {"q": cfg.q, "char": cfg.char, "s": res.s, "value": res.value,
           "truncation_N": res.truncation_N, "tail_bound": res.tail_bound,
           "eps_trunc": res.eps_trunc, "fe_residual": fe_residual(co, chi, cfg.s, cfg.tol),
           "params_used": res.params_used}
    _emit(dumps(out), cfg)
    return EXIT_OK


def cmd_moment(cfg: RunConfig) -> int:
    qs = _moduli(cfg)
    if min(qs) < 3:
        raise ConfigError("moments need q >= 3")
    if cfg.double_sum:
        worst = max(double_sum_range(q) for q in qs)
        if worst > cfg.budget:
            raise BudgetError(f"double sum needs nm <= {worst}, budget is {cfg.budget}")
    co = _load_coeffs(cfg, _needed_length(qs, cfg.tol, cfg.double_sum))
    reports = []
    for q in qs:
        r = moment_report(co, q, cfg.tol, cfg.threads, cfg.K_override, cfg.double_sum, cfg.budget)
        log.info("q=%d timings %s", q, r.runtime_breakdown)
        reports.append(r)
    if cfg.format == "csv":
        rows = [[getattr(r, _REPORT_FOR_COLUMN.get(c, c)) for c in MOMENT_COLUMNS] for r in reports]
        _emit(_csv_text(MOMENT_COLUMNS, rows), cfg)
    elif len(reports) == 1:
        _emit(dumps(report_to_dict(reports[0])), cfg)
    else:
        _emit(dumps([report_to_dict(r) for r in reports]), cfg)
    return EXIT_OK


def cmd_predict(cfg: RunConfig) -> int:
    qs = _moduli(cfg)
    if min(qs) < 3:
        raise ConfigError("moments need q >= 3")
    co = _load_coeffs(cfg, max(K_CUTOFF, max(qs)))
    K = cfg.K_override if cfg.K_override is not None else default_K(co)
    rows = []
    for q in qs:
        rows.append({"q": q, "main_term": main_term(co, q, K), "K_used": K,
                     "P_q_1": euler_product_P(q, 1, co).at_s.real, "psi": float(psi(q))})
    if cfg.format == "csv":
        header = ("q", "main_term", "K_used", "P_q_1", "psi")
        _emit(_csv_text(header, [[r[h] for h in header] for r in rows]), cfg)
    else:
        _emit(dumps(rows[0] if len(rows) == 1 else rows), cfg)
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    qs = _moduli(cfg)
    rows = []
    for q in qs:
        if q < 17:
            raise ConfigError("the condition diagnostic needs q >= 17")
        c = check_assumption(q)
        rows.append({"q": q, "x_threshold": c.x_threshold, "lhs": c.lhs, "rhs": c.rhs,
                     "holds": c.holds, "small_divisor_threshold": small_divisor_threshold(q),
                     "divisor_condition_sum": divisor_condition_sum(q),
                     "prime_factors": list(factorize(q).primes)})
    if cfg.format == "csv":
        header = ("q", "x_threshold", "lhs", "rhs", "holds", "small_divisor_threshold",
                  "divisor_condition_sum")
        _emit(_csv_text(header, [[r[h] for h in header] for r in rows]), cfg)
    else:
        _emit(dumps(rows[0] if len(rows) == 1 else rows), cfg)
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    qs = [q for q in _moduli(cfg) if q >= 3]
    if len(qs) < 3:
        raise ConfigError("fit needs at least three moduli >= 3")
    n = max(K_CUTOFF, max(int(q * 5) for q in qs))
    co = _load_coeffs(cfg, n)
    K = cfg.K_override if cfg.K_override is not None else default_K(co)
    diag = [diagonal_sum(co, q, K=K).value for q in qs]
    K1, K2 = fit_secondary_constants(qs, diag, co, K)
    _emit(dumps({"q_min": qs[0], "q_max": qs[-1], "count": len(qs), "K_used": K,
                 "K1": K1, "K2": K2, "note": "least-squares fit; not a certified value"}), cfg)
    return EXIT_OK


COMMANDS = {"coeffs": cmd_coeffs, "chars": cmd_chars, "lvalue": cmd_lvalue,
            "moment": cmd_moment, "predict": cmd_predict, "check": cmd_check, "fit": cmd_fit}


def main(argv=None) -> int:
    try:
        cfg, verbose = resolve_config(argv)
    except ConfigError as exc:
        print(f"hecke-twists: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse: --help, --version, usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"hecke-twists: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, TableTooShort, MemoryError) as exc:
        print(f"hecke-twists: resource budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"hecke-twists: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
