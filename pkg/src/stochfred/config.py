"""Problem definition files.

A config is UTF-8 text with ``[section]`` headers and ``key = value`` lines;
``#`` starts a comment.  Every section and key is listed in :data:`SCHEMA`;
anything else is rejected.  Example::

    [problem]
    domain = -1, 1          # or: domain = unbounded, 8
    lambda = 0.9
    panels = 8
    rule = gauss-legendre-8

    [kernel]
    type = tensor           # tensor | coeff | grid
    g = monomial(2)
    h = monomial(4)

    [noise]
    omega = s^2*monomial(2)

    [sweep]
    mode = grid             # grid | random | list
    interval = 0, 1
    points = 11

    [solver]
    method = closed_form
    tol = 1e-10

    [bounds]
    anchors = 0; monomial(2)

:func:`serialize` writes the canonical form: every key, fixed order,
canonical expression text.  ``serialize(parse(text)) == text`` holds for
text already in canonical form, which is how the shipped configs are stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Dict, List, Optional, Tuple

from .errors import ConfigParseError, InvalidDomainError, UnknownExampleError
from .expressions import Expr, parse_expr
from .function_space import DEFAULT_PANELS, DEFAULT_RULE, parse_rule

KERNEL_TYPES = ("tensor", "coeff", "grid")
SWEEP_MODES = ("grid", "random", "list")
METHODS = {
    "closed_form": ("tensor",),
    "neumann": ("tensor", "grid"),
    "family": ("tensor", "grid"),
    "coefficient": ("coeff",),
    "coefficient_iterative": ("coeff",),
    "rank_one": ("coeff",),
}

SCHEMA = {
    "problem": ("domain", "lambda", "panels", "rule"),
    "kernel": ("type", "g", "h", "expr", "a", "N", "tail"),
    "noise": ("omega",),
    "sweep": ("mode", "interval", "points", "seed", "values"),
    "solver": ("method", "tol", "max_iter", "residual_tol", "cut", "force"),
    "bounds": ("anchors", "alpha"),
}
REQUIRED_SECTIONS = ("problem", "kernel", "noise", "sweep", "solver")


@dataclass(frozen=True)
class KernelSpec:
    type: str
    g: Optional[Expr] = None
    h: Optional[Expr] = None
    expr: Optional[Expr] = None
    a: Optional[Expr] = None
    N: int = 64
    tail: float = 0.0


@dataclass(frozen=True)
class SweepSpec:
    mode: str = "grid"
    interval: Tuple[float, float] = (0.0, 1.0)
    points: int = 11
    seed: int = 0
    values: Tuple[float, ...] = ()


@dataclass(frozen=True)
class SolverSpec:
    method: str
    tol: float = 1e-10
    max_iter: int = 10_000
    residual_tol: float = 1e-8
    cut: Optional[float] = None
    force: bool = False


@dataclass(frozen=True)
class ProblemConfig:
    domain: Tuple[float, float]
    lam: float
    kernel: KernelSpec
    omega: Expr
    sweep: SweepSpec
    solver: SolverSpec
    unbounded: bool = False
    panels: int = DEFAULT_PANELS
    rule: str = DEFAULT_RULE
    anchors: Tuple[Expr, ...] = ()
    alpha: Optional[float] = None

    def with_overrides(self, force: Optional[bool] = None, seed: Optional[int] = None):
        cfg = self
        if force is not None:
            cfg = replace(cfg, solver=replace(cfg.solver, force=force))
        if seed is not None:
            cfg = replace(cfg, sweep=replace(cfg.sweep, seed=seed))
        return cfg


@dataclass
class _Entry:
    value: str
    line: int
    col: int
    key: str = ""


def _read_sections(text: str) -> Dict[str, Dict[str, _Entry]]:
    sections: Dict[str, Dict[str, _Entry]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigParseError("unterminated section header", lineno, col)
            name = stripped[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigParseError(f"unknown section [{name}]", lineno, col)
            if name in sections:
                raise ConfigParseError(f"duplicate section [{name}]", lineno, col)
            sections[name] = {}
            current = name
            continue
        if "=" not in body:
            raise ConfigParseError("expected 'key = value'", lineno, col)
        if current is None:
            raise ConfigParseError("key outside of any section", lineno, col)
        key, value = body.split("=", 1)
        key = key.strip()
        if key not in SCHEMA[current]:
            raise ConfigParseError(f"unknown key {key!r} in [{current}]", lineno, col)
        if key in sections[current]:
            raise ConfigParseError(f"duplicate key {key!r}", lineno, col)
        vcol = body.index("=") + 2 + (len(value) - len(value.lstrip()))
        if not value.strip():
            raise ConfigParseError(f"empty value for {key!r}", lineno, vcol)
        sections[current][key] = _Entry(value.strip(), lineno, vcol, key)
    if not sections:
        raise ConfigParseError("empty config", 1, 1)
    for name in REQUIRED_SECTIONS:
        if name not in sections:
            raise ConfigParseError(f"missing section [{name}]", len(text.splitlines()) or 1, 1)
    return sections


def _float(e: _Entry) -> float:
    try:
        return float(e.value)
    except ValueError:
        raise ConfigParseError(f"{e.key}: expected a number, got {e.value!r}", e.line, e.col) from None


def _int(e: _Entry) -> int:
    try:
        return int(e.value)
    except ValueError:
        raise ConfigParseError(f"{e.key}: expected an integer, got {e.value!r}", e.line, e.col) from None


def _pair(e: _Entry) -> Tuple[float, float]:
    parts = [p.strip() for p in e.value.split(",")]
    if len(parts) != 2:
        raise ConfigParseError(f"{e.key}: expected two comma-separated numbers", e.line, e.col)
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigParseError(f"{e.key}: expected numbers, got {e.value!r}", e.line, e.col) from None


def _expr(e: _Entry) -> Expr:
    return parse_expr(e.value, e.line, e.col - 1)


def _check_vars(expr: Expr, allowed: Tuple[str, ...], what: str, line: int, col: int):
    for name in ("u", "v", "x", "s", "n", "m"):
        if name not in allowed and expr.uses(name):
            raise ConfigParseError(f"{what} may not use {name!r}; allowed: {', '.join(allowed)}",
                                   line, col)


def _bool(e: _Entry) -> bool:
    v = e.value.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigParseError(f"{e.key}: expected true or false, got {e.value!r}", e.line, e.col)


def parse_config(text: str) -> ProblemConfig:
    """Parse and validate a config; errors carry line and column."""
    sec = _read_sections(text)
    prob = sec["problem"]
    if "lambda" not in prob:
        raise ConfigParseError("[problem] needs 'lambda'", 1, 1)
    lam = _float(prob["lambda"])

    unbounded = False
    domain = (-1.0, 1.0)
    if "domain" in prob:
        e = prob["domain"]
        parts = [p.strip() for p in e.value.split(",")]
        if parts[0] == "unbounded":
            if len(parts) != 2:
                raise InvalidDomainError("use 'domain = unbounded, L'", e.line, e.col)
            L = _float(_Entry(parts[1], e.line, e.col))
            if not L > 0:
                raise InvalidDomainError("truncation length L must be positive", e.line, e.col)
            unbounded, domain = True, (-L, L)
        else:
            domain = _pair(e)
            if not domain[0] < domain[1]:
                raise InvalidDomainError(f"domain: need a < b, got {domain}", e.line, e.col)
    panels = _int(prob["panels"]) if "panels" in prob else DEFAULT_PANELS
    if panels < 1:
        raise ConfigParseError("panels must be >= 1", prob["panels"].line, prob["panels"].col)
    rule = prob["rule"].value if "rule" in prob else DEFAULT_RULE
    if "rule" in prob:
        try:
            parse_rule(rule)
        except ValueError as exc:
            raise ConfigParseError(str(exc), prob["rule"].line, prob["rule"].col) from None

    ker = sec["kernel"]
    if "type" not in ker:
        raise ConfigParseError("[kernel] needs 'type'", 1, 1)
    ktype = ker["type"].value
    if ktype not in KERNEL_TYPES:
        raise ConfigParseError(f"kernel type must be one of {KERNEL_TYPES}", ker["type"].line,
                               ker["type"].col)
    kspec = KernelSpec(
        type=ktype,
        g=_expr(ker["g"]) if "g" in ker else None,
        h=_expr(ker["h"]) if "h" in ker else None,
        expr=_expr(ker["expr"]) if "expr" in ker else None,
        a=_expr(ker["a"]) if "a" in ker else None,
        N=_int(ker["N"]) if "N" in ker else 64,
        tail=_float(ker["tail"]) if "tail" in ker else 0.0,
    )
    anchor_line = ker["type"].line
    if ktype == "tensor" and (kspec.g is None or kspec.h is None):
        raise ConfigParseError("tensor kernel needs 'g' and 'h'", anchor_line, 1)
    if ktype == "grid" and kspec.expr is None:
        raise ConfigParseError("grid kernel needs 'expr'", anchor_line, 1)
    if ktype == "coeff" and kspec.expr is None and (kspec.g is None or kspec.h is None):
        raise ConfigParseError("coeff kernel needs 'g' and 'h' or 'expr'", anchor_line, 1)
    if kspec.N < 1 or kspec.tail < 0:
        raise ConfigParseError("need N >= 1 and tail >= 0", anchor_line, 1)
    if ktype == "coeff":
        factor_vars, expr_vars, data_vars = ("n",), ("m", "n"), ("n", "s")
    else:
        factor_vars, expr_vars, data_vars = ("u", "v", "x"), ("u", "v", "x"), ("u", "v", "x", "s")
    for key, allowed in (("g", factor_vars), ("h", factor_vars), ("a", ("n",)),
                         ("expr", expr_vars)):
        if key in ker:
            _check_vars(getattr(kspec, key), allowed, f"kernel {key}", ker[key].line,
                        ker[key].col)

    if "omega" not in sec["noise"]:
        raise ConfigParseError("[noise] needs 'omega'", 1, 1)
    omega = _expr(sec["noise"]["omega"])
    _check_vars(omega, data_vars, "omega", sec["noise"]["omega"].line, sec["noise"]["omega"].col)

    sw = sec["sweep"]
    mode = sw["mode"].value if "mode" in sw else "grid"
    if mode not in SWEEP_MODES:
        raise ConfigParseError(f"sweep mode must be one of {SWEEP_MODES}", sw["mode"].line,
                               sw["mode"].col)
    values: Tuple[float, ...] = ()
    if "values" in sw:
        e = sw["values"]
        try:
            values = tuple(float(v) for v in e.value.split(","))
        except ValueError:
            raise ConfigParseError("values must be comma-separated numbers", e.line, e.col) from None
    where = (sw["mode"].line, sw["mode"].col) if "mode" in sw else (1, 1)
    if mode == "list" and not values:
        raise ConfigParseError("list sweep needs 'values'", *where)
    sweep = SweepSpec(
        mode=mode,
        interval=_pair(sw["interval"]) if "interval" in sw else (0.0, 1.0),
        points=_int(sw["points"]) if "points" in sw else 11,
        seed=_int(sw["seed"]) if "seed" in sw else 0,
        values=values,
    )
    if sweep.points < 1 or not sweep.interval[0] <= sweep.interval[1]:
        raise ConfigParseError("sweep needs points >= 1 and an ordered interval", *where)
    if not 0 <= sweep.seed < 2 ** 64:
        raise ConfigParseError("seed must be an unsigned 64-bit integer", sw["seed"].line,
                               sw["seed"].col)

    so = sec["solver"]
    if "method" not in so:
        raise ConfigParseError("[solver] needs 'method'", 1, 1)
    method = so["method"].value
    if method not in METHODS:
        raise ConfigParseError(f"unknown solver method {method!r}", so["method"].line,
                               so["method"].col)
    if ktype not in METHODS[method]:
        raise ConfigParseError(f"method {method!r} does not accept {ktype} kernels",
                               so["method"].line, so["method"].col)
    solver = SolverSpec(
        method=method,
        tol=_float(so["tol"]) if "tol" in so else 1e-10,
        max_iter=_int(so["max_iter"]) if "max_iter" in so else 10_000,
        residual_tol=_float(so["residual_tol"]) if "residual_tol" in so else 1e-8,
        cut=_float(so["cut"]) if "cut" in so else None,
        force=_bool(so["force"]) if "force" in so else False,
    )
    if method == "family" and solver.cut is None:
        raise ConfigParseError("family method needs 'cut'", so["method"].line, 1)

    anchors: Tuple[Expr, ...] = ()
    alpha = None
    if "bounds" in sec:
        bd = sec["bounds"]
        if "anchors" in bd:
            e = bd["anchors"]
            out, offset = [], 0
            for piece in e.value.split(";"):
                lead = len(piece) - len(piece.lstrip())
                col = e.col - 1 + offset + lead
                out.append(parse_expr(piece.strip(), e.line, col))
                _check_vars(out[-1], data_vars, "anchor", e.line, col + 1)
                offset += len(piece) + 1
            anchors = tuple(out)
        if "alpha" in bd and bd["alpha"].value != "midpoint":
            alpha = _float(bd["alpha"])

    return ProblemConfig(domain=domain, lam=lam, kernel=kspec, omega=omega, sweep=sweep,
                         solver=solver, unbounded=unbounded, panels=panels, rule=rule,
                         anchors=anchors, alpha=alpha)


def _num(x: float) -> str:
    return repr(float(x))


def serialize(cfg: ProblemConfig) -> str:
    """Canonical text of a config."""
    lines = ["[problem]"]
    if cfg.unbounded:
        lines.append(f"domain = unbounded, {_num(cfg.domain[1])}")
    else:
        lines.append(f"domain = {_num(cfg.domain[0])}, {_num(cfg.domain[1])}")
    lines += [f"lambda = {_num(cfg.lam)}", f"panels = {cfg.panels}", f"rule = {cfg.rule}", ""]

    k = cfg.kernel
    lines += ["[kernel]", f"type = {k.type}"]
    for name in ("g", "h", "expr", "a"):
        val = getattr(k, name)
        if val is not None:
            lines.append(f"{name} = {val.source}")
    if k.type == "coeff":
        lines += [f"N = {k.N}", f"tail = {_num(k.tail)}"]
    lines += ["", "[noise]", f"omega = {cfg.omega.source}", ""]

    sw = cfg.sweep
    lines += ["[sweep]", f"mode = {sw.mode}"]
    if sw.mode == "list":
        lines.append("values = " + ", ".join(_num(v) for v in sw.values))
    else:
        lines += [f"interval = {_num(sw.interval[0])}, {_num(sw.interval[1])}",
                  f"points = {sw.points}"]
    if sw.mode == "random":
        lines.append(f"seed = {sw.seed}")
    lines.append("")

    so = cfg.solver
    lines += ["[solver]", f"method = {so.method}", f"tol = {_num(so.tol)}",
              f"max_iter = {so.max_iter}", f"residual_tol = {_num(so.residual_tol)}"]
    if so.cut is not None:
        lines.append(f"cut = {_num(so.cut)}")
    lines.append(f"force = {'true' if so.force else 'false'}")

    if cfg.anchors or cfg.alpha is not None:
        lines += ["", "[bounds]"]
        if cfg.anchors:
            lines.append("anchors = " + "; ".join(a.source for a in cfg.anchors))
        lines.append("alpha = " + ("midpoint" if cfg.alpha is None else _num(cfg.alpha)))
    return "\n".join(lines) + "\n"


SHIPPED = ("ex4.4", "ex4.5", "ex4.6", "ex4.11", "ex4.4-family", "ex4.4-random", "fails-a1")


def shipped_config_text(name: str) -> str:
    if name not in SHIPPED:
        raise UnknownExampleError(f"no shipped config {name!r}; available: {', '.join(SHIPPED)}")
    return resources.files("stochfred.configs").joinpath(f"{name}.cfg").read_text("utf-8")


def load_config(path: str) -> ProblemConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
