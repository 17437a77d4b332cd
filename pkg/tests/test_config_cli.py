import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochfred.cli import main
from stochfred.config import SHIPPED, parse_config, serialize, shipped_config_text
from stochfred.errors import (
    ConditionViolatedError,
    ConfigParseError,
    InvalidDomainError,
    UnknownExampleError,
    UnknownFunctionError,
)
from stochfred.examples import EXAMPLES, reproduce_example
from stochfred.expressions import parse_expr
from stochfred.runner import CSV_HEADER, run_problem

MINIMAL = """\
[problem]
domain = -1, 1
lambda = 0.9
[kernel]
type = tensor
g = monomial(2)
h = monomial(4)
[noise]
omega = s^2*monomial(2)
[sweep]
mode = grid
interval = 0, 1
points = 3
[solver]
method = closed_form
"""


def write(tmp_path, text, name="p.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_ex44():
    cfg = parse_config(shipped_config_text("ex4.4"))
    assert cfg.domain == (-1.0, 1.0) and cfg.lam == 0.9
    assert cfg.kernel.type == "tensor" and cfg.solver.method == "closed_form"
    assert cfg.sweep.points == 11 and len(cfg.anchors) == 4 and cfg.alpha is None
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(cfg.omega(x=x, s=0.5), 0.25 * x ** 2)


def test_defaults_fill_in():
    cfg = parse_config(MINIMAL)
    assert cfg.solver.tol == 1e-10 and cfg.anchors == ()
    assert parse_config(serialize(cfg)) == cfg


@pytest.mark.parametrize("text, exc, fragment", [
    ("", ConfigParseError, "empty"),
    ("   \n# only a comment\n", ConfigParseError, "empty"),
    (MINIMAL.replace("monomial(4)", "tan(v)"), UnknownFunctionError, "tan"),
    (MINIMAL.replace("points = 3", "points = 3\ncolour = red"), ConfigParseError, "colour"),
    (MINIMAL.replace("-1, 1", "1, -1"), InvalidDomainError, "domain"),
    (MINIMAL.replace("[noise]\nomega = s^2*monomial(2)\n", ""), ConfigParseError, "noise"),
    (MINIMAL + "[extra]\n", ConfigParseError, "extra"),
    (MINIMAL.replace("closed_form", "bogus"), ConfigParseError, "bogus"),
    (MINIMAL.replace("lambda = 0.9", "lambda = zero"), ConfigParseError, "lambda"),
    (MINIMAL.replace("lambda = 0.9", "lambda = 0.9\nrule = simpson"), ConfigParseError, "simpson"),
    (MINIMAL.replace("points = 3", "points = 3\nseed = -1"), ConfigParseError, "seed"),
    (MINIMAL.replace("points = 3", "points = 0"), ConfigParseError, "points"),
    (MINIMAL.replace("monomial(4)", "geometric(0.5)"), ConfigParseError, "'n'"),
    (MINIMAL.replace("h = monomial(4)", "h = s*v"), ConfigParseError, "'s'"),
])
def test_parse_errors(text, exc, fragment):
    with pytest.raises(exc) as info:
        parse_config(text)
    assert fragment in str(info.value)


def test_error_position():
    with pytest.raises(UnknownFunctionError) as info:
        parse_config(MINIMAL.replace("monomial(4)", "tan(v)"))
    assert info.value.line == 7 and info.value.column == 5


def test_unbounded_domain():
    cfg = parse_config(shipped_config_text("ex4.6"))
    assert cfg.unbounded and cfg.domain == (-8.0, 8.0)


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_round_trip(name):
    text = shipped_config_text(name)
    cfg = parse_config(text)
    assert serialize(cfg) == text
    assert parse_config(serialize(cfg)) == cfg


def test_unknown_shipped():
    with pytest.raises(UnknownExampleError):
        shipped_config_text("nope")


_atoms = st.one_of(
    st.sampled_from(["u", "v", "s", "pi", "monomial(2)", "cauchy_sqrt", "sin(v)",
                     "exp_quad(0.5)", "indicator(-0.5, 0.5)"]),
    st.floats(0.01, 100, allow_nan=False).map(repr),
    st.integers(0, 50).map(str),
)
_exprs = st.recursive(
    _atoms,
    lambda c: st.one_of(
        st.tuples(c, st.sampled_from(["+", "-", "*", "/", "^"]), c).map(
            lambda t: f"({t[0]}){t[1]}({t[2]})"),
        c.map(lambda e: f"-({e})"),
    ),
    max_leaves=8,
)


@given(_exprs)
def test_expression_round_trip(text):
    e = parse_expr(text)
    again = parse_expr(e.source)
    assert again.tree == e.tree and again.source == e.source
    u = np.linspace(-0.9, 0.9, 7)
    with np.errstate(all="ignore"):
        a, b = e(x=u, s=0.3), again(x=u, s=0.3)
    np.testing.assert_array_equal(np.isnan(a), np.isnan(b))


def test_run_ex44():
    rep = run_problem(parse_config(shipped_config_text("ex4.4")))
    assert len(rep.rows) == 11 and rep.all_pass
    for r in rep.rows:
        assert r.residual < 1e-8 and r.bound_passed == r.bound_total == 4


def test_run_ex411_matches_formula():
    rep = run_problem(parse_config(shipped_config_text("ex4.11")))
    assert [r.s for r in rep.rows] == [0.25, 0.5, 1.0]
    m = np.arange(1, 51)
    for r in rep.rows:
        exact = (5 / 44 + 0.5 ** m) * r.s ** 2 / 2.0 ** m
        np.testing.assert_allclose(r.solution_norm, np.linalg.norm(exact), atol=1e-13)
        assert r.residual < 1e-12


def test_fails_a1_raises_without_rows():
    cfg = parse_config(shipped_config_text("fails-a1"))
    with pytest.raises(ConditionViolatedError) as info:
        run_problem(cfg)
    assert info.value.diagnostic is not None and not info.value.diagnostic.passes


def test_forced_run_skips_bounds():
    cfg = parse_config(shipped_config_text("fails-a1")).with_overrides(force=True)
    rep = run_problem(cfg)
    assert rep.rows and all(r.bound_total == 0 for r in rep.rows)


def test_cli_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, shipped_config_text("ex4.4"), "ok.cfg")
    bad = write(tmp_path, shipped_config_text("fails-a1"), "bad.cfg")
    garbled = write(tmp_path, MINIMAL.replace("monomial(4)", "tan(v)"), "g.cfg")
    assert main(["solve", ok]) == 0
    assert main(["check", ok]) == 0
    assert main(["solve", bad]) == 1
    assert main(["check", bad]) == 1
    assert main(["solve", bad, "--force"]) == 1
    assert main(["solve", garbled]) == 2
    assert main(["solve", str(tmp_path / "missing.cfg")]) == 2
    assert main(["reproduce", "ex9.9"]) == 2
    err = capsys.readouterr().err
    assert "tan" in err and "line 7" in err


def test_cli_bad_seed():
    with pytest.raises(SystemExit) as info:
        main(["solve", "x.cfg", "--seed", "-3"])
    assert info.value.code == 2


def test_cli_csv_and_determinism(tmp_path):
    cfg = write(tmp_path, shipped_config_text("ex4.4-random"))
    outs = []
    for i, seed in enumerate([None, None, 7, 7]):
        out = tmp_path / f"o{i}.csv"
        args = ["solve", cfg, "--out", str(out)] + (["--seed", str(seed)] if seed else [])
        assert main(args) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and outs[2] == outs[3] and outs[0] != outs[2]
    lines = outs[0].decode().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 26
    s = [float(l.split(",")[0]) for l in lines[1:]]
    assert s == sorted(s)


@pytest.mark.parametrize("name", list(EXAMPLES))
def test_reproduce(name, capsys):
    assert reproduce_example(name).passed
    assert main(["reproduce", name]) == 0
    assert name in capsys.readouterr().out
