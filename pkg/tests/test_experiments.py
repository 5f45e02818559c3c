import math
from fractions import Fraction

import pytest

from ocspstream.core import BTWN, MAS
from ocspstream.errors import InvalidEpsilon, InvalidParameters, TooLarge
from ocspstream.experiments import (
    ExperimentConfig,
    derive_defaults,
    exp_expansion,
    exp_reduction_equivalence,
    exp_value_gap,
    run_experiment,
    scaled_T,
)


def test_defaults_examples():
    d = derive_defaults(Fraction(1, 2), 2)
    assert d.q0 == 1536
    assert d.alpha0 == Fraction(1, 4)
    assert d.delta_prime == Fraction(1, 8) == d.epsilon / 4
    assert d.gamma == Fraction(1, 768)
    assert d.eta == Fraction(1, 8)
    assert d.delta == 8 * 4 * d.gamma**2


def test_defaults_T0_formula():
    d = derive_defaults(Fraction(1, 2), 2, q=16)
    a = 4 * math.log(2) * 16**2 / (float(d.gamma) ** 2 * 0.25)
    b = 8 * (0.5 + 0.125) * 16**2 * math.log(16) / (0.125**2 * 0.25)
    assert d.T0 == math.ceil(max(a, b))


def test_defaults_errors():
    for eps in (0, 1, Fraction(3, 2), -0.1):
        with pytest.raises(InvalidEpsilon):
            derive_defaults(eps, 2)
    with pytest.raises(InvalidParameters):
        derive_defaults(Fraction(1, 2), 2, alpha=Fraction(1, 2))
    with pytest.raises(InvalidParameters):
        derive_defaults(Fraction(1, 2), 3)
    assert derive_defaults(0.5, 3, predicate=BTWN).q0 == math.ceil(192 * 9 / 0.5)


def test_scaled_T():
    assert scaled_T(8, 2, 8, 4000) == 4000
    assert scaled_T(4, 2, 8, 4000) == 667
    assert scaled_T(2, 2, 8, 4000) == 84
    with pytest.raises(InvalidParameters):
        scaled_T(1, 2, 8, 10)


def test_value_gap_small():
    cfg = ExperimentConfig("value-gap", trials=10, alpha=Fraction(1, 4), T=60, seed=1)
    result = exp_value_gap(cfg)
    assert result.passed and result.summary["bound_failures"] == 0
    assert all(r[5] for r in result.rows if r[1] == "yes" and r[2])


def test_value_gap_guard():
    with pytest.raises(TooLarge):
        exp_value_gap(ExperimentConfig("value-gap", n=11))


def test_value_gap_spec_regime():
    # MAS, q=4, n=10, alpha=1/8, T=40: m is about 2.5, so NO values sit near 1
    result = exp_value_gap(ExperimentConfig("value-gap", trials=100, seed=0))
    assert result.passed
    assert result.summary["yes_mean"] >= 0.75
    assert 0.9 <= result.summary["no_mean"] <= 1.0


def test_expansion_relations():
    cfg = ExperimentConfig("expansion", n=8, q=4, alpha=Fraction(1, 4), T=40, trials=10, gamma=Fraction(1, 2))
    result = exp_expansion(cfg)
    assert result.passed and result.summary["gap_checked"] > 0


def test_expansion_empty_instances_record_zero():
    cfg = ExperimentConfig("expansion", n=6, q=8, alpha=Fraction(1, 6), T=1, trials=5)
    result = exp_expansion(cfg)
    empty = [r for r in result.rows if r[1] == 0]
    assert empty and all(r[2] == "0" and r[3] == "0" for r in empty)


def test_reduction_equivalence_small():
    cfg = ExperimentConfig("reduction-equivalence", q=3, n=6, alpha=Fraction(1, 3), T=2, trials=2000)
    result = exp_reduction_equivalence(cfg)
    assert result.passed
    assert [r[0] for r in result.rows].count("exhaustive") == 2
    with pytest.raises(TooLarge):
        exp_reduction_equivalence(ExperimentConfig("reduction-equivalence", q=6, n=6, alpha=Fraction(1, 3), T=2))


def test_csv_header_and_determinism(tmp_path):
    cfg = ExperimentConfig("value-gap", trials=6, seed=9, alpha=Fraction(1, 4), T=30)
    _, one = run_experiment(cfg, threads=1)
    _, two = run_experiment(cfg, threads=3)
    assert one == two
    lines = one.splitlines()
    assert lines[0] == "# experiment: value-gap"
    assert lines[2] == f"# config_sha256: {cfg.digest()}"
    assert "numpy=" in lines[3] and "ocspstream=" in lines[3]
    assert lines[4] == "trial,case,m,value,shifted_value,bound_ok"
    out = tmp_path / "gap.csv"
    run_experiment(ExperimentConfig(**{**cfg.__dict__, "out": str(out)}))
    assert out.read_text() == one


def test_unknown_experiment():
    with pytest.raises(InvalidParameters):
        run_experiment(ExperimentConfig("nope"))


def test_config_digest_ignores_output_path():
    a = ExperimentConfig("value-gap", out="a.csv")
    b = ExperimentConfig("value-gap", out="b.csv")
    assert a.digest() == b.digest()
    assert ExperimentConfig("value-gap", seed=1).digest() != a.digest()
