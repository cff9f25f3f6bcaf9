import pytest

from amlmon import predicates
from amlmon.model import ClientProfile

from conftest import make_profile


def ev(src: str, profile: ClientProfile, limits=None) -> bool:
    node = predicates.parse(src)
    predicates.validate(node)
    return predicates.evaluate(node, profile, limits or {})


def test_basic_comparison_and_functions():
    p = make_profile(movl=(1776, 830, 8))
    assert ev("annual(movl) == 1776", p)
    assert ev("max(movl) > 800", p)
    assert ev("window(movl) <= 0.05 * max(movl)", p)
    assert not ev("window(movl) >= 10", p)


def test_and_or_precedence_and_parens():
    p = make_profile(movl=(10, 5, 2), serv=(4, 2, 1))
    assert ev("window(movl) >= 2 and window(serv) >= 1", p)
    assert ev("window(movl) >= 99 or window(serv) >= 1", p)
    assert ev("(window(movl) >= 99 or window(serv) >= 1) and annual(movl) == 10", p)
    assert not ev("window(movl) >= 99 and window(serv) >= 1 or annual(movl) == 999", p)


def test_arithmetic():
    p = make_profile(band4=(0, 0, 10), band5=(0, 0, 2), movl=(0, 0, 12))
    assert ev("window(band4) + window(band5) >= 0.9 * window(movl)", p)
    assert ev("window(band4) - window(band5) == 8", p)
    assert ev("window(band4) / window(movl) > 0.8", p)


def test_age_function():
    p = make_profile(age=21)
    assert ev("age() >= 21", p)


def test_limit_lookup():
    p = make_profile(movl=(100, 20, 35))
    limits = {"movl": 20.0}
    assert ev("window(movl) > 1.5 * limit(movl)", p, limits)
    assert not ev("window(movl) >= 2 * limit(movl)", p, limits)


def test_limit_must_be_monotone_form():
    for bad in (
        "window(movl) <= limit(movl)",          # wrong operator
        "limit(movl) >= window(movl)",          # limit on the left
        "window(movl) >= limit(movl) + 5",      # not a constant multiple
        "window(movl) == limit(movl)",
    ):
        node = predicates.parse(bad)
        with pytest.raises(predicates.PredicateError):
            predicates.validate(node)
    good = predicates.parse("window(movl) >= 0.5 * limit(movl)")
    predicates.validate(good)


def test_undeclared_attribute_rejected():
    node = predicates.parse("window(balance) >= 1")
    with pytest.raises(predicates.PredicateError):
        predicates.validate(node)


def test_parse_errors():
    for bad in ("window(movl) >=", "1 + 2", "window movl > 1", "window(movl) > 1 extra"):
        with pytest.raises(predicates.PredicateError):
            predicates.parse(bad)
