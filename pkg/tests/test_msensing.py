from hypothesis import given, settings

from conftest import instances, single_user
from smartcrowd.model import Instance
from smartcrowd.msensing import run_msensing
from smartcrowd.smart import run_smart, screen_users, user_entry_payment


def test_msensing_fixture(fix):
    out = run_msensing(fix)
    assert out.winners == {1, 2, 3}
    assert dict(out.payments) == {1: 15, 2: 8, 3: 7}
    assert out.utility == 20


def test_msensing_no_eligible_users():
    out = run_msensing(single_user(value=2, bid=4))
    assert out.winners == frozenset()
    assert out.utility == 0


def test_msensing_single_user():
    out = run_msensing(single_user())
    assert out.winners == {1}
    assert out.payments[1] == 10
    assert out.utility == 0


@settings(max_examples=150, deadline=None)
@given(instances())
def test_msensing_pays_entry_payment_to_screened_users(inst):
    out = run_msensing(inst)
    order = screen_users(inst).order
    assert out.winners == set(order)
    for i in order:
        assert out.payments[i] == user_entry_payment(inst, i) >= inst.bid(i)


@settings(max_examples=150, deadline=None)
@given(instances())
def test_smart_never_worse_than_msensing(inst):
    assert run_smart(inst).utility >= run_msensing(inst).utility


def test_equal_utilities_when_nothing_to_replace():
    # two disjoint users, no outsiders: every user keeps its entry payment
    inst = Instance.from_lists([10, 10], [[0], [1]], [3, 4])
    assert run_smart(inst).utility == run_msensing(inst).utility == 0
