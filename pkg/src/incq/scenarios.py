"""Deterministic scenario generators at desk scale.

Every generator is a pure function of its parameters and seed and returns the
script as syntax trees, so large setups skip parsing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from .parser import format_program, parse_program

CELEB_QUERY = ('query Q(celeb, group) demand(celeb, group): '
               '{ user.email : user in celeb.followers, user in group, user.loc == "NYC" }')

JQL_QUERIES = {
    1: "query J1(attends, comp101): { a : a in attends, a.course == comp101 }",
    2: ("query J2(attends, students, comp101): { (a, s) : a in attends, s in students, "
        "a.course == comp101, a.student == s }"),
    3: ("query J3(attends, students, courses, comp101): { (a, s, c) : a in attends, s in students, "
        "c in courses, a.course == comp101, a.student == s, a.course == c }"),
}

LOCATIONS = ("NYC",) + tuple(f"L{i}" for i in range(1, 20))


def _query(text: str) -> A.QuerySpec:
    return parse_program(text).queries[0]


def celeb_query() -> A.QuerySpec:
    return _query(CELEB_QUERY)


def jql_query(which: int) -> A.QuerySpec:
    return _query(JQL_QUERIES[which])


def V(name: str) -> A.Var:
    return A.Var(name)


def C(value) -> A.Const:
    return A.Const(value)


@dataclass
class Scenario:
    """A script whose first ``setup_len`` ops build the data before measurement."""

    name: str
    params: dict
    script: A.Script
    setup_len: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def setup(self) -> list[A.TraceOp]:
        return self.script.trace[: self.setup_len]

    @property
    def workload(self) -> list[A.TraceOp]:
        return self.script.trace[self.setup_len:]

    def text(self) -> str:
        return format_program(self.script)


def _mix(rng: random.Random, n_ops: int, ask_ratio: float):
    """Yield True (ask) or False (update), ``ask_ratio`` asks per update on average."""
    p = ask_ratio / (1 + ask_ratio)
    for _ in range(n_ops):
        yield rng.random() < p


# ------------------------------------------------------------------
# Running example
# ------------------------------------------------------------------


@dataclass
class CelebParams:
    n_users: int = 500
    follows_ratio: float = 0.02  # fraction of all users each user follows
    celeb_ratio: float = 0.01  # fraction of all users following each special user
    group_ratio: float = 0.01  # groups per user
    group_membership: float = 0.05  # fraction of the groups each user is in
    groups_per_user: Optional[float] = None  # absolute memberships per user, overrides the fraction
    n_locations: int = 2
    demand_size: int = 3
    n_ops: int = 400
    ask_ratio: float = 1.0
    updates_in_tag_set: bool = False
    seed: int = 1


def _celeb_data(p: CelebParams, rng: random.Random):
    """Users, followers sets, groups. Returns (ops, users, groups, followers, members)."""
    n = p.n_users
    ops: list[A.TraceOp] = []
    users = [f"u{i}" for i in range(n)]
    n_groups = max(1, round(p.group_ratio * n))
    groups = [f"g{i}" for i in range(n_groups)]
    followers: dict[str, list[str]] = {u: [] for u in users}
    members: dict[str, list[str]] = {g: [] for g in groups}
    locs = LOCATIONS[: p.n_locations]
    for i, u in enumerate(users):
        ops.append(A.NewObject(u))
        ops.append(A.NewSet(f"fs{i}"))
        ops.append(A.FieldAssign(V(u), "followers", V(f"fs{i}")))
        ops.append(A.FieldAssign(V(u), "loc", C(rng.choice(locs))))
        ops.append(A.FieldAssign(V(u), "email", C(f"{u}@x")))
    for g in groups:
        ops.append(A.NewSet(g))
    k = max(1, round(p.follows_ratio * n))
    special = users[: max(p.demand_size, 3)]
    kc = max(1, round(p.celeb_ratio * n))
    for i, u in enumerate(users):
        for c in rng.sample(users, k):
            followers[c].append(u)
    for c in special:
        have = set(followers[c])
        for u in rng.sample(users, kc):
            if u not in have:
                followers[c].append(u)
                have.add(u)
    for i, u in enumerate(users):
        for f in dict.fromkeys(followers[u]):
            ops.append(A.SetAdd(V(f"fs{i}"), V(f)))
    per = p.groups_per_user if p.groups_per_user is not None else p.group_membership * n_groups
    for u in users:
        m = int(per) + (1 if rng.random() < per - int(per) else 0)
        for g in rng.sample(groups, min(m, n_groups)):
            members[g].append(u)
            ops.append(A.SetAdd(V(g), V(u)))
    return ops, users, groups, followers, members, locs


def gen_running_example(p: Optional[CelebParams] = None, **kw) -> Scenario:
    """Users with followers and groups, demand pairs (special user, g0), then asks and location updates."""
    p = p or CelebParams(**kw)
    rng = random.Random(p.seed)
    ops, users, groups, followers, members, locs = _celeb_data(p, rng)
    pairs = [(users[i], groups[0]) for i in range(p.demand_size)]
    for c, g in pairs:
        ops.append(A.DemandAdd("Q", (V(c), V(g))))
    setup_len = len(ops)
    pool = users
    if p.updates_in_tag_set:
        demanded = {c for c, _ in pairs}
        in_group = set(members[groups[0]])
        pool = [u for u in users if u in in_group and any(u in followers[c] for c in demanded)] or users
    for is_ask in _mix(rng, p.n_ops, p.ask_ratio):
        if is_ask and pairs:
            c, g = rng.choice(pairs)
            ops.append(A.Ask("Q", (V(c), V(g))))
        else:
            ops.append(A.FieldAssign(V(rng.choice(pool)), "loc", C(rng.choice(locs))))
    script = A.Script([celeb_query()], ops)
    return Scenario("celeb", vars(p).copy(), script, setup_len,
                    {"group0_size": len(members[groups[0]]), "n_groups": len(groups)})


def gen_demand_size_sweep(n_users: int = 1000, fractions=(0.001, 0.01, 0.1, 0.5, 1.0),
                          seed: int = 1, **kw) -> list[Scenario]:
    """Fixed data, |U| swept over fractions of the users; updates hit only tag-set users."""
    out = []
    for fr in fractions:
        size = max(1, round(fr * n_users))
        p = CelebParams(n_users=n_users, demand_size=size, updates_in_tag_set=True, seed=seed, **kw)
        sc = gen_running_example(p)
        sc.name = "demand-sweep"
        sc.params["fraction"] = fr
        out.append(sc)
    return out


def gen_osq(n_users: int = 500, seed: int = 1, **kw) -> Scenario:
    """Every user demanded with group g0; groups of constant size."""
    base = dict(n_users=n_users, groups_per_user=5, group_ratio=0.05, demand_size=n_users,
                celeb_ratio=0.0, n_ops=200, seed=seed)
    base.update(kw)
    sc = gen_running_example(CelebParams(**base))
    sc.name = "osq"
    return sc


# ------------------------------------------------------------------
# JQL benchmarks
# ------------------------------------------------------------------


def gen_jql(which: int, n: int = 200, n_ops: int = 1000, ask_ratio: float = 1.0, seed: int = 1) -> Scenario:
    """Three collections of ``n`` objects each; asks or a removal plus an addition on attends."""
    rng = random.Random(seed)
    q = jql_query(which)
    ops: list[A.TraceOp] = [A.NewSet("attends"), A.NewSet("students"), A.NewSet("courses")]
    courses = [f"c{i}" for i in range(n)]
    students = [f"s{i}" for i in range(n)]
    for c in courses:
        ops += [A.NewObject(c), A.SetAdd(V("courses"), V(c))]
    for s in students:
        ops += [A.NewObject(s), A.SetAdd(V("students"), V(s))]
    pool = [f"a{i}" for i in range(2 * n)]
    for a in pool:
        ops += [A.NewObject(a),
                A.FieldAssign(V(a), "course", V(rng.choice(courses))),
                A.FieldAssign(V(a), "student", V(rng.choice(students)))]
    inside = pool[:n]
    outside = pool[n:]
    for a in inside:
        ops.append(A.SetAdd(V("attends"), V(a)))
    args = {1: ("attends", "c0"), 2: ("attends", "students", "c0"),
            3: ("attends", "students", "courses", "c0")}[which]
    ops.append(A.DemandAdd(q.name, tuple(V(x) for x in args)))
    setup_len = len(ops)
    for is_ask in _mix(rng, n_ops, ask_ratio):
        if is_ask:
            ops.append(A.Ask(q.name, tuple(V(x) for x in args)))
        else:
            i, j = rng.randrange(len(inside)), rng.randrange(len(outside))
            a, b = inside[i], outside[j]
            ops += [A.SetDel(V("attends"), V(a)), A.SetAdd(V("attends"), V(b))]
            inside[i], outside[j] = b, a
    return Scenario(f"jql{which}", {"which": which, "n": n, "n_ops": n_ops, "ask_ratio": ask_ratio,
                                    "seed": seed}, A.Script([q], ops), setup_len)


# ------------------------------------------------------------------
# Random differential traces
# ------------------------------------------------------------------


def gen_random_trace(seed: int, n_ops: int = 2000, n_objs: int = 6, n_sets: int = 5,
                     emails: tuple = ("a", "b", "c"), weird: bool = True) -> A.Script:
    """Small-universe trace over every update kind of the running example.

    Sets are shared freely, so a followers set is often also a demanded
    group; emails collide so results need counts; occasional ints and
    sets in odd places exercise the skip semantics.
    """
    rng = random.Random(seed)
    ops: list[A.TraceOp] = []
    objs: list[str] = []
    sets: list[str] = []
    demanded: list[tuple[str, str]] = []

    def new_obj():
        name = f"o{len(objs)}"
        objs.append(name)
        ops.append(A.NewObject(name))

    def new_set():
        name = f"s{len(sets)}"
        sets.append(name)
        ops.append(A.NewSet(name))

    for _ in range(n_objs):
        new_obj()
    for _ in range(n_sets):
        new_set()

    def value(kind: str) -> A.Expr:
        r = rng.random()
        if weird and r < 0.05:
            return C(rng.randrange(3))
        if weird and r < 0.08:
            return V(rng.choice(sets))
        if kind == "loc":
            return C(rng.choice(("NYC", "NYC", "LA")))
        return C(rng.choice(emails))

    while len(ops) < n_ops:
        r = rng.random()
        if r < 0.02:
            new_obj()
        elif r < 0.03:
            new_set()
        elif r < 0.10:
            v = V(rng.choice(sets)) if rng.random() > 0.05 else C(1)
            ops.append(A.FieldAssign(V(rng.choice(objs)), "followers", v))
        elif r < 0.22:
            ops.append(A.FieldAssign(V(rng.choice(objs)), "loc", value("loc")))
        elif r < 0.32:
            ops.append(A.FieldAssign(V(rng.choice(objs)), "email", value("email")))
        elif r < 0.52:
            elem = V(rng.choice(objs)) if rng.random() > 0.05 else C(rng.randrange(3))
            ops.append(A.SetAdd(V(rng.choice(sets)), elem))
        elif r < 0.66:
            elem = V(rng.choice(objs)) if rng.random() > 0.05 else C(rng.randrange(3))
            ops.append(A.SetDel(V(rng.choice(sets)), elem))
        elif r < 0.74:
            pair = (rng.choice(objs), rng.choice(sets))
            ops.append(A.DemandAdd("Q", (V(pair[0]), V(pair[1]))))
            if pair not in demanded:
                demanded.append(pair)
        elif r < 0.79:
            if demanded:
                pair = demanded.pop(rng.randrange(len(demanded)))
                ops.append(A.DemandDel("Q", (V(pair[0]), V(pair[1]))))
        else:
            if demanded:
                c, g = rng.choice(demanded)
                ops.append(A.Ask("Q", (V(c), V(g))))
    return A.Script([celeb_query()], ops)


def aliasing_script() -> A.Script:
    """A followers set that is also the demanded group, with colliding emails."""
    ops = [
        A.NewObject("c"), A.NewSet("fs"), A.FieldAssign(V("c"), "followers", V("fs")),
        A.NewObject("u1"), A.NewObject("u2"),
        A.FieldAssign(V("u1"), "loc", C("NYC")), A.FieldAssign(V("u2"), "loc", C("NYC")),
        A.FieldAssign(V("u1"), "email", C("e")), A.FieldAssign(V("u2"), "email", C("e")),
        A.DemandAdd("Q", (V("c"), V("fs"))),
        A.SetAdd(V("fs"), V("u1")), A.Ask("Q", (V("c"), V("fs"))),
        A.SetAdd(V("fs"), V("u2")), A.Ask("Q", (V("c"), V("fs"))),
        A.SetDel(V("fs"), V("u1")), A.Ask("Q", (V("c"), V("fs"))),
        A.SetDel(V("fs"), V("u2")), A.Ask("Q", (V("c"), V("fs"))),
    ]
    return A.Script([celeb_query()], ops)


def gen_jql_random_trace(seed: int, n_ops: int = 300) -> A.Script:
    """Random membership changes and field reassignments for the JQL query 2 shape."""
    rng = random.Random(seed)
    q = jql_query(2)
    ops: list[A.TraceOp] = [A.NewSet("attends"), A.NewSet("students"), A.NewObject("comp")]
    courses = ["comp"] + [f"c{i}" for i in range(2)]
    ops += [A.NewObject(c) for c in courses[1:]]
    students = [f"s{i}" for i in range(4)]
    ops += [A.NewObject(s) for s in students]
    atts = [f"a{i}" for i in range(8)]
    ops += [A.NewObject(a) for a in atts]
    ops.append(A.DemandAdd("J2", (V("attends"), V("students"), V("comp"))))
    while len(ops) < n_ops:
        r = rng.random()
        a = rng.choice(atts)
        if r < 0.2:
            ops.append(A.FieldAssign(V(a), "course", V(rng.choice(courses))))
        elif r < 0.4:
            ops.append(A.FieldAssign(V(a), "student", V(rng.choice(students))))
        elif r < 0.6:
            ops.append(A.SetAdd(V("attends"), V(a)))
        elif r < 0.7:
            ops.append(A.SetDel(V("attends"), V(a)))
        elif r < 0.8:
            ops.append(A.SetAdd(V("students"), V(rng.choice(students))))
        elif r < 0.85:
            ops.append(A.SetDel(V("students"), V(rng.choice(students))))
        else:
            ops.append(A.Ask("J2", (V("attends"), V("students"), V("comp"))))
    return A.Script([q], ops)
