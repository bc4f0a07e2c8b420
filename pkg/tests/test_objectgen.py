from __future__ import annotations

from incq import ast as A
from incq.dump import objplan_to_json
from incq.lowering import MEMBER, field_rel, lower_query
from incq.objectgen import additions_only, deletion_kinds, unique_derivations
from incq.parser import parse_program
from incq.runtime import compile_query
from incq.scenarios import V, celeb_query, jql_query

FILTERED_F_LOC_ADD = [
    "if (user) in T_user",
    'if user__loc__2 == "NYC"',
    "if user hasfield email: user__email__3 = user.email",
    "if (user) in dom(fil_M_2.I2): for (group) in fil_M_2{user}",
    "if (group) in dom(U.I2): for (celeb) in U{group}",
    "if celeb hasfield followers: celeb__followers__1 = celeb.followers",
    "if isset(celeb__followers__1) and user in celeb__followers__1",
    "r.cadd((celeb, group, user__email__3))",
]


def test_filtered_f_loc_object_code():
    _, _, obj = compile_query(celeb_query(), "fil")
    (block,) = obj.handlers[(field_rel("loc"), "add")]
    assert [i.render() for i in block.instrs] == FILTERED_F_LOC_ADD


def test_u_projections_one_map_per_direction():
    _, _, obj = compile_query(celeb_query(), "fil")
    u = next(d for d in obj.stores.values() if d.role == "demand")
    assert sorted(u.keys) == [(), (0,), (1,)]


def test_running_example_stays_counted():
    _, _, obj = compile_query(celeb_query(), "inc")
    assert obj.counted_result
    assert not unique_derivations(lower_query(celeb_query()))


def test_jql2_counting_eliminated():
    _, _, obj = compile_query(jql_query(2), "inc")
    assert not obj.counted_result
    assert "counting eliminated for r: unique derivations" in obj.notes
    ups = [i for b in obj.blocks() for i in b.instrs if i.kind == "update" and str(i.store) == "r"]
    assert ups and all(i.guarded and i.op in ("add", "del") for i in ups)


def test_count_elim_can_be_disabled():
    _, _, obj = compile_query(jql_query(2), "inc", count_elim=False)
    assert obj.counted_result


def test_additions_only_trace():
    script = parse_program(
        'query Q(c, g) demand(c, g): { u.email : u in c.followers, u in g, u.loc == "NYC" }\n'
        "c = new obj\ng = new set\nu = new obj\nc.followers = g\ng.add(u)\n"
        'u.loc = "NYC"\nu.email = "e"\ndemand Q(c, g)\nask Q(c, g)\n'
    )
    q = script.queries[0]
    assert deletion_kinds(script.trace) == set()
    assert additions_only(lower_query(q), script.trace)
    _, _, obj = compile_query(q, "inc", trace=script.trace)
    assert not obj.counted_result
    assert obj.notes[-1] == "counting eliminated for r: additions only"


def test_deletion_kinds_are_conservative():
    trace = [
        A.NewObject("u"), A.FieldAssign(V("u"), "loc", V("u")),
        A.NewObject("u"), A.FieldAssign(V("u"), "loc", V("u")),
        A.FieldAssign(V("u"), "email", V("u")), A.FieldAssign(V("u"), "email", V("u")),
        A.FieldAssign(A.Field(V("u"), "f"), "g", V("u")),
        A.SetDel(V("u"), V("u")),
    ]
    assert deletion_kinds(trace) == {field_rel("email"), field_rel("g"), MEMBER}


def test_objplan_json_shape():
    _, _, obj = compile_query(celeb_query(), "inc")
    out = objplan_to_json(obj)
    assert out["counted_result"] is True
    trig, kind, blocks = out["handlers"][0]
    assert isinstance(trig, str) and kind in ("add", "del")
    block_id, role, instrs = blocks[0]
    assert all(len(i) == 3 and isinstance(i[2], str) for i in instrs)
