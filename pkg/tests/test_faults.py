import itertools

import pytest

from modfault import (
    EnumerationCapExceeded, FaultConfig, RANDOMIZING, ZEROING,
    count_vectors, enumerate_sites, enumerate_vectors, inject, parse,
)
from modfault.faults import Fault, FaultSite, fresh_name_base
from modfault.terms import Verify, walk, subterm_at


def _permanent_vars(sites):
    return {s.variable for s in sites if s.scope == "permanent"}


def test_unprotected_permanent_sites(corpus_programs):
    sites = enumerate_sites(corpus_programs["unprotected"], FaultConfig())
    names = _permanent_vars(sites)
    assert {"Sp", "Sq", "S", "M", "e"} <= names
    # protected definitions contribute no permanent site
    assert not ({"dp", "dq", "iq", "p", "q"} & names)


def test_transient_sites_cover_every_unprotected_node(corpus_programs):
    prog = corpus_programs["unprotected"]
    sites = enumerate_sites(prog, FaultConfig())
    transient = [s for s in sites if s.scope == "transient"]
    expected = 0
    for st in prog.statements:
        for e in (getattr(st, "rhs", None), getattr(st, "value", None)):
            if e is not None and not e.protected:
                expected += sum(1 for _ in walk(e))
    assert len(transient) == expected
    # and each paths back to a real unprotected node
    for s in transient:
        st = prog.statements[s.statement]
        expr = getattr(st, "rhs", None) or getattr(st, "value", None)
        node = subterm_at(expr, s.path[1:])
        assert not node.protected


def test_no_sites_under_protection():
    p = parse("noprop x ; return {x} ; _ != @")
    sites = enumerate_sites(p, FaultConfig())
    assert all(s.scope != "transient" or s.statement != 1 for s in sites)


def test_modulus_recomputation_sites(corpus_programs):
    prog = corpus_programs["vigilant-original"]
    n_stmt = next(i for i, st in enumerate(prog.statements)
                  if getattr(st, "target", None) == "N")
    sites = enumerate_sites(prog, FaultConfig())
    paths = {s.path for s in sites if s.scope == "transient" and s.statement == n_stmt}
    assert (0, 0) in paths and (0, 1) in paths  # the p and the q read


def test_check_sites_respect_protect_conditions(corpus_programs):
    prog = corpus_programs["vigilant-fixed"]
    open_sites = enumerate_sites(prog, FaultConfig())
    closed_sites = enumerate_sites(prog, FaultConfig(protect_conditions=True))
    assert sum(1 for s in open_sites if s.scope == "check") == 7
    assert sum(1 for s in closed_sites if s.scope == "check") == 0
    open_cond_transients = [
        s for s in open_sites if s.scope == "transient"
        and isinstance(prog.statements[s.statement], Verify)]
    closed_cond_transients = [
        s for s in closed_sites if s.scope == "transient"
        and isinstance(prog.statements[s.statement], Verify)]
    assert open_cond_transients and not closed_cond_transients


def test_vector_counting_formula():
    assert count_vectors(3, FaultConfig(max_faults=1, kinds=(ZEROING,))) == 3
    assert count_vectors(3, FaultConfig(max_faults=2)) == 3 * 2 + 3 * 4
    sites = [FaultSite("permanent", i, variable=f"v{i}") for i in range(3)]
    vectors = list(enumerate_vectors(sites, FaultConfig(max_faults=2)))
    assert len(vectors) == 18
    assert all(len({f.site for f in v}) == len(v) for v in vectors)


def test_enumeration_is_deterministic(corpus_programs):
    prog = corpus_programs["vigilant-fixed"]
    cfg = FaultConfig(max_faults=1)
    a = enumerate_sites(prog, cfg)
    b = enumerate_sites(prog, cfg)
    assert a == b
    va = list(enumerate_vectors(a, cfg))
    vb = list(enumerate_vectors(b, cfg))
    assert va == vb


def test_enumeration_cap():
    sites = [FaultSite("permanent", i, variable=f"v{i}") for i in range(30)]
    cfg = FaultConfig(max_faults=3, max_vectors=100)
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_vectors(sites, cfg))


def test_inject_is_non_destructive(corpus_programs):
    prog = corpus_programs["unprotected"]
    before = prog
    sites = enumerate_sites(prog, FaultConfig())
    for vector in itertools.islice(
            enumerate_vectors(sites, FaultConfig(max_faults=1)), 20):
        inject(prog, vector)
    assert prog == before


def test_permanent_randomizing_rewrites_definition(corpus_programs):
    prog = corpus_programs["unprotected"]
    sp_stmt = next(i for i, st in enumerate(prog.statements)
                   if getattr(st, "target", None) == "Sp")
    vec = (Fault(FaultSite("permanent", sp_stmt, variable="Sp"),
                 RANDOMIZING, "f1"),)
    faulted = inject(prog, vec)
    from modfault.terms import Assign, Var
    assign = next(st for st in faulted.statements
                  if isinstance(st, Assign) and st.target == "Sp")
    assert assign.rhs == Var("f1")
    assert "f1" in faulted.declared_names()


def test_permanent_on_declaration_becomes_assignment(corpus_programs):
    prog = corpus_programs["unprotected"]
    vec = (Fault(FaultSite("permanent", 0, variable="M"), RANDOMIZING, "f1"),)
    faulted = inject(prog, vec)
    from modfault.terms import Assign, DeclareNoProp, Var
    assert any(isinstance(st, Assign) and st.target == "M"
               and st.rhs == Var("f1") for st in faulted.statements)
    decls = [n for st in faulted.statements if isinstance(st, DeclareNoProp)
             for n in st.names]
    assert decls.count("M") == 0 and "f1" in decls


def test_transient_zero_replaces_single_occurrence(corpus_programs):
    prog = corpus_programs["vigilant-original"]
    n_stmt = next(i for i, st in enumerate(prog.statements)
                  if getattr(st, "target", None) == "N")
    vec = (Fault(FaultSite("transient", n_stmt, path=(0, 0)), ZEROING),)
    faulted = inject(prog, vec)
    from modfault.terms import Prod, Var, Zero
    assert faulted.statements[n_stmt].rhs == Prod((Zero(), Var("q")))
    # every other statement untouched
    for i, (a, b) in enumerate(zip(prog.statements, faulted.statements)):
        if i != n_stmt:
            assert a == b


def test_check_skip_marks_verification(corpus_programs):
    prog = corpus_programs["vigilant-fixed"]
    site = next(s for s in enumerate_sites(prog, FaultConfig())
                if s.scope == "check")
    zero = inject(prog, (Fault(site, ZEROING),))
    rand = inject(prog, (Fault(site, RANDOMIZING, "f1"),))
    # the fresh-variable declaration may shift statement indices, so locate
    # the marked verification by its check order
    assert [v.skip for v in zero.verifications()] == \
        ["pass"] + [None] * 6
    assert [v.skip for v in rand.verifications()] == \
        ["fire"] + [None] * 6


def test_fresh_base_avoids_collisions():
    p = parse("noprop f1 ; return f1 ; _ != @")
    assert fresh_name_base(p) != "f"
