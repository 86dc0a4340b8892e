"""Pretty-printer; emits source that re-parses to a structurally equal tree."""

from __future__ import annotations

from .terms import (
    And, Assign, Cond, DeclareNoProp, DeclarePrime, Eq, EqMod, Expr, Mod,
    Neq, NeqMod, One, Opp, Or, Pow, Prod, Program, Return, Sum, Var, Verify,
    Zero,
)

# Binding strength of each node as produced by the parser; a child is
# parenthesised when it binds no tighter than its context requires.
_LEVEL_MOD = 0
_LEVEL_ADD = 1
_LEVEL_MUL = 2
_LEVEL_POW = 3
_LEVEL_ATOM = 4


def _level(e: Expr) -> int:
    if isinstance(e, Mod):
        return _LEVEL_MOD
    if isinstance(e, Sum):
        return _LEVEL_ADD
    if isinstance(e, Prod):
        return _LEVEL_MUL
    if isinstance(e, Pow):
        return _LEVEL_POW
    return _LEVEL_ATOM  # Zero, One, Var, Opp (unary minus binds tightest)


def _wrap(e: Expr, text: str, min_level: int) -> str:
    if _level(e) < min_level and not e.protected:
        return f"({text})"
    return text


def pretty_expr(e: Expr) -> str:
    text = _render(e)
    if e.protected:
        return "{" + text + "}"
    return text


def _render(e: Expr) -> str:
    if isinstance(e, Zero):
        return "0"
    if isinstance(e, One):
        return "1"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Opp):
        inner = _child(e.arg, _LEVEL_ATOM)
        if inner.startswith("-"):
            inner = f"({inner})"  # avoid '--', which opens a comment
        return "-" + inner
    if isinstance(e, Pow):
        # right associative; the base must bind tighter than ^
        return _child(e.base, _LEVEL_ATOM) + "^" + _child(e.exponent, _LEVEL_POW)
    if isinstance(e, Prod):
        return " * ".join(_child(c, _LEVEL_POW) for c in e.operands)
    if isinstance(e, Sum):
        parts = [_child(e.operands[0], _LEVEL_MUL)]
        for c in e.operands[1:]:
            if isinstance(c, Opp) and not c.protected:
                parts.append("- " + _child(c.arg, _LEVEL_MUL))
            else:
                parts.append("+ " + _child(c, _LEVEL_MUL))
        return " ".join(parts)
    if isinstance(e, Mod):
        return _child(e.body, _LEVEL_ADD) + " mod " + _child(e.modulus, _LEVEL_ADD)
    raise TypeError(f"not an expression: {e!r}")


def _child(e: Expr, min_level: int) -> str:
    text = pretty_expr(e)
    if e.protected:
        return text
    if _level(e) < min_level:
        return f"({text})"
    return text


def pretty_cond(c: Cond) -> str:
    text = _render_cond(c)
    if c.protected:
        return "{" + text + "}"
    return text


def _render_cond(c: Cond) -> str:
    if isinstance(c, Eq):
        return f"{pretty_expr(c.lhs)} = {pretty_expr(c.rhs)}"
    if isinstance(c, Neq):
        return f"{pretty_expr(c.lhs)} != {pretty_expr(c.rhs)}"
    if isinstance(c, EqMod):
        return f"{pretty_expr(c.lhs)} =[{pretty_expr(c.modulus)}] {pretty_expr(c.rhs)}"
    if isinstance(c, NeqMod):
        return f"{pretty_expr(c.lhs)} !=[{pretty_expr(c.modulus)}] {pretty_expr(c.rhs)}"
    if isinstance(c, And):
        return f"{_cond_operand(c.lhs)} /\\ {_cond_operand(c.rhs)}"
    if isinstance(c, Or):
        return f"{_cond_operand(c.lhs)} \\/ {_cond_operand(c.rhs)}"
    raise TypeError(f"not a condition: {c!r}")


def _cond_operand(c: Cond) -> str:
    text = pretty_cond(c)
    if isinstance(c, (And, Or)) and not c.protected:
        return f"({text})"
    return text


def _decl_names(names, flags) -> str:
    return ", ".join("{" + n + "}" if f else n for n, f in zip(names, flags))


def pretty(item) -> str:
    """Render a Program, Expr or Cond back to parseable source text."""
    if isinstance(item, Expr):
        return pretty_expr(item)
    if isinstance(item, Cond):
        return pretty_cond(item)
    if not isinstance(item, Program):
        raise TypeError(f"cannot pretty-print {item!r}")
    lines = []
    for st in item.statements:
        if isinstance(st, DeclareNoProp):
            lines.append(f"noprop {_decl_names(st.names, st.protected_flags)} ;")
        elif isinstance(st, DeclarePrime):
            lines.append(f"prime {_decl_names(st.names, st.protected_flags)} ;")
        elif isinstance(st, Assign):
            lines.append(f"{st.target} := {pretty_expr(st.rhs)} ;")
        elif isinstance(st, Verify):
            lines.append(f"if {pretty_cond(st.condition)} "
                         f"abort with {pretty_expr(st.abort_value)} ;")
        elif isinstance(st, Return):
            lines.append(f"return {pretty_expr(st.value)} ;")
    lines.append("")
    lines.append(pretty_cond(item.attack_condition))
    lines.append("")
    return "\n".join(lines)
