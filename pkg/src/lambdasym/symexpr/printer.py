from __future__ import annotations

from .expr import BinOp, Const, Expr, Func, Neg, Sym

# binding strength of the printed form; atoms are 100
_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_NEG = 30


def _fmt_number(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError(f"cannot print non-finite constant {v}")
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG
    if isinstance(e, Const) and e.value < 0:
        return _NEG
    return 100


def to_string(e: Expr) -> str:
    memo: dict[int, str] = {}

    def go(node: Expr) -> str:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            s = _fmt_number(node.value)
        elif isinstance(node, Sym):
            s = node.name
        elif isinstance(node, Func):
            s = f"{node.name}({go(node.arg)})"
        elif isinstance(node, Neg):
            inner = go(node.arg)
            # a literal under Neg must keep its parentheses, or it re-parses as a constant
            if _prec(node.arg) <= _NEG or isinstance(node.arg, Const):
                inner = f"({inner})"
            s = f"-{inner}"
        elif isinstance(node, BinOp):
            p = _PREC[node.op]
            ls, rs = go(node.left), go(node.right)
            lp, rp = _prec(node.left), _prec(node.right)
            if node.op == "^":
                # right-assoc: left needs parens at equal precedence, and a
                # negative/negated base always needs them
                if lp <= p:
                    ls = f"({ls})"
                if rp < p:
                    rs = f"({rs})"
            else:
                if lp < p:
                    ls = f"({ls})"
                if rp <= p:
                    rs = f"({rs})"
            s = f"{ls} {node.op} {rs}" if p == 10 else f"{ls}{node.op}{rs}"
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[key] = s
        return s

    return go(e)
