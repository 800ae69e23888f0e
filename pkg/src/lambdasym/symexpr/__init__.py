"""Symbolic expression kernel."""

from .calculus import (
    OrderTooHighError,
    adjugate,
    det,
    diff,
    dot,
    formal_total_derivative,
    gradient,
    identity,
    inverse,
    jacobian,
    madd,
    matmul,
    matvec,
    mmap,
    msub,
    onshell_substitute,
    trace,
    transpose,
    zeros,
)
from .evaluate import Compiled, UnboundSymbolError, evaluate, evaluate_many
from .expr import (
    ONE,
    ZERO,
    BinOp,
    Const,
    Expr,
    Func,
    Neg,
    Sym,
    add,
    as_expr,
    div,
    free_symbols,
    free_symbols_all,
    func,
    mul,
    neg,
    power,
    sub,
    substitute,
    sum_exprs,
)
from .parser import ExprSyntaxError, UnknownSymbolError, parse
from .printer import to_string
from .sampling import DomainExhaustedError, EquivResult, SamplingConfig, equiv, equiv_many
from .table import MissingDerivativeError, SymbolTable, SymbolTableError

__all__ = [name for name in dir() if not name.startswith("_")]
