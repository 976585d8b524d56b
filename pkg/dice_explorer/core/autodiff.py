"""
Reverse-mode automatic differentiation over dense float64 arrays.

A Tensor wraps a numpy array. Operations on graph-attached tensors record
their parents and a local backward rule on a fresh, dynamic tape; calling
backward() on a scalar walks the tape in reverse topological order and
returns gradients for the leaf tensors created with requires_grad=True.

Conventions:
    - abs has subgradient 0 at 0.
    - power(x, m) has gradient 0 at x == 0.
    - minimum/maximum route the gradient to the first input on ties.
    - Every op checks its output for NaN/Inf and raises NonFiniteError.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from dice_explorer.core.errors import GraphError, NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]
BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """Dense float64 array with an optional node in a differentiation graph."""

    # numpy defers mixed arithmetic (ndarray * Tensor) to Tensor's operators
    __array_priority__ = 100.0

    def __init__(
        self,
        values: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardRule] = None
        self.op = "leaf"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.values.reshape(()))

    def detach(self) -> "Tensor":
        """Graph-free copy of the values."""
        return Tensor(self.values)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op}{label})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return absolute(self)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return total(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, shape: Tuple[int, ...]) -> "Tensor":
        return reshape(self, shape)


def as_tensor(value: ArrayLike) -> Tensor:
    """Wrap a constant; tensors pass through untouched."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _check_finite(values: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"Non-finite output from {op}")


def _record(
    values: np.ndarray, parents: Sequence[Tensor], rule: BackwardRule, op: str
) -> Tensor:
    """Build the op output, attaching it to the graph when a parent is attached."""
    _check_finite(values, op)
    out = Tensor(values)
    out.op = op
    if any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = rule
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the input's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as error:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from error


# Elementwise binary ops


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return _record(
        a.values + b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return _record(
        a.values - b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return _record(
        a.values * b.values,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        ),
        "mul",
    )


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        values = a.values / b.values
    return _record(
        values,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * a.values / b.values**2, b.shape),
        ),
        "div",
    )


def minimum(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "min")
    first = a.values <= b.values
    return _record(
        np.where(first, a.values, b.values),
        (a, b),
        lambda g: (
            _unbroadcast(np.where(first, g, 0.0), a.shape),
            _unbroadcast(np.where(first, 0.0, g), b.shape),
        ),
        "min",
    )


def maximum(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "max")
    first = a.values >= b.values
    return _record(
        np.where(first, a.values, b.values),
        (a, b),
        lambda g: (
            _unbroadcast(np.where(first, g, 0.0), a.shape),
            _unbroadcast(np.where(first, 0.0, g), b.shape),
        ),
        "max",
    )


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product of two 2-D tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return _record(
        a.values @ b.values,
        (a, b),
        lambda g: (g @ b.values.T, a.values.T @ g),
        "matmul",
    )


# Elementwise unary ops


def neg(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    return _record(-x.values, (x,), lambda g: (-g,), "neg")


def absolute(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    return _record(np.abs(x.values), (x,), lambda g: (g * np.sign(x.values),), "abs")


def power(x: ArrayLike, exponent: float) -> Tensor:
    """x ** exponent for a scalar exponent; gradient 0 where x == 0."""
    x = as_tensor(x)
    exponent = float(exponent)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.power(x.values, exponent)

    def rule(g):
        zero = x.values == 0.0
        safe = np.where(zero, 1.0, x.values)
        local = exponent * np.power(safe, exponent - 1.0)
        return (g * np.where(zero, 0.0, local),)

    return _record(values, (x,), rule, "pow")


def exp(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    with np.errstate(over="ignore"):
        values = np.exp(x.values)
    return _record(values, (x,), lambda g: (g * values,), "exp")


def log(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.log(x.values)
    return _record(values, (x,), lambda g: (g / x.values,), "log")


def tanh(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    values = np.tanh(x.values)
    return _record(values, (x,), lambda g: (g * (1.0 - values**2),), "tanh")


def relu(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    active = x.values > 0.0
    return _record(np.where(active, x.values, 0.0), (x,), lambda g: (g * active,), "relu")


def softplus(x: ArrayLike) -> Tensor:
    """log(1 + e^x), evaluated without overflow."""
    x = as_tensor(x)
    values = np.logaddexp(0.0, x.values)
    sigmoid = np.exp(x.values - values)
    return _record(values, (x,), lambda g: (g * sigmoid,), "softplus")


def clip(x: ArrayLike, low: float, high: float) -> Tensor:
    """Clamp to [low, high]; gradient passes only where no clamping happened."""
    x = as_tensor(x)
    inside = (x.values >= low) & (x.values <= high)
    return _record(np.clip(x.values, low, high), (x,), lambda g: (g * inside,), "clip")


# Reductions and shape ops


def total(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    values = x.values.sum(axis=axis, keepdims=keepdims)

    def rule(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _record(values, (x,), rule, "sum")


def mean(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if x.size == 0:
        raise ShapeError("mean of an empty tensor")
    count = x.size if axis is None else x.shape[axis]
    return total(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def broadcast_to(x: ArrayLike, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        values = np.broadcast_to(x.values, shape).copy()
    except ValueError as error:
        raise ShapeError(f"broadcast: cannot broadcast {x.shape} to {shape}") from error
    return _record(values, (x,), lambda g: (_unbroadcast(g, x.shape),), "broadcast")


def reshape(x: ArrayLike, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        values = x.values.reshape(shape)
    except ValueError as error:
        raise ShapeError(f"reshape: cannot reshape {x.shape} to {shape}") from error
    return _record(values, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def getitem(x: ArrayLike, index) -> Tensor:
    x = as_tensor(x)
    values = x.values[index]

    def rule(g):
        grad = np.zeros_like(x.values)
        np.add.at(grad, index, g)
        return (grad,)

    return _record(np.array(values), (x,), rule, "getitem")


def concat(tensors: Sequence[ArrayLike], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        values = np.concatenate([p.values for p in parts], axis=axis)
    except ValueError as error:
        shapes = [p.shape for p in parts]
        raise ShapeError(f"concat: incompatible shapes {shapes}") from error
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def rule(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _record(values, parts, rule, "concat")


OPS: Dict[str, Callable[..., Tensor]] = {
    "matmul": matmul,
    "add": add,
    "mul": mul,
    "sub": sub,
    "div": div,
    "neg": neg,
    "abs": absolute,
    "pow": power,
    "exp": exp,
    "log": log,
    "tanh": tanh,
    "relu": relu,
    "softplus": softplus,
    "mean": mean,
    "sum": total,
    "min": minimum,
    "max": maximum,
    "broadcast": broadcast_to,
    "clip": clip,
}


def forward_op(kind: str, *inputs: ArrayLike, **options) -> Tensor:
    """
    Apply a named operation.

    Args:
        kind: Key of OPS (e.g. "matmul", "pow", "min")
        *inputs: Tensors or constants
        **options: Op-specific keywords (axis, shape, low/high)

    Returns:
        Output tensor, graph-attached when any input is

    Raises:
        ValueError: Unknown op kind
        ShapeError: Incompatible input shapes
        NonFiniteError: Output contains NaN/Inf
    """
    if kind not in OPS:
        raise ValueError(f"Unknown op: {kind}. Available: {', '.join(sorted(OPS))}")
    return OPS[kind](*inputs, **options)


def _topological_order(loss: Tensor) -> List[Tensor]:
    """Nodes reachable from loss, parents before children (iterative DFS)."""
    order: List[Tensor] = []
    state: Dict[int, int] = {}  # 1 = on stack, 2 = done
    stack: List[Tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        key = id(node)
        if expanded:
            state[key] = 2
            order.append(node)
            continue
        if state.get(key) == 2:
            continue
        if state.get(key) == 1:
            raise GraphError(f"Cycle detected at {node!r}")
        state[key] = 1
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad:
                if state.get(id(parent)) == 1:
                    raise GraphError(f"Cycle detected at {parent!r}")
                if state.get(id(parent)) != 2:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """
    Differentiate a scalar loss.

    Args:
        loss: Single-element tensor produced by graph-attached ops

    Returns:
        Map from each graph-attached leaf tensor to its gradient array.
        Leaves the loss does not depend on are absent.

    Raises:
        GraphError: If the loss is not scalar or not attached to a graph
    """
    if loss.size != 1:
        raise GraphError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise GraphError("Loss is not attached to a graph")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    leaves: Dict[Tensor, np.ndarray] = {}
    for node in reversed(_topological_order(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            leaves[node] = grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if not parent.requires_grad or parent_grad is None:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad
    return leaves


@dataclass
class GradCheckResult:
    """Worst relative error over checked coordinates, plus how many were skipped."""

    max_error: float
    checked: int
    skipped: int

    @property
    def skipped_fraction(self) -> float:
        total = self.checked + self.skipped
        return self.skipped / total if total else 0.0

    def passed(self, tolerance: float, max_skipped_fraction: float = 0.05) -> bool:
        return self.max_error < tolerance and self.skipped_fraction <= max_skipped_fraction


def grad_check(
    function: Callable[[], Tensor],
    params: Iterable[Tensor],
    fd_step: float = 1e-5,
    kink_tolerance: float = 1e-4,
) -> GradCheckResult:
    """
    Compare autodiff gradients against central finite differences.

    The one-sided slopes of a smooth function differ by f'' * h, so their
    gap halves with the step; next to an abs or ReLU kink it does not. A
    coordinate whose gap is above kink_tolerance is re-evaluated at h / 2 and
    skipped only when the gap fails to halve; otherwise the h / 2 central
    difference is compared.

    Args:
        function: Rebuilds the scalar loss from the current param values
        params: Leaf tensors to perturb (values are restored afterwards)
        fd_step: Perturbation size, in (1e-7, 1e-3)
        kink_tolerance: Relative one-sided disagreement that triggers the h / 2 re-check

    Returns:
        GradCheckResult; max_error is max |autodiff - central| / max(1, |central|)
        over checked coordinates, and inf when every coordinate was skipped

    Raises:
        ValueError: If fd_step is outside (1e-7, 1e-3)
    """
    if not 1e-7 < fd_step < 1e-3:
        raise ValueError(f"fd_step must be in (1e-7, 1e-3), got {fd_step}")
    params = list(params)
    loss = function()
    grads = backward(loss)
    base = loss.item()

    def evaluate_at(flat: np.ndarray, index: int, step: float) -> Tuple[float, float]:
        original = flat[index]
        flat[index] = original + step
        upper = function().item()
        flat[index] = original - step
        lower = function().item()
        flat[index] = original
        return upper, lower

    worst = 0.0
    checked = skipped = 0
    for param in params:
        analytic = grads.get(param, np.zeros_like(param.values)).reshape(-1)
        flat = param.values.reshape(-1)
        for index in range(flat.size):
            upper, lower = evaluate_at(flat, index, fd_step)
            central = (upper - lower) / (2.0 * fd_step)
            scale = max(1.0, abs(central))
            gap = (upper - 2.0 * base + lower) / fd_step
            if abs(gap) > kink_tolerance * scale:
                half = fd_step / 2.0
                upper, lower = evaluate_at(flat, index, half)
                half_gap = (upper - 2.0 * base + lower) / half
                if abs(gap - 2.0 * half_gap) > kink_tolerance * scale:
                    skipped += 1
                    continue
                central = (upper - lower) / (2.0 * half)
                scale = max(1.0, abs(central))
            checked += 1
            worst = max(worst, abs(analytic[index] - central) / scale)

    result = GradCheckResult(worst if checked else math.inf, checked, skipped)
    if skipped:
        level = logging.WARNING if result.skipped_fraction > 0.05 else logging.DEBUG
        logger.log(level, f"grad_check skipped {skipped} of {checked + skipped} coordinates near kinks")
    return result
