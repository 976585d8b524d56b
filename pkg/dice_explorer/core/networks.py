"""
Multi-layer perceptron built on the autodiff Tensor.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from dice_explorer.core.autodiff import ArrayLike, Tensor, as_tensor, relu
from dice_explorer.core.errors import ShapeError
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)


class Mlp:
    """
    Fully connected network: ReLU hidden layers, identity output.

    Weights and biases start uniform in +-1/sqrt(fan_in) of their layer.
    """

    def __init__(
        self,
        input_size: int,
        hidden_sizes: Sequence[int],
        output_size: int,
        rng: Optional[Rng],
        name: str = "mlp",
    ):
        self.name = name
        self.layer_sizes: List[int] = [int(input_size), *map(int, hidden_sizes), int(output_size)]
        if any(size < 1 for size in self.layer_sizes):
            raise ValueError(f"Layer widths must be positive, got {self.layer_sizes}")

        self.weights: List[Tensor] = []
        self.biases: List[Tensor] = []
        for index, (fan_in, fan_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if rng is None:
                weight = np.zeros((fan_in, fan_out))
                bias = np.zeros(fan_out)
            else:
                weight = rng.uniform(-bound, bound, (fan_in, fan_out))
                bias = rng.uniform(-bound, bound, fan_out)
            self.weights.append(Tensor(weight, requires_grad=True, name=f"{name}.w{index}"))
            self.biases.append(Tensor(bias, requires_grad=True, name=f"{name}.b{index}"))

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> List[Tensor]:
        """All trainable tensors, layer by layer (weight then bias)."""
        params: List[Tensor] = []
        for weight, bias in zip(self.weights, self.biases):
            params.extend([weight, bias])
        return params

    def __call__(self, inputs: ArrayLike, frozen: bool = False) -> Tensor:
        """
        Forward pass over a (batch, input_size) array.

        Args:
            inputs: Batch of inputs; may itself be graph-attached
            frozen: Use detached parameter copies so no gradient reaches them

        Returns:
            (batch, output_size) tensor
        """
        x = as_tensor(inputs)
        if x.values.ndim != 2 or x.shape[1] != self.input_size:
            raise ShapeError(
                f"{self.name}: expected input of shape (batch, {self.input_size}), got {x.shape}"
            )
        last = len(self.weights) - 1
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            if frozen:
                weight, bias = weight.detach(), bias.detach()
            x = x @ weight + bias
            if index < last:
                x = relu(x)
        return x

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of all parameter arrays keyed by parameter name."""
        return {param.name: param.values.copy() for param in self.parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Overwrite parameters in place.

        Raises:
            KeyError: If a parameter is missing from state
            ShapeError: If an array has the wrong shape
        """
        for param in self.parameters():
            array = np.asarray(state[param.name], dtype=np.float64)
            if array.shape != param.shape:
                raise ShapeError(
                    f"{param.name}: expected shape {param.shape}, got {array.shape}"
                )
            np.copyto(param.values, array)

    def clone(self, name: Optional[str] = None) -> "Mlp":
        """Independent copy with identical values (used for target networks)."""
        copy = Mlp(
            self.input_size,
            self.layer_sizes[1:-1],
            self.output_size,
            rng=None,
            name=name or self.name,
        )
        for source, target in zip(self.parameters(), copy.parameters()):
            np.copyto(target.values, source.values)
        return copy
