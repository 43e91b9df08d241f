"""Network structure and feedforward for residual quantum neural nets.

An architecture is a chain of layer widths ``[m_0, m_1, ..., m_{L+1}]``
(qubits per layer) plus one residual flag per hidden layer. Each layer ``l``
owns ``m_l`` perceptron unitaries, each acting on all ``m_{l-1}`` qubits of
the previous layer plus one qubit of its own layer.

A layer maps the previous layer's state by tensoring on fresh ancillas in
``|0...0>``, applying its perceptrons in ascending order, and tracing out the
previous layer's qubits. A flagged hidden layer then adds the layer's input
back on top of its output, zero-padded on the (bottom) extra qubits — so the
carried operator's trace doubles at every flagged layer and the network output
has trace ``2**t`` after ``t`` flagged layers. The output layer is never
flagged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .qlinalg import (
    DimensionError,
    OperatorState,
    embed_operator,
    ground_state_projector,
    haar_random_unitary,
    ptrace_qubits,
    tensor_product,
)

__all__ = [
    "ArchitectureError",
    "Architecture",
    "LayerUnitaries",
    "ForwardRecord",
    "arch_from_string",
    "arch_to_string",
    "embed_network",
    "forward",
    "forward_from",
    "init_unitaries",
    "layer_forward",
    "load_checkpoint",
    "residual_add",
    "save_checkpoint",
]

#: Unitarity defect tolerance for stored perceptrons.
UNITARY_TOL = 1e-9
#: Input density matrices must have unit trace within this tolerance.
INPUT_TRACE_TOL = 1e-8


class ArchitectureError(ValueError):
    """Invalid layer widths, residual flags, or unsupported layer family."""


@dataclass(frozen=True)
class Architecture:
    """Layer widths plus residual flags (one per hidden layer)."""

    layer_widths: tuple[int, ...]
    residual_flags: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.layer_widths)
        flags = tuple(bool(f) for f in self.residual_flags)
        if len(widths) < 2:
            raise ArchitectureError("need at least input and output layers")
        if any(w < 1 for w in widths):
            raise ArchitectureError(f"layer widths must be positive, got {widths}")
        if len(flags) != len(widths) - 2:
            raise ArchitectureError(
                f"{len(widths) - 2} hidden layers need {len(widths) - 2} residual "
                f"flags, got {len(flags)}"
            )
        # A residual shortcut pads its layer's input with max(0, m_l - m_{l-1})
        # zeros, so widths may not shrink on the way *into* a hidden layer.
        # The output layer is free to narrow.
        for l in range(1, len(widths) - 1):
            if widths[l] < widths[l - 1]:
                raise ArchitectureError(
                    f"hidden layer {l} narrows from {widths[l - 1]} to {widths[l]} qubits"
                )
        object.__setattr__(self, "layer_widths", widths)
        object.__setattr__(self, "residual_flags", flags)

    @property
    def num_hidden_layers(self) -> int:
        return len(self.layer_widths) - 2

    @property
    def num_unitary_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_qubits(self) -> int:
        return self.layer_widths[0]

    @property
    def output_qubits(self) -> int:
        return self.layer_widths[-1]

    @property
    def residual_count(self) -> int:
        """Number of flagged layers; the output trace is 2**residual_count."""
        return sum(self.residual_flags)

    def width_in(self, layer: int) -> int:
        """Qubits feeding unitary layer ``layer`` (0-based)."""
        return self.layer_widths[layer]

    def width_out(self, layer: int) -> int:
        """Qubits owned by unitary layer ``layer`` (0-based)."""
        return self.layer_widths[layer + 1]

    def delta_m(self, layer: int) -> int:
        """Zero-padding width of the shortcut around hidden layer ``layer``."""
        return self.width_out(layer) - self.width_in(layer)

    def is_residual(self, layer: int) -> bool:
        """Whether the shortcut around unitary layer ``layer`` is active."""
        return layer < len(self.residual_flags) and self.residual_flags[layer]


_ARCH_TOKEN = re.compile(r"^(~?)(\d+)$")


def arch_from_string(text: str) -> Architecture:
    """Parse ``"2,~3,2"`` style strings; ``~`` flags a residual hidden layer."""
    tokens = [tok.strip() for tok in text.split(",")]
    widths = []
    flags = []
    for pos, tok in enumerate(tokens):
        match = _ARCH_TOKEN.match(tok)
        if not match:
            raise ArchitectureError(f"bad architecture token {tok!r} in {text!r}")
        tilde, digits = match.groups()
        if tilde and (pos == 0 or pos == len(tokens) - 1):
            raise ArchitectureError(
                f"input/output layers cannot be residual in {text!r}"
            )
        widths.append(int(digits))
        if 0 < pos < len(tokens) - 1:
            flags.append(bool(tilde))
    return Architecture(tuple(widths), tuple(flags))


def arch_to_string(arch: Architecture) -> str:
    """Inverse of :func:`arch_from_string` (round-trips exactly)."""
    parts = [str(arch.layer_widths[0])]
    for i, width in enumerate(arch.layer_widths[1:-1]):
        parts.append(("~" if arch.residual_flags[i] else "") + str(width))
    parts.append(str(arch.layer_widths[-1]))
    return ",".join(parts)


@dataclass(frozen=True)
class LayerUnitaries:
    """Per-layer tuples of perceptron unitaries, validated against ``arch``."""

    arch: Architecture
    layers: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self) -> None:
        arch = self.arch
        if len(self.layers) != arch.num_unitary_layers:
            raise ArchitectureError(
                f"expected {arch.num_unitary_layers} unitary layers, got {len(self.layers)}"
            )
        frozen_layers = []
        for l, layer in enumerate(self.layers):
            dim = 2 ** (arch.width_in(l) + 1)
            if len(layer) != arch.width_out(l):
                raise ArchitectureError(
                    f"layer {l} needs {arch.width_out(l)} perceptrons, got {len(layer)}"
                )
            frozen = []
            for j, u in enumerate(layer):
                mat = np.asarray(u, dtype=np.complex128)
                if mat.shape != (dim, dim):
                    raise ArchitectureError(
                        f"perceptron ({l},{j}) has shape {mat.shape}, expected {(dim, dim)}"
                    )
                defect = np.abs(mat @ mat.conj().T - np.eye(dim)).max()
                if defect > UNITARY_TOL:
                    raise ArchitectureError(
                        f"perceptron ({l},{j}) deviates from unitarity by {defect:.3e}"
                    )
                mat = np.array(mat)
                mat.setflags(write=False)
                frozen.append(mat)
            frozen_layers.append(tuple(frozen))
        object.__setattr__(self, "layers", tuple(frozen_layers))


def init_unitaries(arch: Architecture, rng: np.random.Generator) -> LayerUnitaries:
    """Independent Haar-random perceptrons, drawn layer by layer, top to bottom."""
    layers = []
    for l in range(arch.num_unitary_layers):
        qubits = arch.width_in(l) + 1
        layers.append(tuple(haar_random_unitary(qubits, rng) for _ in range(arch.width_out(l))))
    return LayerUnitaries(arch, tuple(layers))


def _perceptron_targets(width_in: int, j: int) -> list[int]:
    """Global qubits perceptron ``j`` acts on inside its layer's workspace."""
    return list(range(width_in)) + [width_in + j]


def embed_network(arch: Architecture, unitaries: LayerUnitaries) -> list[list[np.ndarray]]:
    """Embed every perceptron into its layer's full workspace once.

    The forward pass and the update-generator engine both conjugate by these
    matrices many times per epoch; embedding them once per epoch is the main
    cheap win at this scale.
    """
    embedded = []
    for l in range(arch.num_unitary_layers):
        width_in, width_out = arch.width_in(l), arch.width_out(l)
        space = width_in + width_out
        embedded.append(
            [
                embed_operator(u, _perceptron_targets(width_in, j), space)
                for j, u in enumerate(unitaries.layers[l])
            ]
        )
    return embedded


def _apply_layer(
    rho_matrix: np.ndarray, width_in: int, width_out: int, embedded_layer: Sequence[np.ndarray]
) -> np.ndarray:
    space = width_in + width_out
    big = tensor_product(rho_matrix, ground_state_projector(width_out))
    for u in embedded_layer:
        big = u @ big @ u.conj().T
    return ptrace_qubits(big, space, range(width_in, space))


def layer_forward(
    rho_in: OperatorState,
    perceptrons: Sequence[np.ndarray],
    width_in: int,
    width_out: int,
) -> OperatorState:
    """One layer: adjoin ancillas, apply perceptrons in order, drop the input.

    ``perceptrons[j]`` acts on all ``width_in`` input qubits plus the j-th
    fresh ancilla qubit.
    """
    if rho_in.num_qubits != width_in:
        raise DimensionError(
            f"layer input has {rho_in.num_qubits} qubits, expected {width_in}"
        )
    if len(perceptrons) != width_out:
        raise DimensionError(
            f"layer needs {width_out} perceptrons, got {len(perceptrons)}"
        )
    space = width_in + width_out
    embedded = [
        embed_operator(u, _perceptron_targets(width_in, j), space)
        for j, u in enumerate(perceptrons)
    ]
    return OperatorState(_apply_layer(rho_in.matrix, width_in, width_out, embedded), width_out)


def residual_add(rho_out: OperatorState, rho_in: OperatorState, delta_m: int) -> OperatorState:
    """Shortcut addition: ``rho_out + rho_in (x) |0...0><0...0|`` on ``delta_m`` qubits."""
    if delta_m < 0:
        raise DimensionError(f"shortcut padding must be non-negative, got {delta_m}")
    if rho_in.num_qubits + delta_m != rho_out.num_qubits:
        raise DimensionError(
            f"cannot add a {rho_in.num_qubits}-qubit input padded by {delta_m} "
            f"to a {rho_out.num_qubits}-qubit output"
        )
    if delta_m == 0:
        padded = rho_in.matrix
    else:
        padded = tensor_product(rho_in.matrix, ground_state_projector(delta_m))
    return OperatorState(rho_out.matrix + padded, rho_out.num_qubits)


@dataclass(frozen=True)
class ForwardRecord:
    """Per-layer inputs and outputs of one feedforward pass.

    ``layer_inputs[l]`` is what unitary layer ``l`` consumed (shortcut
    additions included), ``layer_outputs[l]`` what it produced before any
    shortcut; ``final`` is the network output, of trace ``2**t``.
    """

    layer_inputs: tuple[OperatorState, ...]
    layer_outputs: tuple[OperatorState, ...]

    @property
    def final(self) -> OperatorState:
        return self.layer_outputs[-1]


def forward(
    arch: Architecture,
    unitaries: LayerUnitaries,
    rho_in: OperatorState,
    embedded: list[list[np.ndarray]] | None = None,
) -> ForwardRecord:
    """Full feedforward pass from a unit-trace input state."""
    if rho_in.num_qubits != arch.input_qubits:
        raise DimensionError(
            f"input has {rho_in.num_qubits} qubits, architecture expects {arch.input_qubits}"
        )
    if abs(rho_in.trace() - 1.0) > INPUT_TRACE_TOL:
        raise ValueError(f"input state must have unit trace, got {rho_in.trace():.6f}")
    if embedded is None:
        embedded = embed_network(arch, unitaries)
    inputs = [rho_in]
    outputs = []
    current = rho_in
    for l in range(arch.num_unitary_layers):
        out = OperatorState(
            _apply_layer(current.matrix, arch.width_in(l), arch.width_out(l), embedded[l]),
            arch.width_out(l),
        )
        outputs.append(out)
        if arch.is_residual(l):
            current = residual_add(out, current, arch.delta_m(l))
        else:
            current = out
        if l + 1 < arch.num_unitary_layers:
            inputs.append(current)
    return ForwardRecord(tuple(inputs), tuple(outputs))


def forward_from(
    arch: Architecture,
    unitaries: LayerUnitaries,
    start_layer: int,
    rho_at_layer: OperatorState,
    embedded: list[list[np.ndarray]] | None = None,
) -> OperatorState:
    """Network output given the state entering unitary layer ``start_layer``.

    Lets perturbation sweeps reuse the unchanged prefix of a recorded pass.
    """
    if not 0 <= start_layer < arch.num_unitary_layers:
        raise ArchitectureError(f"no unitary layer {start_layer}")
    if embedded is None:
        embedded = embed_network(arch, unitaries)
    current = rho_at_layer
    for l in range(start_layer, arch.num_unitary_layers):
        out = OperatorState(
            _apply_layer(current.matrix, arch.width_in(l), arch.width_out(l), embedded[l]),
            arch.width_out(l),
        )
        current = residual_add(out, current, arch.delta_m(l)) if arch.is_residual(l) else out
    return current


def _complex_to_pairs(matrix: np.ndarray) -> list:
    stacked = np.stack([matrix.real, matrix.imag], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(payload: list, dim: int, where: str) -> np.ndarray:
    arr = np.asarray(payload, dtype=float)
    if arr.shape != (dim, dim, 2):
        raise ArchitectureError(f"{where}: expected shape {(dim, dim, 2)}, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def save_checkpoint(
    path: str | Path,
    unitaries: LayerUnitaries,
    seed: int | None = None,
    extra: dict | None = None,
) -> None:
    """Write unitaries as JSON: arch string, seed, row-major [re, im] pairs."""
    arch = unitaries.arch
    payload = {
        "arch": arch_to_string(arch),
        "seed": seed,
        "layers": [[_complex_to_pairs(u) for u in layer] for layer in unitaries.layers],
    }
    if extra:
        payload["extra"] = extra
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[LayerUnitaries, int | None]:
    """Inverse of :func:`save_checkpoint`; re-validates shapes and unitarity."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        arch = arch_from_string(payload["arch"])
        raw_layers = payload["layers"]
        seed = payload.get("seed")
    except (KeyError, TypeError) as exc:
        raise ArchitectureError(f"malformed checkpoint {path}: {exc}") from exc
    if len(raw_layers) != arch.num_unitary_layers:
        raise ArchitectureError(
            f"checkpoint {path} has {len(raw_layers)} layers, arch needs "
            f"{arch.num_unitary_layers}"
        )
    layers = []
    for l, raw_layer in enumerate(raw_layers):
        dim = 2 ** (arch.width_in(l) + 1)
        layers.append(
            tuple(
                _pairs_to_complex(raw, dim, f"checkpoint layer {l} perceptron {j}")
                for j, raw in enumerate(raw_layer)
            )
        )
    return LayerUnitaries(arch, tuple(layers)), seed
