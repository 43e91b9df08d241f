"""Update generators and the training loop.

Training maximizes ``c_sv + gamma * c_g`` by rotating every perceptron once
per epoch: ``U <- exp(i * epsilon * K) @ U`` with a Hermitian generator ``K``
computed synchronously from the epoch-start unitaries.

Analytic generators
-------------------
For perceptron ``j`` of layer ``l`` the generator is built from commutators
of two operators on the layer's workspace (previous-layer qubits plus this
layer's qubits):

* the *forward* operator: the layer's recorded input (shortcut additions
  included), tensored with ancilla projectors and conjugated by the layer's
  perceptrons up to and including ``j``;
* the *backward* operator: the target projector (or, for the graph term, the
  difference of two vertices' final outputs) pulled back through the adjoint
  of everything downstream — remaining perceptrons of this layer, deeper
  layers, and the corner-block adjoints of downstream shortcuts.

``K_j^l = eta * c_l * i * sum tr_rest([forward, backward])`` where ``tr_rest``
keeps only the qubits perceptron ``j`` acts on, and the dimensional prefactor
``c_l`` is ``2**m_{l-1} / S`` for the supervised sum over the ``S``
supervised vertices and ``2**(m_{l-1}+1)`` for the graph sum over unordered
neighbor pairs. Because shortcut additions enter both the recorded inputs and
the adjoint pull-back, expanding the commutators reproduces one term per
forward/backward path through the network, each path exactly once.

Finite-difference generators
----------------------------
``k_numeric_oracle`` rebuilds the same K from central differences of the
costs under ``U -> exp(i * theta * P) @ U`` for every Pauli direction ``P``.
Pauli completeness (``H = sum_P tr(H P) P / 2**n``) fixes the assembly
constants exactly: with ``t`` flagged layers,

* supervised: ``K = eta * 2**(t-1) * sum_P (dC_sv/dtheta_P) P``,
* graph:      ``K = eta * 2**(t-2) * sum_P (dC_g/dtheta_P) P``.

The extra factor ``GRAPH_GRADIENT_SCALE = 0.5`` between the two reflects that
the graph *cost* sums ordered pairs (each edge twice) while the graph
*generator* sums each edge once; it was calibrated once against the oracle
and is asserted stable by the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cost import CostReport, cost_full, cost_graph, cost_supervised, cost_test
from .graphdata import GraphDataset
from .netcore import (
    Architecture,
    ArchitectureError,
    ForwardRecord,
    LayerUnitaries,
    embed_network,
    forward,
    forward_from,
    init_unitaries,
)
from .qlinalg import (
    HERMITIAN_TOL,
    DimensionError,
    OperatorState,
    PureState,
    _pauli_stack,
    embed_operator,
    exp_i_hermitian,
    ground_state_projector,
    ptrace_qubits,
    tensor_product,
)

__all__ = [
    "GRAPH_GRADIENT_SCALE",
    "K_MODES",
    "TrainingConfig",
    "TrainingTrace",
    "UpdateGenerators",
    "graph_generators",
    "k_full",
    "k_graph_one_hidden",
    "k_numeric_oracle",
    "k_supervised_one_hidden",
    "k_supervised_two_hidden",
    "numeric_cost_gradients",
    "supervised_generators",
    "train",
    "update_step",
]

K_MODES = ("analytic", "numeric", "hybrid")

#: Ratio between the graph generator's normalization and the gradient of the
#: ordered-pair graph cost; see the module docstring.
GRAPH_GRADIENT_SCALE = 0.5

#: Plateau annotation: |delta c_full| below this for PLATEAU_WINDOW epochs.
PLATEAU_TOL = 1e-7
PLATEAU_WINDOW = 20


@dataclass(frozen=True)
class UpdateGenerators:
    """One Hermitian generator per perceptron, mirroring ``LayerUnitaries``."""

    arch: Architecture
    layers: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self) -> None:
        arch = self.arch
        if len(self.layers) != arch.num_unitary_layers:
            raise ArchitectureError(
                f"expected {arch.num_unitary_layers} layers, got {len(self.layers)}"
            )
        frozen_layers = []
        for l, layer in enumerate(self.layers):
            dim = 2 ** (arch.width_in(l) + 1)
            if len(layer) != arch.width_out(l):
                raise ArchitectureError(
                    f"layer {l} needs {arch.width_out(l)} generators, got {len(layer)}"
                )
            frozen = []
            for j, k in enumerate(layer):
                mat = np.asarray(k, dtype=np.complex128)
                if mat.shape != (dim, dim):
                    raise ArchitectureError(
                        f"generator ({l},{j}) has shape {mat.shape}, expected {(dim, dim)}"
                    )
                defect = np.abs(mat - mat.conj().T).max()
                if defect > HERMITIAN_TOL * max(1.0, np.abs(mat).max()):
                    raise ValueError(
                        f"generator ({l},{j}) deviates from Hermiticity by {defect:.3e}"
                    )
                mat = np.array(mat)
                mat.setflags(write=False)
                frozen.append(mat)
            frozen_layers.append(tuple(frozen))
        object.__setattr__(self, "layers", tuple(frozen_layers))


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of one training run."""

    epochs: int
    seed: int = 0
    eta: float = 1.0
    epsilon: float = 0.01
    gamma: float = 0.0
    k_mode: str = "hybrid"
    finite_diff_step: float = 1e-5

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.gamma > 0:
            raise ValueError(f"gamma must be non-positive, got {self.gamma}")
        if self.k_mode not in K_MODES:
            raise ValueError(f"k_mode must be one of {K_MODES}, got {self.k_mode!r}")
        if not 1e-7 <= self.finite_diff_step <= 1e-3:
            raise ValueError(
                f"finite_diff_step must lie in [1e-7, 1e-3], got {self.finite_diff_step}"
            )


@dataclass(frozen=True)
class TrainingTrace:
    """Per-epoch cost reports (measured after each update) plus the outcome."""

    arch: Architecture
    config: TrainingConfig
    initial_report: CostReport
    reports: tuple[CostReport, ...]
    wall_ms: tuple[float, ...]
    final_unitaries: LayerUnitaries
    plateau_epoch: int | None = field(default=None)

    @property
    def final_report(self) -> CostReport:
        return self.reports[-1] if self.reports else self.initial_report


# ---------------------------------------------------------------------------
# Analytic engine
# ---------------------------------------------------------------------------


def _empty_accumulator(arch: Architecture) -> list[list[np.ndarray]]:
    return [
        [
            np.zeros((2 ** (arch.width_in(l) + 1),) * 2, dtype=np.complex128)
            for _ in range(arch.width_out(l))
        ]
        for l in range(arch.num_unitary_layers)
    ]


def _layer_pass(
    arch: Architecture,
    layer: int,
    embedded_layer: Sequence[np.ndarray],
    rho_in_matrix: np.ndarray,
    back_matrix: np.ndarray,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Commutator contributions of one layer plus the pulled-back operator.

    Returns ``i * tr_rest([forward_j, backward_j])`` for every perceptron
    ``j``, and the back operator propagated to the previous layer's qubits
    (adjoint of the layer map, before any shortcut corner term).
    """
    width_in, width_out = arch.width_in(layer), arch.width_out(layer)
    space = width_in + width_out
    dim_in = 2**width_in

    backs = [None] * width_out
    back = tensor_product(np.eye(dim_in, dtype=np.complex128), back_matrix)
    backs[width_out - 1] = back
    for p in range(width_out - 2, -1, -1):
        u = embedded_layer[p + 1]
        back = u.conj().T @ back @ u
        backs[p] = back

    contribs = []
    fwd = tensor_product(rho_in_matrix, ground_state_projector(width_out))
    for p in range(width_out):
        u = embedded_layer[p]
        fwd = u @ fwd @ u.conj().T
        comm = fwd @ backs[p] - backs[p] @ fwd
        keep = list(range(width_in)) + [width_in + p]
        contribs.append(1j * ptrace_qubits(comm, space, keep))

    u0 = embedded_layer[0]
    sandwich = u0.conj().T @ backs[0] @ u0
    dim_out = 2**width_out
    view = sandwich.reshape(dim_in, dim_out, dim_in, dim_out)
    return contribs, np.ascontiguousarray(view[:, 0, :, 0])


def _corner_block(matrix: np.ndarray, keep_qubits: int, pad_qubits: int) -> np.ndarray:
    """Block <0...0| matrix |0...0> on the last ``pad_qubits`` qubits."""
    if pad_qubits == 0:
        return matrix
    dim_keep, dim_pad = 2**keep_qubits, 2**pad_qubits
    view = matrix.reshape(dim_keep, dim_pad, dim_keep, dim_pad)
    return np.ascontiguousarray(view[:, 0, :, 0])


def _accumulate_commutators(
    arch: Architecture,
    embedded: list[list[np.ndarray]],
    items: Iterable[tuple[Sequence[np.ndarray], np.ndarray, float]],
) -> list[list[np.ndarray]]:
    """Sum weighted per-perceptron commutator traces over training items.

    Each item is (per-layer input matrices, seed operator on the output
    qubits, weight). The seed is pulled backward layer by layer; flagged
    layers also contribute their shortcut's corner-block adjoint.
    """
    acc = _empty_accumulator(arch)
    for layer_inputs, seed, weight in items:
        back = seed
        for l in range(arch.num_unitary_layers - 1, -1, -1):
            contribs, pulled = _layer_pass(arch, l, embedded[l], layer_inputs[l], back)
            for p, c in enumerate(contribs):
                acc[l][p] += weight * c
            if arch.is_residual(l):
                pulled = pulled + _corner_block(back, arch.width_in(l), arch.delta_m(l))
            back = pulled
    return acc


def _scaled_generators(
    arch: Architecture, acc: list[list[np.ndarray]], layer_scale
) -> UpdateGenerators:
    layers = tuple(
        tuple(layer_scale(l) * k for k in layer) for l, layer in enumerate(acc)
    )
    return UpdateGenerators(arch, layers)


def supervised_generators(
    arch: Architecture,
    unitaries: LayerUnitaries,
    records: Sequence[ForwardRecord],
    targets: Sequence[PureState],
    eta: float = 1.0,
    embedded: list[list[np.ndarray]] | None = None,
) -> UpdateGenerators:
    """Ascent generators for the supervised cost, any depth and flag pattern."""
    if len(records) != len(targets) or not records:
        raise DimensionError(
            f"need matching non-empty records/targets, got {len(records)}/{len(targets)}"
        )
    if embedded is None:
        embedded = embed_network(arch, unitaries)
    items = (
        (
            [state.matrix for state in rec.layer_inputs],
            phi.density().matrix,
            1.0,
        )
        for rec, phi in zip(records, targets)
    )
    acc = _accumulate_commutators(arch, embedded, items)
    num_pairs = len(records)
    return _scaled_generators(
        arch, acc, lambda l: eta * 2.0 ** arch.width_in(l) / num_pairs
    )


def graph_generators(
    arch: Architecture,
    unitaries: LayerUnitaries,
    records: Sequence[ForwardRecord],
    adjacency: np.ndarray,
    eta: float = 1.0,
    embedded: list[list[np.ndarray]] | None = None,
) -> UpdateGenerators:
    """Ascent generators for the graph cost (sum over unordered neighbor pairs).

    Training subtracts these (``gamma <= 0``), shrinking the output spread
    between adjacent vertices.
    """
    adj = np.asarray(adjacency, dtype=float)
    n = len(records)
    if adj.shape != (n, n):
        raise DimensionError(f"adjacency shape {adj.shape} does not match {n} records")
    if embedded is None:
        embedded = embed_network(arch, unitaries)

    def edge_items():
        for v in range(n):
            for w in range(v + 1, n):
                if adj[v, w] != 0.0:
                    inputs = [
                        records[v].layer_inputs[l].matrix - records[w].layer_inputs[l].matrix
                        for l in range(arch.num_unitary_layers)
                    ]
                    seed = records[v].final.matrix - records[w].final.matrix
                    yield inputs, seed, float(adj[v, w])

    acc = _accumulate_commutators(arch, embedded, edge_items())
    return _scaled_generators(arch, acc, lambda l: eta * 2.0 ** (arch.width_in(l) + 1))


def _require_family(arch: Architecture, hidden: int, op_name: str, flags_all_set: bool) -> None:
    if arch.num_hidden_layers != hidden:
        raise ArchitectureError(
            f"{op_name} needs exactly {hidden} hidden layer(s), "
            f"got {arch.num_hidden_layers}"
        )
    if flags_all_set and not all(arch.residual_flags):
        raise ArchitectureError(f"{op_name} needs every hidden layer flagged residual")


def k_supervised_one_hidden(
    arch: Architecture,
    unitaries: LayerUnitaries,
    records: Sequence[ForwardRecord],
    targets: Sequence[PureState],
    eta: float = 1.0,
) -> UpdateGenerators:
    """Supervised generators for the one-residual-hidden-layer family."""
    _require_family(arch, 1, "k_supervised_one_hidden", flags_all_set=True)
    return supervised_generators(arch, unitaries, records, targets, eta)


def k_supervised_two_hidden(
    arch: Architecture,
    unitaries: LayerUnitaries,
    records: Sequence[ForwardRecord],
    targets: Sequence[PureState],
    eta: float = 1.0,
) -> UpdateGenerators:
    """Supervised generators for two-hidden-layer nets (any flag pattern)."""
    _require_family(arch, 2, "k_supervised_two_hidden", flags_all_set=False)
    return supervised_generators(arch, unitaries, records, targets, eta)


def k_graph_one_hidden(
    arch: Architecture,
    unitaries: LayerUnitaries,
    records: Sequence[ForwardRecord],
    adjacency: np.ndarray,
    eta: float = 1.0,
) -> UpdateGenerators:
    """Graph generators for the one-residual-hidden-layer family."""
    _require_family(arch, 1, "k_graph_one_hidden", flags_all_set=True)
    return graph_generators(arch, unitaries, records, adjacency, eta)


def k_full(
    supervised: UpdateGenerators,
    graph: UpdateGenerators | None,
    gamma: float,
) -> UpdateGenerators:
    """Blend ``supervised + gamma * graph``; ``graph`` may be None iff gamma is 0."""
    if gamma > 0:
        raise ValueError(f"gamma must be non-positive, got {gamma}")
    if graph is None:
        if gamma != 0.0:
            raise ValueError("gamma != 0 requires graph generators")
        return supervised
    if graph.arch != supervised.arch:
        raise ArchitectureError("supervised and graph generators disagree on architecture")
    layers = tuple(
        tuple(ks + gamma * kg for ks, kg in zip(ls, lg))
        for ls, lg in zip(supervised.layers, graph.layers)
    )
    return UpdateGenerators(supervised.arch, layers)


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def _dataset_records(
    arch: Architecture,
    unitaries: LayerUnitaries,
    dataset: GraphDataset,
    embedded: list[list[np.ndarray]] | None = None,
) -> list[ForwardRecord]:
    if embedded is None:
        embedded = embed_network(arch, unitaries)
    return [
        forward(arch, unitaries, dataset.input_density(v), embedded=embedded)
        for v in range(dataset.spec.num_vertices)
    ]


def _costs_from_layer(
    arch: Architecture,
    unitaries: LayerUnitaries,
    dataset: GraphDataset,
    records: Sequence[ForwardRecord],
    layer: int,
    embedded: list[list[np.ndarray]],
    include_graph: bool,
) -> tuple[float, float]:
    """(c_sv, c_g) after re-running layers ``layer..`` with modified unitaries."""
    t = arch.residual_count
    vertices = (
        range(dataset.spec.num_vertices) if include_graph else dataset.spec.supervised_indices
    )
    finals: dict[int, OperatorState] = {
        v: forward_from(arch, unitaries, layer, records[v].layer_inputs[layer], embedded=embedded)
        for v in vertices
    }
    c_sv = cost_supervised(
        [finals[v] for v in dataset.spec.supervised_indices],
        list(dataset.supervised_targets),
        t,
    )
    c_g = (
        cost_graph([finals[v] for v in range(dataset.spec.num_vertices)], dataset.adjacency, t)
        if include_graph
        else 0.0
    )
    return c_sv, c_g


def numeric_cost_gradients(
    arch: Architecture,
    unitaries: LayerUnitaries,
    dataset: GraphDataset,
    h: float = 1e-5,
    include_graph: bool = True,
) -> tuple[list[list[np.ndarray]], list[list[np.ndarray]]]:
    """Central-difference cost gradients per perceptron and Pauli direction.

    Returns two nested lists (supervised, graph), each holding one length-4**n
    real coefficient vector per perceptron: the derivative of the cost when
    that perceptron is premultiplied by ``exp(i * theta * P)``. The identity
    direction is a global phase, hence exactly zero and skipped.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"finite-difference step must lie in [1e-7, 1e-3], got {h}")
    embedded = embed_network(arch, unitaries)
    records = _dataset_records(arch, unitaries, dataset, embedded)
    grads_sv: list[list[np.ndarray]] = []
    grads_g: list[list[np.ndarray]] = []
    cos_h, sin_h = np.cos(h), np.sin(h)
    for l in range(arch.num_unitary_layers):
        space_paulis = _pauli_stack(arch.width_in(l) + 1)
        layer_sv, layer_g = [], []
        for p in range(arch.width_out(l)):
            base_emb = embedded[l][p]
            g_sv = np.zeros(len(space_paulis))
            g_g = np.zeros(len(space_paulis))
            targets = list(range(arch.width_in(l))) + [arch.width_in(l) + p]
            for a in range(1, len(space_paulis)):
                pauli_emb = embed_operator(
                    space_paulis[a], targets, arch.width_in(l) + arch.width_out(l)
                )
                rotated = pauli_emb @ base_emb
                plus = cos_h * base_emb + 1j * sin_h * rotated
                minus = cos_h * base_emb - 1j * sin_h * rotated
                patched = [list(layer) for layer in embedded]
                patched[l][p] = plus
                sv_p, g_p = _costs_from_layer(
                    arch, unitaries, dataset, records, l, patched, include_graph
                )
                patched[l][p] = minus
                sv_m, g_m = _costs_from_layer(
                    arch, unitaries, dataset, records, l, patched, include_graph
                )
                g_sv[a] = (sv_p - sv_m) / (2 * h)
                g_g[a] = (g_p - g_m) / (2 * h)
            layer_sv.append(g_sv)
            layer_g.append(g_g)
        grads_sv.append(layer_sv)
        grads_g.append(layer_g)
    return grads_sv, grads_g


def _assemble_from_coefficients(
    arch: Architecture, coeffs: list[list[np.ndarray]]
) -> list[list[np.ndarray]]:
    out = []
    for l, layer in enumerate(coeffs):
        stack = _pauli_stack(arch.width_in(l) + 1)
        out.append([np.tensordot(c, stack, axes=1) for c in layer])
    return out


def k_numeric_oracle(
    arch: Architecture,
    unitaries: LayerUnitaries,
    dataset: GraphDataset,
    gamma: float = 0.0,
    eta: float = 1.0,
    h: float = 1e-5,
) -> UpdateGenerators:
    """Finite-difference replacement for the analytic generators.

    Assembles ``eta * (2**(t-1) * grad c_sv + gamma * 2**(t-2) * grad c_g)``
    per perceptron in the Pauli basis; see the module docstring for why those
    constants reproduce the analytic normalization exactly.
    """
    if gamma > 0:
        raise ValueError(f"gamma must be non-positive, got {gamma}")
    include_graph = gamma != 0.0
    grads_sv, grads_g = numeric_cost_gradients(arch, unitaries, dataset, h, include_graph)
    t = arch.residual_count
    sv_mats = _assemble_from_coefficients(arch, grads_sv)
    layers = []
    for l in range(arch.num_unitary_layers):
        layer = []
        for p in range(arch.width_out(l)):
            k = eta * 2.0 ** (t - 1) * sv_mats[l][p]
            if include_graph:
                stack = _pauli_stack(arch.width_in(l) + 1)
                kg = np.tensordot(grads_g[l][p], stack, axes=1)
                k = k + gamma * eta * 2.0 ** (t - 1) * GRAPH_GRADIENT_SCALE * kg
            layer.append(k)
        layers.append(tuple(layer))
    return UpdateGenerators(arch, tuple(layers))


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def update_step(
    unitaries: LayerUnitaries, generators: UpdateGenerators, epsilon: float
) -> LayerUnitaries:
    """Rotate every perceptron: ``U <- exp(i * epsilon * K) @ U``."""
    if generators.arch != unitaries.arch:
        raise ArchitectureError("generators do not match the unitaries' architecture")
    layers = tuple(
        tuple(exp_i_hermitian(k, epsilon) @ u for u, k in zip(us, ks))
        for us, ks in zip(unitaries.layers, generators.layers)
    )
    return LayerUnitaries(unitaries.arch, layers)


def _cost_report(
    arch: Architecture, dataset: GraphDataset, records: Sequence[ForwardRecord], gamma: float
) -> CostReport:
    t = arch.residual_count
    sup = dataset.spec.supervised_indices
    c_sv = cost_supervised([records[v].final for v in sup], list(dataset.supervised_targets), t)
    c_g = cost_graph([rec.final for rec in records], dataset.adjacency, t)
    c_t = cost_test(
        [records[v].final for v in dataset.spec.test_indices], list(dataset.test_targets), t
    )
    return CostReport(c_sv=c_sv, c_g=c_g, c_full=cost_full(c_sv, c_g, gamma), c_test=c_t)


def _analytic_generators(
    arch: Architecture,
    unitaries: LayerUnitaries,
    dataset: GraphDataset,
    records: Sequence[ForwardRecord],
    config: TrainingConfig,
    embedded: list[list[np.ndarray]],
) -> UpdateGenerators:
    sup_records = [records[v] for v in dataset.spec.supervised_indices]
    k_sv = supervised_generators(
        arch, unitaries, sup_records, list(dataset.supervised_targets), config.eta, embedded
    )
    if config.gamma == 0.0:
        return k_sv
    k_g = graph_generators(arch, unitaries, records, dataset.adjacency, config.eta, embedded)
    return k_full(k_sv, k_g, config.gamma)


def _plateau_epoch(values: Sequence[float]) -> int | None:
    streak = 0
    for e in range(1, len(values)):
        if abs(values[e] - values[e - 1]) < PLATEAU_TOL:
            streak += 1
            if streak >= PLATEAU_WINDOW:
                return e
        else:
            streak = 0
    return None


def train(
    arch: Architecture,
    dataset: GraphDataset,
    config: TrainingConfig,
    initial_unitaries: LayerUnitaries | None = None,
) -> TrainingTrace:
    """Run the epoch loop; deterministic given (arch, dataset, config).

    Each epoch computes generators from the epoch-start unitaries (analytic
    engine in ``analytic``/``hybrid`` modes, finite differences in
    ``numeric``), applies one synchronous rotation to every perceptron, then
    records all four costs at the new unitaries. ``analytic`` mode refuses
    nets deeper than two hidden layers; ``hybrid`` and ``numeric`` take any
    depth.
    """
    if dataset.input_qubits != arch.input_qubits:
        raise DimensionError(
            f"dataset states have {dataset.input_qubits} qubits, "
            f"architecture expects {arch.input_qubits}"
        )
    if config.k_mode == "analytic" and arch.num_hidden_layers > 2:
        raise ArchitectureError(
            "analytic mode supports at most two hidden layers; "
            "use hybrid or numeric for deeper nets"
        )
    unitaries = initial_unitaries or init_unitaries(
        arch, np.random.default_rng([config.seed, 1])
    )
    if unitaries.arch != arch:
        raise ArchitectureError("initial unitaries do not match the architecture")

    embedded = embed_network(arch, unitaries)
    records = _dataset_records(arch, unitaries, dataset, embedded)
    initial_report = _cost_report(arch, dataset, records, config.gamma)

    reports: list[CostReport] = []
    wall: list[float] = []
    for _ in range(config.epochs):
        t0 = time.perf_counter()
        if config.k_mode == "numeric":
            generators = k_numeric_oracle(
                arch, unitaries, dataset, config.gamma, config.eta, config.finite_diff_step
            )
        else:
            generators = _analytic_generators(
                arch, unitaries, dataset, records, config, embedded
            )
        unitaries = update_step(unitaries, generators, config.epsilon)
        embedded = embed_network(arch, unitaries)
        records = _dataset_records(arch, unitaries, dataset, embedded)
        reports.append(_cost_report(arch, dataset, records, config.gamma))
        wall.append((time.perf_counter() - t0) * 1000.0)

    plateau = _plateau_epoch([initial_report.c_full] + [r.c_full for r in reports])
    return TrainingTrace(
        arch=arch,
        config=config,
        initial_report=initial_report,
        reports=tuple(reports),
        wall_ms=tuple(wall),
        final_unitaries=unitaries,
        plateau_epoch=plateau,
    )
