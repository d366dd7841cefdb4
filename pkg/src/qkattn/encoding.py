"""Feature maps embedding classical vectors into register states.

Two encoders are provided: amplitude encoding, which writes the
normalized (zero-padded) feature vector directly into the state
amplitudes via a recursive multiplexed-RY rotation tree, and angle
encoding, which writes features into n layers of n Pauli rotations with
the axis cycling X, Y, Z by layer index.
"""
from __future__ import annotations

import numpy as np

from .sim import Circuit

ENCODER_KINDS = ("amplitude", "angle")


def normalized_amplitudes(values, n: int) -> np.ndarray:
    """Zero-padded, unit-norm amplitude vector of length 2^n."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 1:
        raise ValueError("feature vector is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite entries")
    if v.size > 2**n:
        raise ValueError(f"{v.size} features exceed 2^{n} amplitude slots")
    norm = np.linalg.norm(v)
    if norm <= 0.0:
        raise ValueError("cannot amplitude-encode the zero vector")
    padded = np.zeros(2**n)
    padded[: v.size] = v / norm
    return padded


def _tree_angles(amps: np.ndarray, n: int) -> list[np.ndarray]:
    """RY angles per level, leaves (target qubit 0) first.

    At the leaf level the signed pair (even, odd) fixes the angle via
    atan2, which carries the amplitude signs; upper levels rotate between
    nonnegative subtree norms.
    """
    levels = []
    cur = amps
    for _ in range(n):
        even, odd = cur[0::2], cur[1::2]
        levels.append(2.0 * np.arctan2(odd, even))
        cur = np.hypot(even, odd)
    return levels


def amplitude_encode(values, n: int) -> Circuit:
    """Circuit fragment preparing the normalized feature vector from |0...0⟩."""
    amps = normalized_amplitudes(values, n)
    levels = _tree_angles(amps, n)
    circ = Circuit(n)
    # top of the tree targets qubit n-1; deeper levels add one control each
    for target in range(n - 1, -1, -1):
        angles = levels[target]
        controls = tuple(range(target + 1, n))
        for pattern, angle in enumerate(angles):
            if not controls:
                circ.gate("RY", (target,), float(angle))
                continue
            flips = [c for k, c in enumerate(controls) if (pattern >> k) & 1]
            for c in flips:
                circ.gate("X", (c,))
            circ.gate("MCRY-open", controls + (target,), float(angle))
            for c in flips:
                circ.gate("X", (c,))
    return circ


_AXES = ("RX", "RY", "RZ")


def angle_encode(values, n: int) -> Circuit:
    """n layers of n rotations; layer c rotates qubit d by feature d + c·n.

    Features beyond the vector length are zero (identity rotations);
    vectors longer than n² are rejected.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 1:
        raise ValueError("feature vector is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite entries")
    if v.size > n * n:
        raise ValueError(f"{v.size} features exceed the n²={n * n} angle slots")
    padded = np.zeros(n * n)
    padded[: v.size] = v
    circ = Circuit(n)
    for layer in range(n):
        kind = _AXES[layer % 3]
        for d in range(n):
            circ.gate(kind, (d,), float(padded[d + layer * n]))
    return circ


def encode(kind: str, values, n: int) -> Circuit:
    if kind == "amplitude":
        return amplitude_encode(values, n)
    if kind == "angle":
        return angle_encode(values, n)
    raise ValueError(f"unknown encoder kind {kind!r}")


def encoder_adjoint(fragment: Circuit) -> Circuit:
    """U† of an encoder fragment: reversed gates with negated angles."""
    return fragment.adjoint()


def feature_capacity(kind: str, n: int) -> int:
    if kind == "amplitude":
        return 2**n
    if kind == "angle":
        return n * n
    raise ValueError(f"unknown encoder kind {kind!r}")
