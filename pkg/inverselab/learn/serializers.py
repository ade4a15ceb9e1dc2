"""Text format for trained networks.

Layout::

    inverselab-network v1
    sizes: 4 8 4
    activations: relu identity
    <d1 rows of W^1, d0 numbers each>
    <one line with b^1>
    ...

Numbers are written with 17 significant digits so a reload is bit-exact.
"""

from pathlib import Path

import numpy as np

from inverselab.learn.schemas import Activation, DenseLayer, ModelFormatError, Network
from inverselab.utils import atomic_write_text

NETWORK_HEADER = "inverselab-network v1"


def format_float(x: float) -> str:
    """Render a float with 17 significant digits."""
    return f"{x:.17g}"


def _format_row(values: np.ndarray) -> str:
    return " ".join(format_float(float(x)) for x in values)


def serialize_network(net: Network) -> str:
    """Render a network in the text format.

    Args:
        net: Network to render.

    Returns:
        str: File contents, newline terminated.
    """
    lines = [
        NETWORK_HEADER,
        "sizes: " + " ".join(str(d) for d in net.sizes),
        "activations: " + " ".join(layer.activation.label for layer in net.layers),
    ]
    for layer in net.layers:
        lines.extend(_format_row(row) for row in layer.W)
        lines.append(_format_row(layer.b))
    return "\n".join(lines) + "\n"


def _parse_numbers(text: str, expected: int, line_no: int) -> np.ndarray:
    parts = text.split()
    if len(parts) != expected:
        raise ModelFormatError(line_no, f"expected {expected} numbers, found {len(parts)}")
    try:
        values = np.array([float(p) for p in parts])
    except ValueError as e:
        raise ModelFormatError(line_no, f"not a number: {e}") from e
    if not np.all(np.isfinite(values)):
        raise ModelFormatError(line_no, "parameters must be finite")
    return values


def _parse_field(lines: list[str], index: int, key: str) -> str:
    if index >= len(lines):
        raise ModelFormatError(index + 1, f"missing '{key}:' line")
    name, sep, value = lines[index].partition(":")
    if not sep or name.strip() != key:
        raise ModelFormatError(index + 1, f"expected '{key}:'")
    return value.strip()


def deserialize_network(text: str) -> Network:
    """Parse the text format.

    Raises:
        ModelFormatError: On any malformed line, with its number.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != NETWORK_HEADER:
        raise ModelFormatError(1, f"expected header '{NETWORK_HEADER}'")

    try:
        sizes = [int(s) for s in _parse_field(lines, 1, "sizes").split()]
    except ValueError as e:
        raise ModelFormatError(2, "sizes must be integers") from e
    if len(sizes) < 2 or any(d < 1 for d in sizes):
        raise ModelFormatError(2, "need at least two positive sizes")

    labels = _parse_field(lines, 2, "activations").split()
    if len(labels) != len(sizes) - 1:
        raise ModelFormatError(3, f"expected {len(sizes) - 1} activations, found {len(labels)}")
    try:
        activations = [Activation.from_label(label) for label in labels]
    except ValueError as e:
        raise ModelFormatError(3, f"unknown activation: {e}") from e

    cursor = 3
    layers = []
    for d_in, d_out, act in zip(sizes[:-1], sizes[1:], activations, strict=True):
        if cursor + d_out + 1 > len(lines):
            raise ModelFormatError(len(lines) + 1, "file ends inside a layer")
        W = np.vstack(
            [_parse_numbers(lines[cursor + r], d_in, cursor + r + 1) for r in range(d_out)]
        )
        b = _parse_numbers(lines[cursor + d_out], d_out, cursor + d_out + 1)
        layers.append(DenseLayer(W=W, b=b, activation=act))
        cursor += d_out + 1

    trailing = [i for i in range(cursor, len(lines)) if lines[i].strip()]
    if trailing:
        raise ModelFormatError(trailing[0] + 1, "unexpected content after the last layer")
    try:
        return Network(layers=layers)
    except ValueError as e:
        raise ModelFormatError(3, str(e)) from e


def save_network(net: Network, path: str | Path) -> Path:
    """Write a network atomically."""
    return atomic_write_text(path, serialize_network(net))


def load_network(path: str | Path) -> Network:
    """Read a network written by :func:`save_network`.

    Raises:
        ModelFormatError: If the file is malformed.
    """
    return deserialize_network(Path(path).read_text(encoding="utf-8"))
