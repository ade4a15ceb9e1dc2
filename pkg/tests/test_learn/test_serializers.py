"""Tests for the network text format."""

import numpy as np
import pytest

from inverselab.learn import (
    Activation,
    ModelFormatError,
    deserialize_network,
    forward,
    init_network,
    load_network,
    save_network,
    serialize_network,
)
from inverselab.learn.serializers import NETWORK_HEADER


@pytest.fixture
def small_net():
    """A two-layer network with a prelu hidden layer."""
    return init_network([2, 3, 1], [Activation.prelu(0.1), Activation.sigmoid()], seed=5)


class TestSerializeNetwork:
    """Test rendering networks as text."""

    def test_layout(self, small_net):
        """Test the header lines and the number of parameter lines."""
        lines = serialize_network(small_net).splitlines()
        assert lines[0] == NETWORK_HEADER
        assert lines[1] == "sizes: 2 3 1"
        assert lines[2] == "activations: prelu:0.1 sigmoid"
        assert len(lines) == 3 + (3 + 1) + (1 + 1)
        assert len(lines[3].split()) == 2

    def test_reload_is_exact(self, small_net, tmp_path):
        """Test a saved network reloads bit for bit."""
        path = save_network(small_net, tmp_path / "models" / "net.txt")
        loaded = load_network(path)
        assert loaded.sizes == small_net.sizes
        for a, b in zip(loaded.layers, small_net.layers, strict=True):
            assert np.array_equal(a.W, b.W)
            assert np.array_equal(a.b, b.b)
            assert a.activation == b.activation
        x = np.array([0.3, -1.2])
        assert np.array_equal(forward(loaded, x)[0], forward(small_net, x)[0])

    def test_save_leaves_no_temporary_files(self, small_net, tmp_path):
        """Test the atomic write cleans up after itself."""
        save_network(small_net, tmp_path / "net.txt")
        assert [p.name for p in tmp_path.iterdir()] == ["net.txt"]


class TestDeserializeNetwork:
    """Test parsing errors carry the offending line."""

    def _text(self, net):
        return serialize_network(net)

    def test_bad_header(self, small_net):
        """Test a wrong first line."""
        text = self._text(small_net).replace(NETWORK_HEADER, "network v0")
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network(text)
        assert exc.value.line == 1

    def test_bad_sizes(self, small_net):
        """Test non-integer sizes."""
        text = self._text(small_net).replace("sizes: 2 3 1", "sizes: 2 x 1")
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network(text)
        assert exc.value.line == 2

    def test_unknown_activation(self, small_net):
        """Test an unsupported activation name."""
        text = self._text(small_net).replace("sigmoid", "tanh")
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network(text)
        assert exc.value.line == 3

    def test_non_finite_parameter(self, small_net):
        """Test NaN parameters are refused with their line."""
        lines = self._text(small_net).splitlines()
        lines[4] = "nan 1.0"
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network("\n".join(lines))
        assert exc.value.line == 5

    def test_wrong_row_width(self, small_net):
        """Test a weight row with too many numbers."""
        lines = self._text(small_net).splitlines()
        lines[3] = lines[3] + " 1.0"
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network("\n".join(lines))
        assert exc.value.line == 4

    def test_truncated(self, small_net):
        """Test a file cut inside the last layer."""
        lines = self._text(small_net).splitlines()[:-1]
        with pytest.raises(ModelFormatError):
            deserialize_network("\n".join(lines))

    def test_trailing_content(self, small_net):
        """Test extra lines after the last layer."""
        text = self._text(small_net) + "1 2 3\n"
        with pytest.raises(ModelFormatError) as exc:
            deserialize_network(text)
        assert exc.value.line == 10

    def test_empty(self):
        """Test an empty file."""
        with pytest.raises(ModelFormatError):
            deserialize_network("")
