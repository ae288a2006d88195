"""Small feedforward network with hand-rolled forward, Jacobian, and backprop.

tanh hidden layers and a linear output keep the map smooth, which the
Jacobian-based losses require.  Besides the usual output-side backward pass
there is a backward pass through the input Jacobian itself, so losses on
J = dy/dx can be differentiated with respect to the parameters.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MlpModel"]


class MlpModel:
    """Fully connected tanh network; weights[i] has shape (out, in)."""

    def __init__(self, widths, weights=None, biases=None):
        self.widths = [int(w) for w in widths]
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if weights is None:
            weights = [np.zeros((o, i)) for i, o in zip(self.widths, self.widths[1:])]
            biases = [np.zeros(o) for o in self.widths[1:]]
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        for w, b, i, o in zip(self.weights, self.biases, self.widths, self.widths[1:]):
            if w.shape != (o, i) or b.shape != (o,):
                raise ValueError(f"parameter shapes inconsistent with widths {self.widths}")

    # -- construction --------------------------------------------------------

    @classmethod
    def init(cls, widths, rng: np.random.Generator):
        """Uniform init in +-sqrt(6/(fan_in+fan_out)); zero biases."""
        weights = []
        biases = []
        for i, o in zip(widths, widths[1:]):
            bound = np.sqrt(6.0 / (i + o))
            weights.append(rng.uniform(-bound, bound, size=(o, i)))
            biases.append(np.zeros(o))
        return cls(widths, weights, biases)

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    @property
    def n_hidden(self) -> int:
        return len(self.widths) - 2

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_parameters(self, params):
        it = iter(params)
        for i in range(len(self.weights)):
            self.weights[i] = np.asarray(next(it), dtype=float)
            self.biases[i] = np.asarray(next(it), dtype=float)

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat_parameters(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=float)
        out = []
        pos = 0
        for p in self.parameters():
            out.append(flat[pos : pos + p.size].reshape(p.shape))
            pos += p.size
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")
        self.set_parameters(out)

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.widths, [w.copy() for w in self.weights], [b.copy() for b in self.biases]
        )

    # -- forward -------------------------------------------------------------

    def _check_input(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None]
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}")
        return X, single

    def forward_cached(self, X: np.ndarray):
        """Returns (Y, activations); activations[0] is the input batch."""
        acts = [X]
        Z = X
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            Z = np.tanh(Z @ w.T + b)
            acts.append(Z)
        Y = Z @ self.weights[-1].T + self.biases[-1]
        return Y, acts

    def forward(self, X: np.ndarray) -> np.ndarray:
        X, single = self._check_input(X)
        Y, _ = self.forward_cached(X)
        return Y[0] if single else Y

    def jacobian_cached(self, X: np.ndarray):
        """Returns (J, activations, chain) with J of shape (B, l, k).

        chain[i] accumulates d(activation_i)/d(input) for hidden layer i.
        """
        Y, acts = self.forward_cached(X)
        chain = []
        G = None
        for i, w in enumerate(self.weights[:-1]):
            D = 1.0 - acts[i + 1] ** 2
            G = D[:, :, None] * (w if G is None else w @ G)
            chain.append(G)
        if chain:
            J = self.weights[-1] @ chain[-1]
        else:
            J = np.broadcast_to(self.weights[-1], (len(X), *self.weights[-1].shape)).copy()
        return J, acts, chain

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X, single = self._check_input(X)
        J, _, _ = self.jacobian_cached(X)
        return J[0] if single else J

    # -- backward ------------------------------------------------------------

    def zero_grads(self) -> list[np.ndarray]:
        return [np.zeros_like(p) for p in self.parameters()]

    def backprop_output(self, acts, dY: np.ndarray, grads=None) -> list[np.ndarray]:
        """Accumulate d(loss)/d(params) given d(loss)/d(output)."""
        grads = grads if grads is not None else self.zero_grads()
        H = self.n_hidden
        grads[2 * H] += dY.T @ acts[H]
        grads[2 * H + 1] += dY.sum(axis=0)
        dZ = dY @ self.weights[-1]
        for i in range(H, 0, -1):
            dU = dZ * (1.0 - acts[i] ** 2)
            grads[2 * (i - 1)] += dU.T @ acts[i - 1]
            grads[2 * (i - 1) + 1] += dU.sum(axis=0)
            dZ = dU @ self.weights[i - 1]
        return grads

    def backprop_jacobian(self, acts, chain, dJ: np.ndarray, grads=None) -> list[np.ndarray]:
        """Accumulate d(loss)/d(params) given d(loss)/d(Jacobian).

        The Jacobian is the layer product W_out * D_H W_H * ... * D_1 W_1;
        each weight enters both explicitly and through the tanh slopes D_i,
        so a second activation-side backward pass collects the D-path terms.
        """
        grads = grads if grads is not None else self.zero_grads()
        H = self.n_hidden
        if H == 0:
            grads[0] += dJ.sum(axis=0)
            return grads
        grads[2 * H] += np.tensordot(dJ, chain[-1], axes=([0, 2], [0, 2]))
        M = self.weights[-1].T @ dJ  # (B, n_H, k)
        dz_extra = [None] * (H + 1)
        for i in range(H, 0, -1):
            W = self.weights[i - 1]
            G_prev = chain[i - 2] if i >= 2 else None
            A = W @ G_prev if G_prev is not None else np.broadcast_to(W, M.shape)
            D = 1.0 - acts[i] ** 2
            DM = D[:, :, None] * M
            dz_extra[i] = -2.0 * acts[i] * np.sum(M * A, axis=2)
            if G_prev is not None:
                grads[2 * (i - 1)] += np.tensordot(DM, G_prev, axes=([0, 2], [0, 2]))
            else:
                grads[2 * (i - 1)] += DM.sum(axis=0)
            M = W.T @ DM
        dZ = np.zeros_like(acts[H])
        for i in range(H, 0, -1):
            dZ = dZ + dz_extra[i]
            dU = dZ * (1.0 - acts[i] ** 2)
            grads[2 * (i - 1)] += dU.T @ acts[i - 1]
            grads[2 * (i - 1) + 1] += dU.sum(axis=0)
            dZ = dU @ self.weights[i - 1]
        return grads

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "mlp_model",
            "widths": list(self.widths),
            "activation": "tanh",
            "weights": self.flat_parameters().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        if data.get("kind") != "mlp_model":
            raise ValueError("not a model record")
        if data.get("activation", "tanh") != "tanh":
            raise ValueError(f"unsupported activation {data.get('activation')!r}")
        model = cls(data["widths"])
        model.set_flat_parameters(np.asarray(data["weights"], dtype=float))
        return model
