import numpy as np
import pytest

from avembed.attention import AttentionParams, LstmParams


def planted_lstm(input_dim: int, hidden_dim: int = 4) -> LstmParams:
    """Memoryless LSTM: forget gate shut, input/output gates open, cell
    candidate reads coordinate 0 of the input. Makes the attention score a
    strictly increasing function of x_t[0]."""
    zeros_x = np.zeros((hidden_dim, input_dim))
    zeros_h = np.zeros((hidden_dim, hidden_dim))
    w_xc = np.zeros((hidden_dim, input_dim))
    w_xc[0, 0] = 0.5
    return LstmParams(
        w_x={"input": zeros_x, "forget": zeros_x, "cell": w_xc, "output": zeros_x},
        w_h={g: zeros_h for g in ("input", "forget", "cell", "output")},
        w_c={g: zeros_h for g in ("input", "forget", "output")},
        b={
            "input": np.full(hidden_dim, 10.0),
            "forget": np.full(hidden_dim, -10.0),
            "cell": np.zeros(hidden_dim),
            "output": np.full(hidden_dim, 10.0),
        },
    )


@pytest.fixture
def planted_attention() -> AttentionParams:
    input_dim, hidden_dim = 8, 4
    w_f = np.zeros((1, hidden_dim))
    w_f[0, 0] = 1.0
    return AttentionParams(
        forward_lstm=planted_lstm(input_dim, hidden_dim),
        backward_lstm=planted_lstm(input_dim, hidden_dim),
        w_forward=w_f,
        w_backward=np.zeros((1, hidden_dim)),
        w_out=np.ones(1),
        bias=np.zeros(1),
    )


def random_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmParams:
    gates = ("input", "forget", "cell", "output")
    return LstmParams(
        w_x={g: rng.normal(scale=0.5, size=(hidden_dim, input_dim)) for g in gates},
        w_h={g: rng.normal(scale=0.5, size=(hidden_dim, hidden_dim)) for g in gates},
        w_c={g: rng.normal(scale=0.5, size=(hidden_dim, hidden_dim)) for g in ("input", "forget", "output")},
        b={g: rng.normal(scale=0.5, size=hidden_dim) for g in gates},
    )


def random_attention(input_dim: int, hidden_dim: int, attention_dim: int, rng: np.random.Generator) -> AttentionParams:
    return AttentionParams(
        forward_lstm=random_lstm(input_dim, hidden_dim, rng),
        backward_lstm=random_lstm(input_dim, hidden_dim, rng),
        w_forward=rng.normal(size=(attention_dim, hidden_dim)),
        w_backward=rng.normal(size=(attention_dim, hidden_dim)),
        w_out=rng.normal(size=attention_dim),
        bias=rng.normal(size=attention_dim),
    )
