"""From-scratch dense and LSTM networks trained with RMSprop."""

from .experiments import (REGIMES, MlpExperimentResult, RegimeResult, SupervisedSet,
                          run_lstm_regime, run_mlp_experiment, to_supervised)
from .layers import DenseLayer, LstmCell, lstm_backward, lstm_forward, lstm_gates, lstm_step
from .network import LstmNetwork, Mlp, load_weights, save_weights
from .training import (EarlyStopping, RMSprop, TrainConfig, TrainHistory, TrainingDivergedError,
                       mae, mse, predict_stream, train_network)

__all__ = [
    "REGIMES", "MlpExperimentResult", "RegimeResult", "SupervisedSet", "run_lstm_regime",
    "run_mlp_experiment", "to_supervised", "DenseLayer", "LstmCell", "lstm_backward",
    "lstm_forward", "lstm_gates", "lstm_step", "LstmNetwork", "Mlp", "load_weights",
    "save_weights", "EarlyStopping", "RMSprop", "TrainConfig", "TrainHistory",
    "TrainingDivergedError", "mae", "mse", "predict_stream", "train_network",
]
