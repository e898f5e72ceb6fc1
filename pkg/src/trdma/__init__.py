"""Time-reversal division multiple access: TR, iterative TR and (R)ZF precoders
on synthetic Rayleigh multipath channels."""

from .channel import ChannelParams, ChannelSet, default_tap_count, generate, load, save, trial_seed
from .errors import (
    ConditioningError,
    DegenerateChannelError,
    DimensionError,
    FileFormatError,
    NumericalError,
    ParameterError,
    TrdmaError,
    TruncatedFileError,
)
from .itr import ItrConfig, ItrTrace, argmax_deviation, deviation_map, itr_precode, itr_precode_all
from .linksim import (
    EquivalentChannel,
    SymbolFrame,
    equivalent_channel,
    random_frame,
    receive,
    sample_grid,
    transmit_signal,
)
from .metrics import MetricsReport, complexity, compute_metrics, mean_db, to_db
from .rzf import RzfConfig, rzf_precode, solve_regularized
from .trcore import CorrelationTable, PrecodeFilter, correlate, finalize_energy, tr_atom, tr_filter, tr_precode

__version__ = "0.1.0"
