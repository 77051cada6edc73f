"""Behavioral simulator of a pulse-coupled VCO reservoir and its learning stack.

The package models a field-programmable fabric of LIF neurons whose
capacitor voltages are coupled through frequency-encoded pulses, read out
by counters instead of an ADC, and trained either closed-loop (FORCE/RLS)
or open-loop (batch least squares), with memory-capacity and NARMA10
benchmarks on top.
"""

__version__ = "0.1.0"

from .benchmarks import (
    CapacityReport,
    DegreeString,
    InputSequenceSpec,
    Metrics,
    Narma10Divergence,
    Narma10Result,
    capacity,
    enumerate_degree_strings,
    gen_input,
    legendre,
    mc_benchmark,
    mc_input_spec,
    mc_target,
    metrics,
    narma10_benchmark,
    narma10_input_spec,
    narma10_target,
    nlmc_benchmark,
    nlmc_capacity,
    nlmc_target,
)
from .config import (
    BitstreamError,
    ConfigTextError,
    ReservoirSpec,
    Violation,
    deserialize,
    random_reservoir,
    read_text_config,
    serialize,
    validate,
    write_text_config,
)
from .estimators import LinearReadout, ReservoirStateEncoder
from .fabric import (
    ConnectionEntry,
    ConnectivityMatrix,
    Fabric,
    FabricState,
    ReservoirConfig,
    input_frequencies,
    weight_to_width,
)
from .force import (
    ForceResult,
    RlsState,
    force_run,
    operation_report,
    predict,
    rls_init,
    rls_step,
)
from .neuron import (
    LinearVcoModel,
    NeuronParams,
    NeuronState,
    apply_pulse,
    leak,
    negative_vco,
    positive_vco,
    vco_frequency,
)
from .openloop import (
    IllConditionedError,
    Recording,
    SplitPolicy,
    lsm_fit,
    predict_series,
    record,
    split,
)
from .readout import (
    CounterPair,
    SampleFrame,
    VoltageEstimate,
    counter_to_freq,
    estimate_vcap,
    measure_counters,
    sample_voltages,
)
