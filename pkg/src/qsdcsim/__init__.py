"""Desk-scale simulator and capacity toolkit for quantum secure direct
communication protocols over lossy, noisy channels."""

from .channel import (
    ChannelParams,
    EveGainModel,
    TransmissionOutcome,
    eve_reception_rate,
    reception_rate,
    transmit,
)
from .dl04 import Dl04Config, MessageCapacityError, SessionTranscript, estimate_dber, run_dl04
from .eavesdrop import EveStrategy, InterceptResend
from .fec import DecodeFailure, FecCode, fec_decode, fec_encode
from .mdi import MdiConfig, run_mdi_dl04
from .qmf import (
    Dl04Transport,
    KeyPool,
    KeyPoolUnderflow,
    QmfSessionConfig,
    QmfSessionError,
    admit_frame,
    distill_key,
    run_qmf_session,
    xor_encrypt,
)
from .quantum import (
    Basis,
    DensityMatrix,
    PauliOp,
    PhotonState,
    apply_pauli,
    bell_measure,
    binary_entropy,
    make_bell,
    measure,
    partial_trace,
    prepare,
    teleport,
    von_neumann_entropy,
)
from .security import (
    CapacityReport,
    DberEstimate,
    HolevoProblem,
    apply_incum,
    holevo_quantity,
    main_capacity,
    max_holevo,
    secrecy_capacity,
    wiretap_capacity_bound,
    wiretap_capacity_zbasis,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "CapacityReport",
    "ChannelParams",
    "DberEstimate",
    "DecodeFailure",
    "DensityMatrix",
    "Dl04Config",
    "Dl04Transport",
    "EveGainModel",
    "EveStrategy",
    "FecCode",
    "HolevoProblem",
    "InterceptResend",
    "KeyPool",
    "KeyPoolUnderflow",
    "MdiConfig",
    "MessageCapacityError",
    "PauliOp",
    "PhotonState",
    "QmfSessionConfig",
    "QmfSessionError",
    "SessionTranscript",
    "TransmissionOutcome",
    "admit_frame",
    "apply_incum",
    "apply_pauli",
    "bell_measure",
    "binary_entropy",
    "distill_key",
    "estimate_dber",
    "eve_reception_rate",
    "fec_decode",
    "fec_encode",
    "holevo_quantity",
    "main_capacity",
    "make_bell",
    "max_holevo",
    "measure",
    "partial_trace",
    "prepare",
    "reception_rate",
    "run_dl04",
    "run_mdi_dl04",
    "run_qmf_session",
    "secrecy_capacity",
    "teleport",
    "transmit",
    "von_neumann_entropy",
    "wiretap_capacity_bound",
    "wiretap_capacity_zbasis",
    "xor_encrypt",
]
