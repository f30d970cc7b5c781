#!/usr/bin/env python3
"""
Instance Builder - config sources to numerical objects

Turns the channel, observable and protocol sources of an ExperimentConfig
into KrausChannel, HermitianOperator and FeedbackProtocol instances. Random
sources draw from the trial generator: the channel first, then observables
in name order.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from contracts import (
    RANDOM_CHANNEL_KINDS,
    ChannelSource,
    ExperimentConfig,
    ObservableSource,
    Parameters,
    ProtocolSource,
)
from quantum.channels import KrausChannel, random_channel, standard_channel
from quantum.feedback import ErrorModel, FeedbackProtocol
from quantum.linalg_core import HermitianOperator, random_hermitian
from utils.serialization import (
    load_channel,
    load_protocol,
    matrix_from_entries,
    protocol_from_dict,
)

logger = logging.getLogger(__name__)


@dataclass
class ExperimentInstance:
    """Everything one fixed-instance trial needs."""

    channel: Optional[KrausChannel] = None
    observables: Dict[str, HermitianOperator] = field(default_factory=dict)
    protocol: Optional[FeedbackProtocol] = None


def build_channel(source: ChannelSource, rng: np.random.Generator) -> KrausChannel:
    if source.kind == "file":
        return load_channel(source.path)
    if source.kind == "kraus":
        ops = tuple(matrix_from_entries(op, f"kraus[{k}]") for k, op in enumerate(source.kraus))
        return KrausChannel(ops)
    if source.kind in RANDOM_CHANNEL_KINDS:
        return random_channel(source.kind, rng, **source.params)
    return standard_channel(source.kind, **source.params)


def build_observable(source: ObservableSource, rng: np.random.Generator) -> HermitianOperator:
    if source.matrix is not None:
        return HermitianOperator(matrix_from_entries(source.matrix, "observable"))
    if source.diag is not None:
        return HermitianOperator.from_diagonal(source.diag)
    return random_hermitian(source.random.dim, rng, source.random.scale)


def build_protocol(source: ProtocolSource, parameters: Parameters) -> FeedbackProtocol:
    """
    Load the protocol, then apply the config's alpha and error matrix when set.
    """
    protocol = load_protocol(source.path) if source.path else protocol_from_dict(source.inline)
    updates = {}
    if parameters.alpha is not None:
        updates["param"] = parameters.alpha
    if parameters.error_matrix is not None:
        updates["error_model"] = ErrorModel(np.array(parameters.error_matrix))
    return replace(protocol, **updates) if updates else protocol


def build_instance(config: ExperimentConfig, rng: np.random.Generator) -> ExperimentInstance:
    instance = ExperimentInstance()
    if config.channel is not None:
        instance.channel = build_channel(config.channel, rng)
        logger.debug(f"Built channel {instance.channel!r}")
    for name in sorted(config.observables):
        instance.observables[name] = build_observable(config.observables[name], rng)
    if config.protocol is not None:
        instance.protocol = build_protocol(config.protocol, config.parameters)
    return instance
