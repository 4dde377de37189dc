"""Trace reconstruction for labeled trees under deletion channels."""

from .channel import EMPTY, LP, TED, ChannelConfig, DeletionChannel, censor, delete_lp, delete_ted, sample_trace
from .exceptions import (
    EmptyBucket,
    NoCaterpillarTrace,
    NoStableTraces,
    NoUsableTraces,
    PerpEncountered,
    ReconstructionTerminated,
)
from .lp_recon import LPLargeReconstructor, LPSmallReconstructor, reconstruct_lp_large, reconstruct_lp_small
from .spider_recon import (
    SpiderLargeDepthReconstructor,
    SpiderMeanBasedReconstructor,
    SpiderRowReconstructor,
    best_match,
    expected_trace_mean,
)
from .string_recon import ExhaustiveStringReconstructor, censored_reconstruct, exhaustive_best_match_string
from .ted_recon import TEDLargeReconstructor, TEDSmallReconstructor, reconstruct_ted_large, reconstruct_ted_small
from .trees import Node, TreeShape, build_complete_kary, build_spider, build_tree

__version__ = "0.1.0"
