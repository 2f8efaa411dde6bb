"""Planar honeycomb-code memory benchmarking.

Build boundary-complete honeycomb memory circuits, lower them onto five
circuit-noise models, Monte Carlo sample them with a bit-packed Pauli-frame
simulator, decode with exact minimum-weight perfect matching, and reduce
the statistics to thresholds, lambda factors, and teraquop footprints.
"""

from .builder import ExperimentSpec, build_memory_circuit, detector_plan, observable_path
from .circuit import Circuit, Instruction, Rec, parse_circuit, serialize_circuit, unroll
from .dem import (DetectorErrorModel, ErrorMechanism, MatchingGraph,
                  build_matching_graph, circuit_dem, decompose_graphlike,
                  extract_dem, graphlike_distance, memory_dem,
                  shortest_error_witness, table_distance)
from .decode import Correction, MatchingDecoder, decode_mwpm, exhaustive_oracle, logical_error_count
from .lattice import Edge, Face, Patch, PatchSpec, cut_patch, default_aspect, vertical_squiggle_path
from .noise import NoiseModel, apply_noise, decompose_gates, noisy_memory_circuit
from .paulis import SparsePauli
from .sim import FrameSampler, ShotBatch, dense_oracle, detection_fractions, sample

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Correction", "DetectorErrorModel", "Edge", "ErrorMechanism",
    "ExperimentSpec", "Face", "FrameSampler", "Instruction", "MatchingDecoder",
    "MatchingGraph", "NoiseModel", "Patch", "PatchSpec", "Rec", "ShotBatch",
    "SparsePauli", "apply_noise", "build_matching_graph",
    "build_memory_circuit", "circuit_dem", "cut_patch", "decode_mwpm",
    "decompose_gates", "decompose_graphlike", "default_aspect",
    "dense_oracle", "detection_fractions", "detector_plan", "extract_dem",
    "graphlike_distance", "logical_error_count", "memory_dem",
    "noisy_memory_circuit", "observable_path", "parse_circuit", "sample",
    "serialize_circuit", "shortest_error_witness", "table_distance",
    "unroll", "vertical_squiggle_path",
]
