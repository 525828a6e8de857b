from .config import ScanConfig
from .stimulation import StimulationProfile, natural_trace, stimulate_neuron, stimulation_grid
from .candidates import CandidateNeuron, find_candidates, recheck_candidate
from .masks import TrojanMask, filter_by_reasr, load_mask, measure_reasr, reverse_engineer_mask, save_mask
from .scan import ScanResult, scan, scan_report_dict

__all__ = [
    "ScanConfig",
    "StimulationProfile",
    "natural_trace",
    "stimulation_grid",
    "stimulate_neuron",
    "CandidateNeuron",
    "find_candidates",
    "recheck_candidate",
    "TrojanMask",
    "reverse_engineer_mask",
    "measure_reasr",
    "filter_by_reasr",
    "save_mask",
    "load_mask",
    "ScanResult",
    "scan",
    "scan_report_dict",
]
