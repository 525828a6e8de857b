from .dataset import BENIGN, POISONED, SPLITS, DatasetBundle, LabeledDataset
from .synth import SynthSpec, generate
from .poison import TrojanSpec, poison, poison_count, stamp_patch, trigger_mask
from .blend import BlendMask, apply_mask
from .io import import_image_folder, load_dataset, save_dataset

__all__ = [
    "LabeledDataset",
    "DatasetBundle",
    "SPLITS",
    "BENIGN",
    "POISONED",
    "SynthSpec",
    "generate",
    "TrojanSpec",
    "poison",
    "poison_count",
    "stamp_patch",
    "trigger_mask",
    "BlendMask",
    "apply_mask",
    "import_image_folder",
    "load_dataset",
    "save_dataset",
]
