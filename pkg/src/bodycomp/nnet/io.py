"""Network model files (see ``bodycomp.container`` for the layout)."""

from ..container import read_container, write_container
from ..preprocess import NormStats
from .model import ArchitectureSpec, NetworkModel, TargetStats

KIND = "multimodal_network"


def save_model(model, path):
    meta = {
        "architecture": model.arch.to_dict(),
        "norm_stats": model.norm_stats.to_dict(),
        "target_stats": model.target_stats.to_dict(),
        "preprocess": model.preprocess,
    }
    write_container(path, KIND, meta, model.params.items())


def load_model(path):
    meta, arrays = read_container(path, KIND)
    model = NetworkModel(
        ArchitectureSpec(**meta["architecture"]),
        arrays,
        NormStats(**meta["norm_stats"]),
        TargetStats(**meta["target_stats"]),
        meta.get("preprocess"),
    )
    model.check()
    return model
