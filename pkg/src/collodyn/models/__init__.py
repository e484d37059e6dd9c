"""Built-in model systems and a registry for construction by name."""

import json

from .pcc import Pcc2Model
from .rigid import Satellite, SpringMechanism2R, TendonFinger
from .rod import GvsRod, TendonRouting
from .volumetric import VolumetricActuation, bellows_pair

__all__ = [
    "Satellite",
    "SpringMechanism2R",
    "TendonFinger",
    "Pcc2Model",
    "GvsRod",
    "TendonRouting",
    "VolumetricActuation",
    "bellows_pair",
    "MODEL_REGISTRY",
    "make_model",
]


def _make_gvs_reduced(**params):
    return GvsRod.reduced(**params)


def _make_gvs_paper(**params):
    return GvsRod.paper_default(**params)


MODEL_REGISTRY = {
    "satellite": Satellite,
    "spring2r": SpringMechanism2R,
    "finger": TendonFinger,
    "pcc2": Pcc2Model,
    "gvs": _make_gvs_reduced,
    "gvs-paper": _make_gvs_paper,
}


def make_model(name: str, params_path=None, overrides=None):
    """Construct a registered model, optionally from a JSON parameter file.

    The file holds per-model sections keyed by model name; only the
    section matching ``name`` is applied.  ``overrides`` wins over the
    file.
    """
    if name not in MODEL_REGISTRY:
        raise KeyError(f"unknown model {name!r}; known: {sorted(MODEL_REGISTRY)}")
    params = {}
    if params_path is not None:
        with open(params_path) as handle:
            doc = json.load(handle)
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise ValueError(f"parameter section for {name!r} must be an object")
        params.update(section)
    if overrides:
        params.update(overrides)
    for key, value in params.items():
        if isinstance(value, list):
            params[key] = tuple(value)
    return MODEL_REGISTRY[name](**params)
