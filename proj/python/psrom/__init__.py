"""Reduced-order FFR model for coronary intervention planning."""

import json

from ._core import (
    ConvergenceError,
    EnvelopeError,
    Error,
    Surface,
    Tree,
    TreeValidationError,
    alpha,
    build_surface,
    detect_lesions,
    fit_ideal,
    load_surface,
    load_tree,
    load_tree_file,
    solve_oracle,
    synthetic_tree,
)
from ._core import PlannerService as _PlannerService

__all__ = [
    "ConvergenceError",
    "EnvelopeError",
    "Error",
    "Planner",
    "Surface",
    "Tree",
    "TreeValidationError",
    "alpha",
    "build_surface",
    "detect_lesions",
    "fit_ideal",
    "load_surface",
    "load_tree",
    "load_tree_file",
    "solve_oracle",
    "synthetic_tree",
]


class Planner:
    """The HTTP planning handlers, called in-process. Each method returns
    (status, decoded JSON body)."""

    def __init__(self, max_models=32, store_dir=""):
        self._service = _PlannerService(max_models, store_dir)

    @staticmethod
    def _decode(reply):
        status, body = reply
        return status, json.loads(body)

    def create_model(self, tree, boundary_conditions=None):
        doc = json.loads(tree) if isinstance(tree, str) else tree
        if boundary_conditions is not None:
            doc = {"tree": doc, "boundary_conditions": boundary_conditions}
        return self._decode(self._service.create_model(json.dumps(doc)))

    def lesions(self, model_id):
        return self._decode(self._service.list_lesions(model_id))

    def evaluate(self, model_id, intervals, blend_length=None, state=None):
        body = {"intervals": intervals}
        if blend_length is not None:
            body["blend_length"] = blend_length
        if state is not None:
            body["state"] = state
        return self._decode(self._service.evaluate_plan(model_id, json.dumps(body)))

    def traces(self, model_id, path=None):
        return self._decode(self._service.traces(model_id, None if path is None else str(path)))

    def delete(self, model_id):
        return self._decode(self._service.delete_model(model_id))

    @property
    def model_count(self):
        return self._service.model_count
