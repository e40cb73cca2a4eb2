"""File formats: MDP specs, demonstrations, train configs, CSV/JSON reports.

The MDP and demonstration formats are JSON documents validated against the
schemas in `schemas/` (mirrored by the MDP_SCHEMA / DEMOS_SCHEMA dicts
here).  Every CSV report starts with one metadata comment line carrying the
tool version, seed, and a hash of the generating configuration, followed by
a header row.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Optional

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .mdp import DemonstrationSet, Mdp, Trajectory

MDP_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Finite MDP specification",
    "type": "object",
    "required": ["n_states", "n_actions", "transitions", "initial", "terminals",
                 "gamma"],
    "additionalProperties": False,
    "properties": {
        "n_states": {"type": "integer", "minimum": 1},
        "n_actions": {"type": "integer", "minimum": 1},
        "transitions": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "number", "minimum": 0.0, "maximum": 1.0},
                ],
                "minItems": 4, "maxItems": 4,
            },
            "description": "sparse [state, action, next_state, probability] rows",
        },
        "initial": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"type": "integer", "minimum": 0},
                    {"type": "number", "minimum": 0.0, "maximum": 1.0},
                ],
                "minItems": 2, "maxItems": 2,
            },
            "description": "sparse [state, probability] rows",
        },
        "terminals": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "gamma": {"type": "number", "exclusiveMinimum": 0.0, "maximum": 1.0},
        "horizon": {"type": ["integer", "null"], "minimum": 1},
        "features": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            },
            "description": "named state-action tables (S rows of A numbers)",
        },
        "available_actions": {
            "type": ["array", "null"],
            "items": {"type": "array", "items": {"type": "integer"},
                      "minItems": 1},
        },
    },
}

DEMOS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Demonstration set",
    "type": "object",
    "required": ["trajectories"],
    "additionalProperties": False,
    "properties": {
        "trajectories": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["steps", "final_state"],
                "additionalProperties": False,
                "properties": {
                    "steps": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "prefixItems": [{"type": "integer", "minimum": 0},
                                            {"type": "integer", "minimum": 0}],
                            "minItems": 2, "maxItems": 2,
                        },
                    },
                    "final_state": {"type": "integer", "minimum": 0},
                },
            },
        },
        "weights": {"type": ["array", "null"],
                    "items": {"type": "number", "minimum": 0.0}},
    },
}

TRAIN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Training configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "variant": {"enum": ["plain", "gail", "vail"]},
        "n_iters": {"type": "integer", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "rollout_len": {"type": "integer", "minimum": 1},
        "ppo_clip": {"type": "number"},
        "sigma": {"type": "number"},
        "surrogate_clip": {"type": "number"},
        "lambda0": {"type": "number", "minimum": 0.0},
        "mu": {"type": "number"},
        "delta": {"type": ["number", "null"]},
        "lambda_floor": {"type": "boolean"},
        "beta": {"type": "number"},
        "i_c": {"type": "number"},
        "lr_policy": {"type": "number"},
        "lr_reward": {"type": "number"},
        "average_rewards": {"type": "boolean"},
        "windowed_max_len": {"type": ["integer", "null"], "minimum": 1},
        "penalty_form": {"enum": ["auto", "plain", "hinge"]},
    },
}


def _validate(doc: dict, schema: dict, what: str):
    errors = sorted(Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.path) or "<root>"
        raise ValueError(f"invalid {what} at {where}: {first.message}")


def load_mdp(path) -> tuple:
    """Load (Mdp, named feature tables) from a JSON spec file."""
    doc = json.loads(Path(path).read_text())
    _validate(doc, MDP_SCHEMA, "MDP spec")
    S, A = doc["n_states"], doc["n_actions"]
    T = np.zeros((S, A, S))
    for s, a, s2, p in doc["transitions"]:
        T[s, a, s2] = p
    d0 = np.zeros(S)
    for s, p in doc["initial"]:
        d0[s] = p
    avail = doc.get("available_actions")
    mdp = Mdp(n_states=S, n_actions=A, transition=T, initial=d0,
              terminals=frozenset(doc["terminals"]), gamma=doc["gamma"],
              horizon=doc.get("horizon"),
              available_actions=tuple(tuple(x) for x in avail) if avail else None)
    features = {name: np.asarray(tab, dtype=float)
                for name, tab in doc.get("features", {}).items()}
    return mdp, features


def save_mdp(mdp: Mdp, path, features: Optional[dict] = None):
    doc = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "transitions": [[s, a, s2, float(mdp.transition[s, a, s2])]
                        for s in range(mdp.n_states)
                        for a in range(mdp.n_actions)
                        for s2 in range(mdp.n_states)
                        if mdp.transition[s, a, s2] > 0.0],
        "initial": [[s, float(p)] for s, p in enumerate(mdp.initial) if p > 0.0],
        "terminals": sorted(mdp.terminals),
        "gamma": mdp.gamma,
    }
    if mdp.horizon is not None:
        doc["horizon"] = mdp.horizon
    if mdp.available_actions is not None:
        doc["available_actions"] = [list(acts) for acts in mdp.available_actions]
    if features:
        doc["features"] = {k: np.asarray(v).tolist() for k, v in features.items()}
    Path(path).write_text(json.dumps(doc, indent=2))


def load_demonstrations(path) -> DemonstrationSet:
    doc = json.loads(Path(path).read_text())
    _validate(doc, DEMOS_SCHEMA, "demonstration set")
    trajs = tuple(
        Trajectory(tuple((s, a) for s, a in item["steps"]), item["final_state"])
        for item in doc["trajectories"])
    weights = doc.get("weights")
    return DemonstrationSet(trajs, np.asarray(weights, dtype=float)
                            if weights is not None else None)


def save_demonstrations(demos: DemonstrationSet, path):
    doc = {"trajectories": [
        {"steps": [[s, a] for s, a in tau.steps],
         "final_state": tau.final_state}
        for tau in demos.trajectories]}
    if demos.weights is not None:
        doc["weights"] = demos.weights.tolist()
    Path(path).write_text(json.dumps(doc, indent=2))


def load_train_config(path) -> dict:
    doc = json.loads(Path(path).read_text())
    _validate(doc, TRAIN_CONFIG_SCHEMA, "train config")
    return doc


def config_hash(obj) -> str:
    canon = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def write_csv(path, header, rows, seed=None, config=None):
    """CSV with a metadata comment line, a header row, then data rows."""
    meta = f"# pagar-lab {__version__} seed={seed} config={config_hash(config or {})}"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(meta + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def read_csv(path):
    """(metadata line, header, rows) of a report CSV."""
    lines = Path(path).read_text().splitlines()
    meta = lines[0]
    reader = csv.reader(lines[1:])
    header = next(reader)
    return meta, header, [row for row in reader]


def write_json(path, payload, seed=None, config=None):
    doc = {"tool": f"pagar-lab {__version__}", "seed": seed,
           "config_hash": config_hash(config or {})}
    doc.update(payload)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, default=_json_default))
    return doc


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, frozenset):
        return sorted(x)
    return str(x)


def dump_schemas(directory):
    """Write the JSON schema files that document the on-disk formats."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "mdp.schema.json").write_text(json.dumps(MDP_SCHEMA, indent=2))
    (directory / "demonstrations.schema.json").write_text(
        json.dumps(DEMOS_SCHEMA, indent=2))
    (directory / "train_config.schema.json").write_text(
        json.dumps(TRAIN_CONFIG_SCHEMA, indent=2))
