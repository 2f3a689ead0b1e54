"""Dataset files, config documents and model bundles.

Dataset files are UTF-8 CSV with a header row.  Reserved columns are
``label`` (required), ``domain``, ``id`` and ``synthetic``; every other
column is a numeric feature, in header order.

Bundles are canonical JSON (sorted keys, shortest round-trip floats) wrapped
with a format tag, a version and a SHA-256 checksum of the payload, so a
truncated or edited file is detected on load.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .cascade import CascadeTree
from .classifiers import ClassifierSpec, load_classifier
from .data import LabeledDataset
from .errors import ConfigError, IntegrityError, ParseError, SchemaError
from .metrics import EigScore
from .pipeline import EksaiiModel

RESERVED = ("label", "domain", "id", "synthetic")
BUNDLE_FORMAT = "eksaii-bundle"
BUNDLE_VERSION = 1
_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def natural_key(s: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", s)]


def load_dataset(path, class_set=None) -> LabeledDataset:
    """Parse a dataset file; row order is preserved and ids default to the row index.

    ``class_set`` fixes the class order; by default the observed labels are
    sorted naturally (``grade2`` before ``grade10``).
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise SchemaError(f"{path}: missing 'label' column")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names")
    feat_cols = [i for i, h in enumerate(header) if h not in RESERVED]
    col = {h: i for i, h in enumerate(header)}
    X, y, ids, domains, synthetic = [], [], [], [], []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        vals = []
        for i in feat_cols:
            cell = row[i].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {r}, column {header[i]!r}: non-numeric value {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: row {r}, column {header[i]!r}: non-finite value {cell!r}")
            vals.append(v)
        label = row[col["label"]].strip()
        if not label:
            raise ParseError(f"{path}: row {r}: empty label")
        X.append(vals)
        y.append(label)
        ids.append(row[col["id"]].strip() if "id" in col else str(len(ids)))
        domains.append((row[col["domain"]].strip() or None) if "domain" in col else None)
        if "synthetic" in col:
            flag = row[col["synthetic"]].strip().lower()
            if flag not in _TRUE | _FALSE:
                raise ParseError(f"{path}: row {r}, column 'synthetic': not a boolean {flag!r}")
            synthetic.append(flag in _TRUE)
        else:
            synthetic.append(False)
    if not X:
        raise SchemaError(f"{path}: no data rows")
    if class_set is None:
        class_set = sorted(set(y), key=natural_key)
    return LabeledDataset(
        X=np.asarray(X, dtype=float).reshape(len(X), len(feat_cols)),
        y=y,
        class_set=class_set,
        feature_names=[header[i] for i in feat_cols],
        ids=ids,
        domains=domains,
        synthetic=synthetic,
    )


def save_dataset(data: LabeledDataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.feature_names) + ["label", "domain", "id", "synthetic"])
        for i in range(len(data)):
            w.writerow([repr(float(v)) for v in data.X[i]] + [
                data.y[i],
                data.domains[i] if data.domains[i] is not None else "",
                data.ids[i],
                "true" if data.synthetic[i] else "false",
            ])


def file_digest(path) -> str:
    """SHA-256 of the file with line endings normalised and trailing blanks dropped."""
    text = Path(path).read_bytes().decode("utf-8", errors="replace")
    canonical = "\n".join(line.rstrip() for line in text.splitlines()).strip("\n") + "\n"
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path) -> dict:
    """Read a YAML (or JSON) config document into a dict."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid config document ({exc})") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return doc


def pool_specs_from_config(doc: Mapping) -> list:
    entries = doc.get("classifiers")
    if not entries:
        raise ConfigError("pool config needs a nonempty 'classifiers' list")
    return [ClassifierSpec.from_config(e) for e in entries]


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def bundle_payload(model: EksaiiModel) -> dict:
    if not model.pool:
        raise ConfigError("refusing to save a bundle with an empty pool")
    return {
        "pool": [m.dump() for m in model.pool],
        "tree": model.tree.to_dict(),
        "root_scores": [[s.classifier_id, s.eig] for s in model.root_scores],
        "class_set": list(model.class_set),
        "feature_names": list(model.feature_names),
        "cascade_config": model.cfg.to_config(),
        "provenance": model.provenance,
    }


def dumps_bundle(model: EksaiiModel) -> str:
    payload = bundle_payload(model)
    body = _canonical(payload)
    return _canonical({
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "checksum": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "payload": payload,
    }) + "\n"


def save_model(model: EksaiiModel, path) -> None:
    Path(path).write_text(dumps_bundle(model), encoding="utf-8")


def loads_bundle(text: str) -> EksaiiModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"bundle is not valid JSON ({exc.msg})") from None
    if not isinstance(doc, dict) or doc.get("format") != BUNDLE_FORMAT:
        raise IntegrityError("not a model bundle")
    if doc.get("version") != BUNDLE_VERSION:
        raise IntegrityError(f"unsupported bundle version {doc.get('version')!r}")
    payload = doc.get("payload")
    if payload is None or hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest() != doc.get("checksum"):
        raise IntegrityError("bundle checksum mismatch")
    try:
        pool = [load_classifier(d) for d in payload["pool"]]
        tree = CascadeTree.from_dict(payload["tree"], pool)
        root_scores = [EigScore(i, e) for i, e in payload["root_scores"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"malformed bundle payload ({exc})") from None
    if not pool:
        raise IntegrityError("bundle has an empty pool")
    return EksaiiModel(pool, tree, root_scores, payload.get("provenance"))


def load_model(path) -> EksaiiModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IntegrityError(f"{path}: no such bundle") from None
    except UnicodeDecodeError:
        raise IntegrityError(f"{path}: bundle is not UTF-8 text") from None
    return loads_bundle(text)
