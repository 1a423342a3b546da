"""File formats: datasets (CSV), chains (CSV + YAML sidecar), parameters and
configs (YAML).

Machine-readable numbers are written with full round-trip precision
(``repr``); human-facing tables live in the CLI and round to three decimals.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .model import Dataset, GroupParams, ModelSpec, SubjectSeries
from .sampler import Chain


class ConfigError(ValueError):
    """Invalid or missing configuration value; message names the field."""


class DataFormatError(ValueError):
    """Malformed data file; message carries the offending line number."""


# ---------------------------------------------------------------------------
# Datasets


def write_dataset_csv(path, dataset: Dataset) -> None:
    """Columns: subject, occasion, state_true, dep_1..dep_k (header row).

    ``state_true`` is left empty when a series has no annotations.
    """
    path = Path(path)
    n_dep = dataset.n_dep
    header = "subject,occasion,state_true," + ",".join(
        f"dep_{k + 1}" for k in range(n_dep))
    lines = [header]
    for idx, s in enumerate(dataset.subjects, start=1):
        states = s.true_states
        for t in range(s.n_occasions):
            st = "" if states is None else str(int(states[t]))
            vals = ",".join(repr(float(v)) for v in s.obs[t])
            lines.append(f"{idx},{t + 1},{st},{vals}")
    path.write_text("\n".join(lines) + "\n")


def read_dataset_csv(path) -> Dataset:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:3] != ["subject", "occasion", "state_true"]:
        raise DataFormatError(f"{path}:1: expected header "
                              "'subject,occasion,state_true,dep_1,...'")
    n_dep = len(header) - 3
    if n_dep < 1:
        raise DataFormatError(f"{path}:1: no dependent-variable columns")
    per_subject: dict[int, list[tuple[int, str, list[float]]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataFormatError(f"{path}:{lineno}: expected "
                                  f"{len(header)} fields, got {len(parts)}")
        try:
            subj = int(parts[0])
            occ = int(parts[1])
            obs = [float(v) for v in parts[3:]]
        except ValueError as e:
            raise DataFormatError(f"{path}:{lineno}: {e}") from None
        per_subject.setdefault(subj, []).append((occ, parts[2], obs))
    series = []
    for subj in sorted(per_subject):
        rows = sorted(per_subject[subj])
        obs = np.array([r[2] for r in rows])
        state_fields = [r[1] for r in rows]
        if all(f == "" for f in state_fields):
            states = None
        elif any(f == "" for f in state_fields):
            raise DataFormatError(f"{path}: subject {subj} has a mix of "
                                  "annotated and missing states")
        else:
            states = np.array([int(f) for f in state_fields])
        series.append(SubjectSeries(obs=obs, true_states=states))
    return Dataset(subjects=tuple(series))


# ---------------------------------------------------------------------------
# Group parameters and truth sidecars


def group_params_to_dict(group: GroupParams) -> dict:
    return {
        "n_states": group.m,
        "n_dep": group.n_dep,
        "emiss_mean": group.emiss_mean.tolist(),
        "emiss_rand_var": group.emiss_rand_var.tolist(),
        "emiss_resid_var": group.emiss_resid_var.tolist(),
        "tpm_intercepts": group.tpm_intercepts.tolist(),
        "tpm_rand_var": group.tpm_rand_var.tolist(),
    }


def group_params_from_dict(d: dict) -> GroupParams:
    try:
        return GroupParams(
            emiss_mean=np.array(d["emiss_mean"], dtype=float),
            emiss_rand_var=np.array(d["emiss_rand_var"], dtype=float),
            emiss_resid_var=np.array(d["emiss_resid_var"], dtype=float),
            tpm_intercepts=np.array(d["tpm_intercepts"], dtype=float),
            tpm_rand_var=np.array(d["tpm_rand_var"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"group parameters missing field {e.args[0]!r}") from None


def write_group_params(path, group: GroupParams) -> None:
    Path(path).write_text(yaml.safe_dump(group_params_to_dict(group),
                                         sort_keys=True))


def read_group_params(path) -> GroupParams:
    return group_params_from_dict(yaml.safe_load(Path(path).read_text()))


def write_truth_sidecar(path, scenario, subject_params, iteration: int) -> None:
    """True generating parameters of one simulated dataset."""
    payload = {
        "scenario_id": scenario.id,
        "iteration": iteration,
        "seed": scenario.seed,
        "n_subjects": scenario.n_subjects,
        "n_occasions": scenario.n_occasions,
        "zeta": float(scenario.zeta),
        "q_var": float(scenario.q_var),
        "initial_distribution": ("stationary" if scenario.delta is None
                                 else scenario.delta.delta.tolist()),
        "group": group_params_to_dict(scenario.group),
        "subjects": [
            {"subj_mean": sp.subj_mean.tolist(), "tpm": sp.tpm.tolist()}
            for sp in subject_params
        ],
    }
    Path(path).write_text(yaml.safe_dump(payload, sort_keys=True))


# ---------------------------------------------------------------------------
# Chains


def _group_column_names(spec: ModelSpec) -> list[str]:
    names = []
    for stem in ("emiss_mean", "emiss_varmu", "emiss_var"):
        names += [f"{stem}.{k + 1}.{s + 1}" for k in range(spec.n_dep)
                  for s in range(spec.m)]
    for stem in ("alpha", "psi_var"):
        names += [f"{stem}.{i + 1}.{j + 2}" for i in range(spec.m)
                  for j in range(spec.m - 1)]
    return names


def write_chain_csv(path, chain: Chain) -> None:
    """One row per stored draw of the group-level parameters plus loglik.

    A YAML sidecar (same path with '.meta.yaml' appended) records the model
    dimensions, sampler configuration, seed and acceptance rates.
    """
    path = Path(path)
    names = _group_column_names(chain.spec)
    cols = [chain.parameter(n) for n in names] + [chain.loglik]
    lines = [",".join(names + ["loglik"])]
    mat = np.column_stack(cols)
    for row in mat:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    meta = dict(chain.meta)
    meta.update({"m": chain.spec.m, "n_dep": chain.spec.n_dep,
                 "n_draws": chain.n_draws})
    if chain.spec.state_labels:
        meta["state_labels"] = list(chain.spec.state_labels)
    if chain.spec.dep_labels:
        meta["dep_labels"] = list(chain.spec.dep_labels)
    Path(str(path) + ".meta.yaml").write_text(yaml.safe_dump(meta, sort_keys=True))


def read_chain_csv(path) -> Chain:
    """Load a stored chain. Subject-level draws are not persisted, so the
    returned chain carries empty subject axes."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    names = lines[0].split(",")
    meta_path = Path(str(path) + ".meta.yaml")
    meta = yaml.safe_load(meta_path.read_text()) if meta_path.exists() else {}
    try:
        data = np.array([[float(v) for v in line.split(",")]
                         for line in lines[1:] if line.strip()])
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from None
    if data.shape[1] != len(names):
        raise DataFormatError(f"{path}: ragged rows")
    cols = {n: data[:, i] for i, n in enumerate(names)}
    m = int(meta.get("m") or max(int(n.split(".")[1]) for n in names
                                 if n.startswith("alpha.")))
    n_dep = int(meta.get("n_dep") or max(int(n.split(".")[1]) for n in names
                                         if n.startswith("emiss_mean.")))
    spec = ModelSpec(m=m, n_dep=n_dep,
                     state_labels=tuple(meta["state_labels"]) if meta.get("state_labels") else None,
                     dep_labels=tuple(meta["dep_labels"]) if meta.get("dep_labels") else None)
    d = data.shape[0]

    def stack(stem, rows, cols_n, off=0):
        out = np.empty((d, rows, cols_n))
        for a in range(rows):
            for b in range(cols_n):
                out[:, a, b] = cols[f"{stem}.{a + 1}.{b + 1 + off}"]
        return out

    return Chain(
        spec=spec,
        emiss_mean=stack("emiss_mean", n_dep, m),
        emiss_varmu=stack("emiss_varmu", n_dep, m),
        emiss_var=stack("emiss_var", n_dep, m),
        tpm_int=stack("alpha", m, m - 1, off=1),
        psi_var=stack("psi_var", m, m - 1, off=1),
        subj_mean=np.empty((d, 0, n_dep, m)),
        subj_int=np.empty((d, 0, m, m - 1)),
        loglik=cols["loglik"],
        accept_rate=np.array(meta.get("accept_rate", [np.nan] * m)),
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Configs


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cfg = yaml.safe_load(path.read_text())
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return cfg


def require(cfg: dict, field: str, kind=None):
    cur = cfg
    for part in field.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(f"missing config field {field!r}")
        cur = cur[part]
    if kind is not None and not isinstance(cur, kind):
        raise ConfigError(f"config field {field!r} has wrong type "
                          f"(expected {kind})")
    return cur


def write_effective_config(out_dir, cfg: dict) -> None:
    Path(out_dir, "effective_config.yaml").write_text(
        yaml.safe_dump(cfg, sort_keys=True))
