"""Dynamic embedding pruning: shrink a model's token embedding matrix to the
vocabulary a dataset actually uses, and scatter learned rows back afterwards."""

import json

from ._core import (
    DepError,
    FrequencyTable,
    HeapsFit,
    ModelConfig,
    Ordering,
    ParamCount,
    RemapTable,
    TokenizedDataset,
    apply_remap,
    build_remap,
    count_params,
    coverage_ratio,
    decode_dataset,
    encode_dataset,
    find_unused_tokens,
    fit_heaps,
    growth_curve,
    growth_curve_at,
    invert_remap,
    load_dataset,
    load_embeddings,
    merge_frequency_tables,
    model_preset,
    model_preset_names,
    pr_all,
    pr_emb,
    prune_embeddings,
    report_json,
    restore_embeddings,
    save_embeddings,
    scan_dataset,
    validate_matrix,
)


def build_report(remap, config, timestamp=None):
    """Savings report for `remap` under `config`, as a dict."""
    return json.loads(report_json(remap, config, timestamp))


__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
