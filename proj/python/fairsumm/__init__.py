"""Fairness and quality evaluation for multi-document news summaries."""

import json

from ._fairsumm import (
    Error,
    anova3,
    entity_coverage,
    normalise_score_csv,
    parse_verdict,
    render_prompt,
    rouge_l,
    rouge_n,
    run_command,
    tournament,
    wasserstein_1d,
    welch_t,
)
from ._fairsumm import cluster_jsonl as _cluster_jsonl


def cluster_articles(articles, time_window_days=3, similarity_threshold=0.3):
    """Groups article dicts into events; returns event dicts."""
    lines = "".join(json.dumps(a) + "\n" for a in articles)
    out = _cluster_jsonl(lines, time_window_days, similarity_threshold)
    return [json.loads(line) for line in out.splitlines() if line]


__all__ = [
    "Error",
    "anova3",
    "cluster_articles",
    "entity_coverage",
    "normalise_score_csv",
    "parse_verdict",
    "render_prompt",
    "rouge_l",
    "rouge_n",
    "run_command",
    "tournament",
    "wasserstein_1d",
    "welch_t",
]
