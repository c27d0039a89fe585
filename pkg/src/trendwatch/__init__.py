"""Trend detection and moderator review for questionable-treatment claims.

The package turns a stream of social posts into ranked daily treatment
trends (one-tailed Fisher's exact test over per-day contingency tables),
flags statistically novel clusters, and runs a two-stage human review
workflow over the flags, persisting everything in an append-only event log.
"""

__version__ = "0.1.0"
