"""Secrets detection and remediation toolkit.

Scans file trees and document-platform pages with heuristic detectors,
filters the noisy detections with trainable classifiers (recall-first
thresholding), supports human-in-the-loop relabeling, and rewrites
confirmed code secrets into vault lookups via pattern recipes.
"""

__version__ = "0.1.0"
