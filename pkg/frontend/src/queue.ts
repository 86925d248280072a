/** Pure queue ordering and filtering, kept free of DOM so it can be
 * tested directly. Review order is score-descending with unscored
 * findings last; ties fall back to path and line number so the order is
 * total and stable across refreshes. */

import type { FindingView } from "./api.js";

export function compareFindings(a: FindingView, b: FindingView): number {
  if (a.score === null && b.score !== null) return 1;
  if (a.score !== null && b.score === null) return -1;
  if (a.score !== null && b.score !== null && a.score !== b.score) {
    return b.score - a.score;
  }
  if (a.path !== b.path) return a.path < b.path ? -1 : 1;
  return a.line_number - b.line_number;
}

export function sortQueue(findings: FindingView[]): FindingView[] {
  return [...findings].sort(compareFindings);
}

export interface Filters {
  detector: string;
  minScore: number | null;
}

export function applyFilters(
  findings: FindingView[],
  filters: Filters,
): FindingView[] {
  return findings.filter((f) => {
    if (filters.detector && f.detector !== filters.detector) return false;
    if (filters.minScore !== null) {
      if (f.score === null || f.score < filters.minScore) return false;
    }
    return true;
  });
}

export function detectorsIn(findings: FindingView[]): string[] {
  return [...new Set(findings.map((f) => f.detector))].sort();
}
