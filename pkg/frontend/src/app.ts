/** Review app wiring: queue pane, context pane, stats/retrain panel, and
 * the keyboard loop (y = secret, n = not secret, u = skip, arrows move).
 *
 * Label submissions are optimistic: the finding leaves the queue at
 * once and is restored with a toast if the API rejects it. Counts are
 * never computed locally; the stats panel always shows the latest
 * /api/stats response.
 */

import { ApiError } from "./api.js";
import type { Api, FindingView, Label, Metrics, Status } from "./api.js";
import { applyFilters, detectorsIn, sortQueue } from "./queue.js";

export interface AppOptions {
  /** Stats poll interval in ms; 0 disables polling (tests). */
  pollMs?: number;
}

export interface App {
  /** Settles after every operation queued so far has finished. */
  idle(): Promise<void>;
  destroy(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function fmt2(value: number | null | undefined): string {
  return value === null || value === undefined ? "n/a" : value.toFixed(2);
}

const SKELETON = `
<header>
  <h1>secretsweep review</h1>
  <div id="banner" hidden><span id="banner-text"></span>
    <button id="banner-retry" type="button">retry</button></div>
</header>
<main>
  <section id="queue-pane">
    <div id="filters">
      <select id="status-filter" title="status">
        <option value="pending">pending</option>
        <option value="labeled">labeled</option>
        <option value="">all</option>
      </select>
      <select id="detector-filter" title="detector"></select>
      <input id="min-score" type="number" min="0" max="1" step="0.05"
             placeholder="min score" title="minimum score">
    </div>
    <ul id="queue"></ul>
  </section>
  <section id="detail-pane">
    <div id="finding-meta"></div>
    <div id="context"></div>
  </section>
  <aside id="stats-pane">
    <h2>labels</h2>
    <dl id="stats">
      <dt>pending</dt><dd id="stat-pending">0</dd>
      <dt>labeled</dt><dd id="stat-labeled">0</dd>
      <dt>secrets</dt><dd id="stat-secrets">0</dd>
      <dt>not secrets</dt><dd id="stat-not-secrets">0</dd>
    </dl>
    <div id="current-metrics"></div>
    <button id="retrain" type="button">retrain</button>
    <div id="retrain-result"></div>
    <p id="help">y secret · n not secret · u skip · arrows move</p>
  </aside>
</main>
<div id="toast" hidden></div>
`;

export function initApp(root: HTMLElement, api: Api, opts: AppOptions = {}): App {
  root.innerHTML = SKELETON;
  const doc = root.ownerDocument;
  const $ = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  };

  const queueList = $<HTMLUListElement>("queue");
  const metaPane = $<HTMLDivElement>("finding-meta");
  const contextPane = $<HTMLDivElement>("context");
  const statusFilter = $<HTMLSelectElement>("status-filter");
  const detectorFilter = $<HTMLSelectElement>("detector-filter");
  const minScoreInput = $<HTMLInputElement>("min-score");
  const banner = $<HTMLDivElement>("banner");
  const bannerText = $<HTMLSpanElement>("banner-text");
  const retrainButton = $<HTMLButtonElement>("retrain");
  const retrainResult = $<HTMLDivElement>("retrain-result");
  const toast = $<HTMLDivElement>("toast");

  const state = {
    all: [] as FindingView[],
    selected: 0,
    status: "pending" as Status,
    detector: "",
    minScore: null as number | null,
  };

  let chain: Promise<void> = Promise.resolve();
  function enqueue(op: () => Promise<void>): void {
    chain = chain.then(op, op);
  }

  let toastTimer: ReturnType<typeof setTimeout> | null = null;
  function showToast(message: string): void {
    toast.textContent = message;
    toast.hidden = false;
    if (toastTimer !== null) clearTimeout(toastTimer);
    toastTimer = setTimeout(() => {
      toast.hidden = true;
    }, 4000);
  }

  function currentQueue(): FindingView[] {
    return applyFilters(state.all, {
      detector: state.detector,
      minScore: state.minScore,
    });
  }

  function clampSelection(queue: FindingView[]): void {
    if (queue.length === 0) {
      state.selected = -1;
    } else {
      state.selected = Math.max(0, Math.min(state.selected, queue.length - 1));
    }
  }

  function renderDetectorOptions(): void {
    const names = detectorsIn(state.all);
    detectorFilter.replaceChildren(
      el("option", { value: "" }, "all detectors"),
      ...names.map((name) => el("option", { value: name }, name)),
    );
    detectorFilter.value = names.includes(state.detector) ? state.detector : "";
    state.detector = detectorFilter.value;
  }

  function renderQueue(): void {
    const queue = currentQueue();
    clampSelection(queue);
    if (queue.length === 0) {
      queueList.replaceChildren(el("li", { class: "empty" }, "queue empty"));
    } else {
      queueList.replaceChildren(
        ...queue.map((finding, index) => {
          const item = el("li", { "data-fid": finding.finding_id });
          if (index === state.selected) item.classList.add("selected");
          item.append(
            el("span", { class: "badge" }, finding.detector),
            el("span", { class: "loc" },
               `${finding.path}:${finding.line_number}`),
            el("span", { class: "score" }, fmt2(finding.score)),
          );
          item.addEventListener("click", () => {
            state.selected = index;
            renderQueue();
          });
          return item;
        }),
      );
      queueList
        .querySelector(".selected")
        ?.scrollIntoView?.({ block: "nearest" });
    }
    renderDetail(queue[state.selected] ?? null);
  }

  function renderDetail(finding: FindingView | null): void {
    if (finding === null) {
      metaPane.textContent = "";
      contextPane.textContent = "";
      return;
    }
    metaPane.replaceChildren(
      el("span", { class: "loc" }, `${finding.path}:${finding.line_number}`),
      el("span", { class: "badge" }, finding.detector),
      el("span", {}, `${finding.entropy_bits.toFixed(2)} bits`),
      el("span", {}, `score ${fmt2(finding.score)}`),
      el("span", { class: `label-${finding.label}` }, finding.label),
    );
    contextPane.replaceChildren(
      ...finding.context.map(([number, text]) => {
        const line = el("div", { class: "ctx-line" });
        if (number === finding.line_number) line.classList.add("hit");
        line.append(
          el("span", { class: "ln" }, String(number)),
          el("span", { class: "text" }, text),
        );
        return line;
      }),
    );
    if (finding.context.length === 0) {
      contextPane.replaceChildren(
        el("div", { class: "ctx-missing" }, "file not available"),
      );
    }
  }

  function renderStats(stats: {
    pending: number;
    labeled: number;
    secrets: number;
    not_secrets: number;
    current_metrics: Metrics | null;
  }): void {
    $("stat-pending").textContent = String(stats.pending);
    $("stat-labeled").textContent = String(stats.labeled);
    $("stat-secrets").textContent = String(stats.secrets);
    $("stat-not-secrets").textContent = String(stats.not_secrets);
    const metrics = stats.current_metrics;
    $("current-metrics").textContent = metrics
      ? `precision ${fmt2(metrics.precision)} · recall ${fmt2(metrics.recall)}` +
        ` · f1 ${fmt2(metrics.f1)}`
      : "no model metrics yet";
  }

  function metricsRow(name: string, metrics: Metrics | null): HTMLTableRowElement {
    const row = el("tr");
    row.append(
      el("td", {}, name),
      el("td", {}, metrics ? fmt2(metrics.precision) : "n/a"),
      el("td", {}, metrics ? fmt2(metrics.recall) : "n/a"),
      el("td", {}, metrics ? fmt2(metrics.f1) : "n/a"),
    );
    return row;
  }

  function renderRetrainTable(before: Metrics | null, after: Metrics): void {
    const table = el("table", { class: "metrics" });
    const head = el("tr");
    head.append(el("th", {}, "model"), el("th", {}, "precision"),
                el("th", {}, "recall"), el("th", {}, "f1"));
    const thead = el("thead");
    thead.append(head);
    const tbody = el("tbody");
    tbody.append(metricsRow("before", before), metricsRow("after", after));
    table.append(thead, tbody);
    retrainResult.replaceChildren(table);
    retrainResult.className = "";
  }

  function renderRetrainGuidance(message: string): void {
    retrainResult.replaceChildren(
      el("p", {}, message),
      el("p", {}, "label at least one finding as secret and one as " +
                  "not secret, then retrain again"),
    );
    retrainResult.className = "guidance";
  }

  async function refreshStats(): Promise<void> {
    renderStats(await api.fetchStats());
  }

  async function refreshFindings(): Promise<void> {
    state.all = sortQueue(await api.fetchAllFindings(state.status));
    renderDetectorOptions();
    renderQueue();
  }

  async function refreshAll(): Promise<void> {
    try {
      await refreshFindings();
      await refreshStats();
      banner.hidden = true;
    } catch (error) {
      bannerText.textContent =
        error instanceof Error ? error.message : "load failed";
      banner.hidden = false;
    }
  }

  function submitLabel(label: Label): void {
    const queue = currentQueue();
    const finding = queue[state.selected];
    if (!finding) return;
    if (state.status === "pending") {
      // Optimistic: drop it now, restore on rejection.
      state.all = state.all.filter((f) => f !== finding);
      renderQueue();
      enqueue(async () => {
        try {
          await api.postLabel(finding.finding_id, label);
        } catch (error) {
          state.all = sortQueue([...state.all, finding]);
          state.selected = currentQueue().indexOf(finding);
          renderQueue();
          showToast(error instanceof Error ? error.message : "label failed");
          return;
        }
        try {
          await refreshStats();
        } catch (error) {
          showToast(error instanceof Error ? error.message : "stats failed");
        }
      });
    } else {
      enqueue(async () => {
        try {
          await api.postLabel(finding.finding_id, label);
          await refreshFindings();
          await refreshStats();
        } catch (error) {
          showToast(error instanceof Error ? error.message : "label failed");
        }
      });
    }
  }

  function moveSelection(delta: number): void {
    const queue = currentQueue();
    if (queue.length === 0) return;
    state.selected = Math.max(0, Math.min(state.selected + delta,
                                          queue.length - 1));
    renderQueue();
  }

  function onKeydown(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && ["INPUT", "SELECT", "TEXTAREA"].includes(target.tagName)) {
      return;
    }
    switch (event.key) {
      case "y":
        submitLabel("secret");
        break;
      case "n":
        submitLabel("not_secret");
        break;
      case "u":
      case "ArrowDown":
      case "j":
        moveSelection(1);
        break;
      case "ArrowUp":
      case "k":
        moveSelection(-1);
        break;
      default:
        return;
    }
    event.preventDefault();
  }

  statusFilter.addEventListener("change", () => {
    state.status = statusFilter.value as Status;
    state.selected = 0;
    enqueue(refreshAll);
  });
  detectorFilter.addEventListener("change", () => {
    state.detector = detectorFilter.value;
    state.selected = 0;
    renderQueue();
  });
  minScoreInput.addEventListener("input", () => {
    const raw = minScoreInput.value.trim();
    state.minScore = raw === "" ? null : Number(raw);
    if (Number.isNaN(state.minScore)) state.minScore = null;
    state.selected = 0;
    renderQueue();
  });
  $("banner-retry").addEventListener("click", () => enqueue(refreshAll));
  retrainButton.addEventListener("click", () => {
    retrainButton.disabled = true;
    enqueue(async () => {
      try {
        const result = await api.postRetrain();
        renderRetrainTable(result.before, result.after);
        // New model, new scores: the queue order may have changed.
        await refreshFindings();
        await refreshStats();
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          renderRetrainGuidance(error.message);
        } else {
          retrainResult.replaceChildren(
            el("p", {}, error instanceof Error ? error.message
                                               : "retrain failed"),
          );
          retrainResult.className = "error";
        }
      } finally {
        retrainButton.disabled = false;
      }
    });
  });

  doc.addEventListener("keydown", onKeydown);
  let pollTimer: ReturnType<typeof setInterval> | null = null;
  const pollMs = opts.pollMs ?? 5000;
  if (pollMs > 0) {
    pollTimer = setInterval(() => enqueue(refreshStats), pollMs);
  }
  enqueue(refreshAll);

  return {
    idle: () => chain,
    destroy: () => {
      doc.removeEventListener("keydown", onKeydown);
      if (pollTimer !== null) clearInterval(pollTimer);
      if (toastTimer !== null) clearTimeout(toastTimer);
    },
  };
}
