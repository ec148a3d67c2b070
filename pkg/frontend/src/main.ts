/**
 * DOM wiring for the explorer page.  Pure rendering over the parsed
 * model: pick a store file, toggle decision values, and the
 * specification curve, bucket distribution, and change-stability views
 * recompute from the visible universe set.  Nothing here fits models or
 * mutates the store; the engine's numbers are the only numbers shown.
 */

import {
  bucketCounts,
  changeStability,
  specCurve,
  type CurvePoint,
} from "./aggregate";
import {
  initialFilterState,
  isEmptySelection,
  visibleRecords,
  withFitFailures,
  withHighlight,
  withSelection,
  type FilterState,
} from "./filter";
import {
  parseStoreAsync,
  StoreParseError,
  type MultiverseModel,
} from "./store";

// Same palette as the engine's report figures, in severity order.
const BUCKET_COLORS = ["#2f8f4e", "#e0a43c", "#c43d3d", "#8a8a8a"];
const SVG_NS = "http://www.w3.org/2000/svg";

let model: MultiverseModel | null = null;
let state: FilterState | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`page is missing #${id}`);
  }
  return node;
}

function bucketColor(bucket: string): string {
  const i = model === null ? -1 : model.buckets.indexOf(bucket);
  return i >= 0 && i < BUCKET_COLORS.length ? BUCKET_COLORS[i] : "#555";
}

function setStatus(text: string, isError = false): void {
  const node = byId("status");
  node.textContent = text;
  node.classList.toggle("error", isError);
}

async function loadFile(file: File): Promise<void> {
  setStatus(`reading ${file.name} ...`);
  const text = await file.text();
  try {
    model = await parseStoreAsync(text, 4096, (done, total) =>
      setStatus(`parsing ${file.name}: ${done}/${total} lines`),
    );
  } catch (e) {
    model = null;
    state = null;
    if (e instanceof StoreParseError) {
      setStatus(`${file.name}: ${e.message}`, true);
    } else {
      setStatus(`${file.name}: ${(e as Error).message}`, true);
    }
    byId("explorer").hidden = true;
    return;
  }
  state = initialFilterState(model);
  const h = model.header;
  setStatus(
    `${file.name}: ${h.n_universes} universes, ` +
      `${model.dvNames.length} dependent variables, alpha ${h.alpha}, ` +
      `engine ${h.engine}`,
  );
  byId("explorer").hidden = false;
  renderControls();
  renderViews();
}

function renderControls(): void {
  if (model === null || state === null) {
    return;
  }
  const root = byId("decisions");
  root.replaceChildren();
  for (const d of model.decisions) {
    const box = el("fieldset", { class: "decision" });
    box.appendChild(el("legend", {}, `${d.id} (${d.kind})`));
    const selected = state.selections.get(d.id)!;
    for (const v of d.values) {
      const label = el("label");
      const cb = el("input", { type: "checkbox" }) as HTMLInputElement;
      cb.checked = selected.has(v);
      cb.addEventListener("change", () => {
        if (model === null || state === null) {
          return;
        }
        const now = new Set(state.selections.get(d.id)!);
        if (cb.checked) {
          now.add(v);
        } else {
          now.delete(v);
        }
        state = withSelection(model, state, d.id, now);
        renderViews();
      });
      label.appendChild(cb);
      label.appendChild(document.createTextNode(v));
      box.appendChild(label);
    }
    root.appendChild(box);
  }

  const failures = byId("include-failures") as HTMLInputElement;
  failures.checked = state.includeFitFailures;
  failures.onchange = () => {
    if (state === null) {
      return;
    }
    state = withFitFailures(state, failures.checked);
    renderViews();
  };

  const highlight = byId("highlight") as HTMLInputElement;
  highlight.value = "";
  highlight.onchange = () => {
    if (model === null || state === null) {
      return;
    }
    const raw = highlight.value.trim();
    try {
      state = withHighlight(model, state, raw === "" ? null : Number(raw));
      highlight.setCustomValidity("");
    } catch (e) {
      highlight.setCustomValidity((e as Error).message);
    }
    highlight.reportValidity();
    renderViews();
  };

  (byId("clear") as HTMLButtonElement).onclick = () => {
    if (model === null) {
      return;
    }
    state = initialFilterState(model);
    renderControls();
    renderViews();
  };
}

function renderViews(): void {
  if (model === null || state === null) {
    return;
  }
  const empty = byId("empty-selection");
  const views = byId("views");
  if (isEmptySelection(state)) {
    empty.hidden = false;
    views.hidden = true;
    byId("visible-count").textContent =
      "a decision has no values selected; pick at least one value per decision";
    return;
  }
  empty.hidden = true;
  views.hidden = false;

  const records = visibleRecords(model, state);
  byId("visible-count").textContent =
    `${records.length} of ${model.records.length} universes visible`;
  renderBuckets(records);
  renderCurve(specCurve(records));
  renderStability(records);
}

function renderBuckets(records: ReturnType<typeof visibleRecords>): void {
  if (model === null) {
    return;
  }
  const counts = bucketCounts(model, records);
  const total = records.length;
  const root = byId("buckets");
  root.replaceChildren();
  for (const bucket of model.buckets) {
    const n = counts.get(bucket) ?? 0;
    const row = el("div", { class: "bucket-row" });
    row.appendChild(el("span", { class: "bucket-name" }, bucket));
    const track = el("div", { class: "bucket-track" });
    const fill = el("div", { class: "bucket-fill" });
    fill.style.width = total > 0 ? `${(100 * n) / total}%` : "0";
    fill.style.background = bucketColor(bucket);
    track.appendChild(fill);
    row.appendChild(track);
    const pct = total > 0 ? ((100 * n) / total).toFixed(1) : "0.0";
    row.appendChild(el("span", { class: "bucket-count" }, `${n} (${pct}%)`));
    root.appendChild(row);
  }
}

function renderCurve(points: CurvePoint[]): void {
  const root = byId("curve");
  root.replaceChildren();
  const width = 720;
  const height = 200;
  const pad = 28;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("role", "img");
  if (points.length === 0) {
    root.appendChild(svg);
    return;
  }
  const maxMatch = Math.max(...points.map((p) => p.matchCount), 1);
  const xStep = (width - 2 * pad) / Math.max(points.length - 1, 1);
  const yOf = (m: number) => height - pad - (m / maxMatch) * (height - 2 * pad);
  const axis = document.createElementNS(SVG_NS, "line");
  axis.setAttribute("x1", String(pad));
  axis.setAttribute("y1", String(height - pad));
  axis.setAttribute("x2", String(width - pad));
  axis.setAttribute("y2", String(height - pad));
  axis.setAttribute("stroke", "#999");
  svg.appendChild(axis);
  points.forEach((p, i) => {
    const c = document.createElementNS(SVG_NS, "circle");
    const highlighted = state !== null && state.highlight === p.universeId;
    c.setAttribute("cx", String(pad + i * xStep));
    c.setAttribute("cy", String(yOf(p.matchCount)));
    c.setAttribute("r", highlighted ? "5" : "2.5");
    c.setAttribute("fill", bucketColor(p.studyBucket));
    if (highlighted) {
      c.setAttribute("stroke", "#000");
      c.setAttribute("stroke-width", "1.5");
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent =
      `universe ${p.universeId}: ${p.matchCount} matches, ${p.studyBucket}`;
    c.appendChild(title);
    svg.appendChild(c);
  });
  root.appendChild(svg);
}

function renderStability(records: ReturnType<typeof visibleRecords>): void {
  if (model === null) {
    return;
  }
  const stability = changeStability(model, records);
  const root = byId("stability");
  root.replaceChildren();
  const table = el("table");
  const head = el("tr");
  for (const h of ["decision", "groups", "pairs", "differing", "flip rate"]) {
    head.appendChild(el("th", {}, h));
  }
  table.appendChild(head);
  for (const d of model.decisions) {
    const s = stability.get(d.id)!;
    const row = el("tr");
    row.appendChild(el("td", {}, d.id));
    row.appendChild(el("td", { class: "num" }, String(s.nGroups)));
    row.appendChild(el("td", { class: "num" }, String(s.pairsTotal)));
    row.appendChild(el("td", { class: "num" }, String(s.pairsDiffering)));
    row.appendChild(el("td", { class: "num" }, s.flipRate.toFixed(4)));
    table.appendChild(row);
  }
  root.appendChild(table);
}

export function init(): void {
  const input = byId("store-file") as HTMLInputElement;
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (file !== undefined) {
      void loadFile(file);
    }
  });
}

init();
