// DOM wiring for the single-page app.

import { ApiError, Client } from "./api.js";
import { RecCard, ValidationError, recommendFlow, uploadFlow } from "./flows.js";
import {
  SessionState,
  adoptResultFields,
  initialState,
  satisfiableTypes,
  setChartType,
  toggleField,
} from "./state.js";
import { CHART_TYPES, ChartTypeName } from "./types.js";

const client = new Client("");
let state: SessionState = initialState();

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

function toast(message: string, kind: "error" | "info" = "error"): void {
  const el = $("toast");
  el.textContent = message;
  el.className = `toast ${kind} visible`;
  setTimeout(() => el.classList.remove("visible"), 4000);
}

function renderFieldList(): void {
  const list = $("fields");
  list.innerHTML = "";
  for (const field of state.fields) {
    const li = document.createElement("li");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.selected.has(field.index);
    box.addEventListener("change", () => {
      state = toggleField(state, field.index);
      renderControls();
    });
    const label = document.createElement("label");
    label.append(box, ` ${field.name} `, smallType(field.type));
    li.appendChild(label);
    list.appendChild(li);
  }
}

function smallType(type: string): HTMLElement {
  const span = document.createElement("span");
  span.className = "ftype";
  span.textContent = type;
  return span;
}

function renderControls(): void {
  renderFieldList();
  const usable = satisfiableTypes(state.fields, state.selected);
  const bar = $("chart-types");
  bar.innerHTML = "";
  for (const name of ["any", ...CHART_TYPES] as const) {
    const button = document.createElement("button");
    button.textContent = name;
    button.className = state.chartType === name ? "type selected" : "type";
    const impossible = name !== "any" && !usable.has(name as ChartTypeName);
    button.disabled = state.fields.length > 0 && impossible;
    button.addEventListener("click", () => {
      state = setChartType(state, name as ChartTypeName | "any");
      renderControls();
    });
    bar.appendChild(button);
  }
  ($("recommend") as HTMLButtonElement).disabled = state.tableId === null;
}

function renderCards(cards: RecCard[]): void {
  const holder = $("results");
  holder.innerHTML = "";
  if (!cards.length) {
    holder.innerHTML = '<p class="empty">No charts satisfy the current constraints — deselect a field or pick another type.</p>';
    return;
  }
  cards.forEach((card, rank) => {
    const div = document.createElement("div");
    div.className = "card";
    div.innerHTML =
      `<header><span class="rank">#${rank + 1}</span>` +
      `<code>${card.sequence}</code><span class="score">${card.score.toFixed(3)}</span></header>` +
      card.svg;
    div.addEventListener("click", () => {
      state = adoptResultFields(state, card.sequence);
      renderControls();
      toast("selection updated from result", "info");
    });
    holder.appendChild(div);
  });
}

async function onUpload(file: File): Promise<void> {
  try {
    state = await uploadFlow(client, state, await file.text());
    $("table-name").textContent = `${file.name} — ${state.fields.length} fields`;
    renderControls();
    renderCards([]);
  } catch (err) {
    toast(err instanceof ApiError ? `upload failed: ${err.message}` : String(err));
  }
}

async function onRecommend(): Promise<void> {
  try {
    const [next, cards] = await recommendFlow(client, state);
    state = next;
    renderCards(cards);
  } catch (err) {
    if (err instanceof ValidationError) toast(err.message);
    else if (err instanceof ApiError && err.status === 422) {
      renderCards([]);
      toast(`unsatisfiable constraints: ${err.message}`);
    } else toast(String(err));
  }
}

export function boot(): void {
  $("file").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.files?.[0]) void onUpload(input.files[0]);
  });
  $("recommend").addEventListener("click", () => void onRecommend());
  $("topk").addEventListener("change", (ev) => {
    state = { ...state, topK: Number((ev.target as HTMLInputElement).value) || 3 };
  });
  renderControls();
}

if (typeof document !== "undefined" && document.getElementById("file")) {
  boot();
}
