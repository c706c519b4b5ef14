// Session state and client-side constraint validation.
//
// The server stays the source of truth; these checks only exist so the UI
// never sends a request it can already tell is invalid, and so chart-type
// buttons grey out when the current field selection makes them hopeless.
import { CHART_TYPES } from "./types.js";
export function initialState() {
    return {
        tableId: null,
        fields: [],
        selected: new Set(),
        chartType: "any",
        topK: 3,
        results: [],
        requestSeq: 0,
    };
}
export function setTable(state, tableId, fields) {
    return { ...state, tableId, fields, selected: new Set(), chartType: "any", results: [] };
}
export function toggleField(state, index) {
    const selected = new Set(state.selected);
    if (selected.has(index))
        selected.delete(index);
    else
        selected.add(index);
    return { ...state, selected };
}
export function setChartType(state, chartType) {
    return { ...state, chartType };
}
/** Adopt a result's fields as the next constraint set (the refine loop). */
export function adoptResultFields(state, sequence) {
    const selected = new Set();
    for (const match of sequence.matchAll(/\((\d+)\)/g)) {
        selected.add(Number(match[1]));
    }
    return { ...state, selected };
}
/** null when the selection is sendable, else a user-facing reason. */
export function validateSelection(state) {
    if (state.tableId === null)
        return "upload a table first";
    for (const index of state.selected) {
        if (!Number.isInteger(index) || index < 0 || index >= state.fields.length) {
            return `field index ${index} is out of range`;
        }
    }
    if (state.topK < 1)
        return "top-k must be at least 1";
    return null;
}
const MAX_X_FIELDS = 2;
const MAX_Y_FIELDS = 8;
/**
 * Mirror of the server's template arithmetic for a required field set:
 * y-fields must be non-string, scatter takes exactly one y and one x,
 * pie exactly one y, everything else 1..8 y and 0..2 x.
 */
export function satisfiableTypes(fields, selected) {
    const out = new Set();
    const pool = selected.size
        ? fields.filter((f) => selected.has(f.index))
        : fields;
    const k = pool.length;
    const nonString = pool.filter((f) => f.type !== "String").length;
    if (k === 0 || nonString === 0)
        return out;
    const exact = selected.size > 0; // exact-set mode: every selected field must be used
    for (const t of CHART_TYPES) {
        if (t === "scatter") {
            if (exact ? k === 2 && nonString >= 1 : k >= 2 && nonString >= 1)
                out.add(t);
            continue;
        }
        const yMax = t === "pie" ? 1 : Math.min(nonString, MAX_Y_FIELDS);
        const yMin = exact ? Math.max(1, k - MAX_X_FIELDS) : 1;
        if (yMin <= yMax)
            out.add(t);
    }
    return out;
}
export function buildConstraints(state) {
    const constraints = {};
    if (state.selected.size > 0) {
        constraints.fields = [...state.selected].sort((a, b) => a - b);
    }
    if (state.chartType !== "any") {
        constraints.chartTypes = [state.chartType];
    }
    return constraints;
}
/** Bump the sequence number; stale responses (older seq) must be dropped. */
export function nextRequest(state) {
    const seq = state.requestSeq + 1;
    return [{ ...state, requestSeq: seq }, seq];
}
export function applyResults(state, seq, results) {
    if (seq !== state.requestSeq)
        return state; // a newer request is in flight
    return { ...state, results };
}
