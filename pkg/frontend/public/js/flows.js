// Upload -> inspect -> constrain -> recommend -> refine, as plain functions.
// app.ts binds these to the DOM; tests drive them directly.
import { renderChart } from "./render.js";
import { applyResults, buildConstraints, nextRequest, setTable, validateSelection, } from "./state.js";
export class ValidationError extends Error {
}
export async function uploadFlow(client, state, csv) {
    const res = await client.uploadCsv(csv);
    return setTable(state, res.tableId, res.fields);
}
/** Validates client-side first: an invalid selection never hits the wire. */
export async function recommendFlow(client, state) {
    const problem = validateSelection(state);
    if (problem !== null)
        throw new ValidationError(problem);
    const [next, seq] = nextRequest(state);
    const res = await client.recommend(next.tableId, buildConstraints(next), next.topK);
    const updated = applyResults(next, seq, res.recommendations);
    if (updated.results !== res.recommendations) {
        return [updated, []]; // stale response: a newer request took over
    }
    const cards = res.recommendations.map((rec) => ({
        sequence: rec.sequence,
        score: rec.score,
        svg: renderChart(rec.vegalite),
        fields: [...rec.sequence.matchAll(/\((\d+)\)/g)].map((m) => Number(m[1])),
    }));
    return [updated, cards];
}
