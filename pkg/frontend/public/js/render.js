// Minimal renderer for the rendering-grammar subset the service exports.
// Produces a self-contained SVG string; no external chart runtime needed.
const PALETTE = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2", "#9d755d"];
function foldRows(doc) {
    const rows = doc.data.values;
    const fold = doc.transform?.find((t) => t.fold);
    if (!fold)
        return rows;
    const [seriesKey, valueKey] = fold.as;
    const out = [];
    for (const row of rows) {
        for (const name of fold.fold) {
            out.push({ ...row, [seriesKey]: name, [valueKey]: row[name] });
        }
    }
    return out;
}
function asNumber(v) {
    if (typeof v === "number")
        return v;
    if (typeof v === "string") {
        const parsed = Date.parse(v);
        if (!Number.isNaN(parsed) && /^\d{4}-\d{2}/.test(v))
            return parsed;
        const n = Number(v);
        if (!Number.isNaN(n))
            return n;
    }
    return NaN;
}
function esc(v) {
    return String(v).replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
const W = 380;
const H = 240;
const PAD = { left: 42, right: 12, top: 10, bottom: 28 };
const IW = W - PAD.left - PAD.right;
const IH = H - PAD.top - PAD.bottom;
function svgShell(body, description) {
    const title = description ? `<title>${esc(description)}</title>` : "";
    return (`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" class="chart">` +
        title +
        `<g transform="translate(${PAD.left},${PAD.top})">${body}</g></svg>`);
}
function axes(yMax, xLabels) {
    return (`<line x1="0" y1="${IH}" x2="${IW}" y2="${IH}" stroke="#999"/>` +
        `<line x1="0" y1="0" x2="0" y2="${IH}" stroke="#999"/>` +
        `<text x="-6" y="10" text-anchor="end" font-size="9" fill="#666">${esc(fmt(yMax))}</text>` +
        `<text x="-6" y="${IH}" text-anchor="end" font-size="9" fill="#666">0</text>` +
        `<text x="0" y="${IH + 14}" font-size="9" fill="#666">${esc(xLabels[0])}</text>` +
        `<text x="${IW}" y="${IH + 14}" text-anchor="end" font-size="9" fill="#666">${esc(xLabels[1])}</text>`);
}
function fmt(v) {
    if (!Number.isFinite(v))
        return "";
    return Math.abs(v) >= 1000 ? v.toExponential(1) : String(Math.round(v * 100) / 100);
}
function renderArc(doc, rows) {
    const thetaField = doc.encoding.theta.field;
    const colorField = doc.encoding.color?.field;
    const values = rows.map((r) => Math.max(0, asNumber(r[thetaField]) || 0));
    const total = values.reduce((a, b) => a + b, 0) || 1;
    const cx = IW / 2;
    const cy = IH / 2;
    const radius = Math.min(IW, IH) / 2 - 4;
    let angle = -Math.PI / 2;
    const slices = [];
    rows.forEach((row, i) => {
        const frac = values[i] / total;
        const a0 = angle;
        const a1 = angle + frac * 2 * Math.PI;
        angle = a1;
        const large = a1 - a0 > Math.PI ? 1 : 0;
        const x0 = cx + radius * Math.cos(a0);
        const y0 = cy + radius * Math.sin(a0);
        const x1 = cx + radius * Math.cos(a1);
        const y1 = cy + radius * Math.sin(a1);
        const label = colorField ? esc(row[colorField]) : String(i);
        slices.push(`<path d="M${cx},${cy} L${fmt(x0)},${fmt(y0)} A${radius},${radius} 0 ${large} 1 ` +
            `${fmt(x1)},${fmt(y1)} Z" fill="${PALETTE[i % PALETTE.length]}" data-slice="${label}"/>`);
    });
    return svgShell(slices.join(""), doc.description);
}
export function renderChart(doc) {
    const rows = foldRows(doc);
    if (doc.mark === "arc")
        return renderArc(doc, rows);
    const xField = doc.encoding.x.field;
    const xType = doc.encoding.x.type;
    const yField = doc.encoding.y.field;
    const seriesField = doc.encoding.color?.field ?? null;
    const stacked = doc.mark === "bar" && doc.encoding.y?.stack === "zero";
    const grouped = doc.mark === "bar" && !!doc.encoding.xOffset;
    const categories = [];
    const seen = new Set();
    for (const row of rows) {
        const key = String(row[xField]);
        if (!seen.has(key)) {
            seen.add(key);
            categories.push(row[xField]);
        }
    }
    const seriesNames = seriesField
        ? [...new Set(rows.map((r) => String(r[seriesField])))]
        : ["__single__"];
    const numericX = xType === "quantitative" || xType === "temporal";
    const xNums = numericX ? rows.map((r) => asNumber(r[xField])) : [];
    const xMin = numericX ? Math.min(...xNums) : 0;
    const xMax = numericX ? Math.max(...xNums) : 1;
    const band = IW / Math.max(categories.length, 1);
    const xPos = (row, centered = true) => {
        if (numericX) {
            const v = asNumber(row[xField]);
            return xMax === xMin ? IW / 2 : ((v - xMin) / (xMax - xMin)) * IW;
        }
        const idx = categories.findIndex((c) => String(c) === String(row[xField]));
        return idx * band + (centered ? band / 2 : 0);
    };
    const yOf = (row) => {
        const v = asNumber(row[yField]);
        return Number.isFinite(v) ? v : 0;
    };
    let yMax = Math.max(...rows.map(yOf), 0);
    if (stacked) {
        const sums = new Map();
        for (const row of rows) {
            const key = String(row[xField]);
            sums.set(key, (sums.get(key) ?? 0) + Math.max(0, yOf(row)));
        }
        yMax = Math.max(...sums.values(), 0);
    }
    if (yMax <= 0)
        yMax = 1;
    const yPix = (v) => IH - (Math.max(v, 0) / yMax) * IH;
    const color = (name) => PALETTE[Math.max(seriesNames.indexOf(name), 0) % PALETTE.length];
    const parts = [];
    if (doc.mark === "bar") {
        const offsets = new Map(); // per-category stack cursor
        for (const row of rows) {
            const series = seriesField ? String(row[seriesField]) : "__single__";
            const value = Math.max(0, yOf(row));
            const key = String(row[xField]);
            if (stacked) {
                const base = offsets.get(key) ?? 0;
                offsets.set(key, base + value);
                const y1 = yPix(base + value);
                const y0 = yPix(base);
                parts.push(`<rect x="${fmt(xPos(row, false) + band * 0.15)}" y="${fmt(y1)}" width="${fmt(band * 0.7)}"` +
                    ` height="${fmt(Math.max(y0 - y1, 0))}" fill="${color(series)}" data-series="${esc(series)}" data-stacked="1"/>`);
            }
            else {
                const lane = grouped ? seriesNames.indexOf(series) : 0;
                const lanes = grouped ? seriesNames.length : 1;
                const bw = (band * 0.7) / lanes;
                const x = xPos(row, false) + band * 0.15 + lane * bw;
                const y1 = yPix(value);
                parts.push(`<rect x="${fmt(x)}" y="${fmt(y1)}" width="${fmt(bw)}" height="${fmt(IH - y1)}"` +
                    ` fill="${color(series)}" data-series="${esc(series)}"/>`);
            }
        }
    }
    else if (doc.mark === "point") {
        for (const row of rows) {
            parts.push(`<circle cx="${fmt(xPos(row))}" cy="${fmt(yPix(yOf(row)))}" r="3" fill="${PALETTE[0]}"/>`);
        }
    }
    else {
        // line / area, one path per series
        for (const series of seriesNames) {
            const subset = seriesField
                ? rows.filter((r) => String(r[seriesField]) === series)
                : rows;
            const pts = subset.map((r) => `${fmt(xPos(r))},${fmt(yPix(yOf(r)))}`);
            if (doc.mark === "area" && pts.length) {
                const first = subset[0];
                const last = subset[subset.length - 1];
                const d = `M${fmt(xPos(first))},${IH} L` + pts.join(" L") + ` L${fmt(xPos(last))},${IH} Z`;
                parts.push(`<path d="${d}" fill="${color(series)}" fill-opacity="0.35" stroke="none" data-series="${esc(series)}"/>`);
            }
            parts.push(`<polyline points="${pts.join(" ")}" fill="none" stroke="${color(series)}"` +
                ` stroke-width="1.6" data-series="${esc(series)}"/>`);
        }
    }
    const xLabels = numericX
        ? [fmt(xMin), fmt(xMax)]
        : [String(categories[0] ?? ""), String(categories[categories.length - 1] ?? "")];
    return svgShell(axes(yMax, xLabels) + parts.join(""), doc.description);
}
