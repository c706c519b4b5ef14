// Thin REST client over the recommendation service.
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function parseError(res) {
    let message = res.statusText;
    try {
        const body = (await res.json());
        if (body.error)
            message = body.error;
    }
    catch {
        // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, message);
}
export class Client {
    constructor(baseUrl = "", fetchFn = fetch) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async health() {
        const res = await this.fetchFn(`${this.baseUrl}/health`);
        if (!res.ok)
            await parseError(res);
        return res.json();
    }
    async uploadCsv(csv) {
        const res = await this.fetchFn(`${this.baseUrl}/tables`, {
            method: "POST",
            headers: { "content-type": "text/csv" },
            body: csv,
        });
        if (!res.ok)
            await parseError(res);
        return res.json();
    }
    async recommend(tableId, constraints, top) {
        const body = { tableId, top };
        if (constraints.fields !== undefined || constraints.chartTypes !== undefined) {
            body.constraints = constraints;
        }
        const res = await this.fetchFn(`${this.baseUrl}/recommend`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!res.ok)
            await parseError(res);
        return res.json();
    }
}
