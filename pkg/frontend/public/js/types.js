// Payload shapes of the recommendation service API.
export const CHART_TYPES = ["line", "bar", "scatter", "pie", "area", "radar"];
