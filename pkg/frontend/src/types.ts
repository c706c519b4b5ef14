// Payload shapes of the recommendation service API.

export interface FieldMeta {
  index: number;
  name: string;
  type: "Unknown" | "String" | "Year" | "DateTime" | "Decimal";
}

export interface UploadResponse {
  tableId: string;
  fields: FieldMeta[];
}

export type ChartTypeName = "line" | "bar" | "scatter" | "pie" | "area" | "radar";

export const CHART_TYPES: ChartTypeName[] = ["line", "bar", "scatter", "pie", "area", "radar"];

export interface Constraints {
  fields?: number[];
  chartTypes?: string[];
}

export interface EncodingChannel {
  field: string;
  type: "quantitative" | "nominal" | "ordinal" | "temporal";
  stack?: "zero" | null;
}

export interface VegaLiteDoc {
  $schema: string;
  description?: string;
  data: { values: Record<string, unknown>[] };
  mark: "line" | "bar" | "point" | "arc" | "area";
  transform?: { fold: string[]; as: [string, string] }[];
  encoding: Partial<Record<"x" | "y" | "theta" | "color" | "xOffset", EncodingChannel>>;
}

export interface Recommendation {
  sequence: string;
  score: number;
  vegalite: VegaLiteDoc;
}

export interface RecommendResponse {
  tableId: string;
  recommendations: Recommendation[];
}
