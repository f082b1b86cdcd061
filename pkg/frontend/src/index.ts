export {
  RESULT_COLUMNS,
  SchemaError,
  parseResultsCsv,
  type ResultRow,
} from "./schema.js";
export {
  SUMMARY_COLUMNS,
  summarizeRows,
  facetsOf,
  summaryToCsv,
  type Aggregation,
  type FacetKey,
  type SummaryRow,
} from "./aggregate.js";
export {
  renderFacetSvg,
  seriesForFacet,
  type FacetPlotOptions,
  type Series,
  type SeriesPoint,
  type YScale,
} from "./svg.js";
export { render, type PlotSpec, type RenderReport, type RenderedFacet } from "./render.js";
