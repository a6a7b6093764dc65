export { bind, BoundFrame, GroupedFrame } from "./frame.js";
export type { ConnectorConfig, RenderedQuery } from "./frame.js";
export { toHostTable } from "./table.js";
export type { HostTable } from "./table.js";
export type {
  Action,
  ChainDoc,
  Comparison,
  Op,
  RawResult,
  RenderOutput,
  Scalar,
} from "./chain.js";
export { renderChain } from "./runner.js";
