export {
  DEFAULT_BLOCKS,
  ProceduralBackbone,
  blockChannels,
  blockGroup,
  blockScale,
  configFromJson,
  hashFloat,
  makeBackbone,
  resolveConfig,
  validateBlocks,
} from "./backbone.js";
export type { BackboneId, ExtractorConfig, Latent, Modulation } from "./backbone.js";
export * from "./errors.js";
export { extract } from "./extract.js";
export type { ExtractResult } from "./extract.js";
export { renderManifest } from "./manifest.js";
export type { FrameDoc, ManifestDoc } from "./manifest.js";
export { decodeNpy, encodeNpy, elementCount, readHeader } from "./npy.js";
export type { Dtype, NpyArray, TypedData } from "./npy.js";
export { decodePng, encodePng } from "./png.js";
export type { Rgb } from "./png.js";
export { pendingRequests, readRequest, servePending, serveRequest } from "./serve.js";
export type { ModulationRequest } from "./serve.js";
