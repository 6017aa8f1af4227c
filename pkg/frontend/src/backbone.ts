/**
 * Backbones that the extractor can drive.
 *
 * The decoder has 12 blocks over 4 resolution groups; blocks within a group
 * share a feature resolution, and one manifest carries a single coarse grid,
 * so every dumped block must come from the same group. Blocks 6-8 sit in
 * group 2 (scale 16 relative to the image).
 *
 * Real sd21/svd checkpoints are declared but unavailable here; the
 * procedural backbone is a deterministic stand-in that derives features from
 * patch colors and runs the same contraction/modulation dynamics the engine's
 * toy backbone uses, so every wire-format and protocol behavior can be
 * exercised end to end.
 */

import { BackboneUnavailable, InvalidBlocks } from "./errors.js";
import type { Rgb } from "./png.js";

export type BackboneId = "sd21" | "svd" | "procedural";

export interface ExtractorConfig {
  backbone: BackboneId;
  blocks: number[];
  samplerSteps: number;
  tInv: number;
  seed: number;
  attentionType: "cross" | "self";
  injectedFeatures: string[];
}

export const DEFAULT_BLOCKS = [6, 7, 8];

const ATTENTION_DEFAULTS: Record<BackboneId, { attentionType: "cross" | "self"; injectedFeatures: string[] }> = {
  sd21: { attentionType: "cross", injectedFeatures: ["spatial_attention"] },
  svd: { attentionType: "self", injectedFeatures: ["spatial_attention", "temporal_attention"] },
  procedural: { attentionType: "cross", injectedFeatures: ["spatial_attention"] },
};

export function resolveConfig(partial: Partial<ExtractorConfig> = {}): ExtractorConfig {
  const backbone = partial.backbone ?? "procedural";
  const defaults = ATTENTION_DEFAULTS[backbone];
  if (!defaults) throw new BackboneUnavailable(`unknown backbone ${JSON.stringify(backbone)}`);
  return {
    backbone,
    blocks: partial.blocks ?? DEFAULT_BLOCKS,
    samplerSteps: partial.samplerSteps ?? 25,
    tInv: partial.tInv ?? 25,
    seed: partial.seed ?? 0,
    attentionType: partial.attentionType ?? defaults.attentionType,
    injectedFeatures: partial.injectedFeatures ?? defaults.injectedFeatures,
  };
}

/** JSON config file uses snake_case keys, matching the engine's config style. */
export function configFromJson(doc: Record<string, unknown>): ExtractorConfig {
  return resolveConfig({
    backbone: doc.backbone as BackboneId | undefined,
    blocks: doc.blocks as number[] | undefined,
    samplerSteps: doc.sampler_steps as number | undefined,
    tInv: doc.t_inv as number | undefined,
    seed: doc.seed as number | undefined,
    attentionType: doc.attention_type as "cross" | "self" | undefined,
    injectedFeatures: doc.injected_features as string[] | undefined,
  });
}

/** Resolution group of a decoder block; image scale is 64 >> group. */
export function blockGroup(block: number): number {
  if (!Number.isInteger(block) || block < 0 || block > 11) {
    throw new InvalidBlocks(`block ${block} out of range: the decoder has 12 blocks, 0..11`);
  }
  return Math.floor(block / 3);
}

export function blockScale(block: number): number {
  return 64 >> blockGroup(block);
}

const GROUP_CHANNELS = [256, 128, 64, 32];

export function blockChannels(block: number): number {
  return GROUP_CHANNELS[blockGroup(block)];
}

export function validateBlocks(blocks: number[]): { scale: number } {
  if (blocks.length === 0) throw new InvalidBlocks("no blocks selected");
  const scales = new Set(blocks.map(blockScale));
  if (scales.size !== 1) {
    throw new InvalidBlocks(
      `blocks ${JSON.stringify(blocks)} span several resolutions; one manifest holds one coarse grid`
    );
  }
  return { scale: blocks.map(blockScale)[0] };
}

/** Deterministic [0, 1) stream from integer keys (splitmix-style). */
export function hashFloat(...keys: number[]): number {
  let h = 0x9e3779b9 >>> 0;
  for (const key of keys) {
    h = (h ^ Math.imul(key + 0x7f4a7c15, 0x85ebca6b)) >>> 0;
    h = Math.imul(h ^ (h >>> 13), 0xc2b2ae35) >>> 0;
    h = (h ^ (h >>> 16)) >>> 0;
  }
  return h / 0x100000000;
}

export interface Modulation {
  /** Coarse binary mask, length h*w. */
  mask: Uint8Array;
  sign: 1 | -1;
  strength: number;
  block: number;
}

export interface Latent {
  h: number;
  w: number;
  /** h*w*3 float values. */
  values: Float32Array;
}

/**
 * Deterministic color-driven backbone.
 *
 * Features: per coarse cell, the mean patch color projected through fixed
 * pseudo-random per-(block, channel) weights, so similar colors land close
 * in feature space. Latents are the mean patch colors in [0, 1]. One
 * denoising step contracts halfway toward the clean latent; a modulated
 * step adds sign*strength inside the mask. Decode is a nearest-neighbor
 * upsample clamped to [0, 1].
 */
export class ProceduralBackbone {
  readonly scale: number;
  readonly coarseH: number;
  readonly coarseW: number;
  private readonly targets: Latent[];

  constructor(
    readonly frames: Rgb[],
    readonly config: ExtractorConfig
  ) {
    if (frames.length === 0) throw new InvalidBlocks("no frames to extract");
    const { scale } = validateBlocks(config.blocks);
    this.scale = scale;
    const { width, height } = frames[0];
    if (height % scale !== 0 || width % scale !== 0) {
      throw new InvalidBlocks(
        `image ${height}x${width} not divisible by the block scale ${scale}`
      );
    }
    this.coarseH = height / scale;
    this.coarseW = width / scale;
    this.targets = frames.map((f) => this.meanColorLatent(f));
  }

  private meanColorLatent(frame: Rgb): Latent {
    const { coarseH: h, coarseW: w, scale } = this;
    const values = new Float32Array(h * w * 3);
    for (let i = 0; i < h; i++) {
      for (let j = 0; j < w; j++) {
        let r = 0;
        let g = 0;
        let b = 0;
        for (let di = 0; di < scale; di++) {
          for (let dj = 0; dj < scale; dj++) {
            const p = ((i * scale + di) * frame.width + (j * scale + dj)) * 3;
            r += frame.pixels[p];
            g += frame.pixels[p + 1];
            b += frame.pixels[p + 2];
          }
        }
        const n = scale * scale * 255;
        const cell = (i * w + j) * 3;
        values[cell] = r / n;
        values[cell + 1] = g / n;
        values[cell + 2] = b / n;
      }
    }
    return { h, w, values };
  }

  /** (h, w, C) features of one frame for one decoder block. */
  featureGrid(frameIndex: number, block: number): Float32Array {
    const channels = blockChannels(block);
    const { coarseH: h, coarseW: w } = this;
    const latent = this.targets[frameIndex];
    const out = new Float32Array(h * w * channels);
    // fixed projection weights per (block, channel), seeded
    const wr = new Float32Array(channels);
    const wg = new Float32Array(channels);
    const wb = new Float32Array(channels);
    const phase = new Float32Array(channels);
    for (let c = 0; c < channels; c++) {
      wr[c] = 2 * hashFloat(this.config.seed, block, c, 0) - 1;
      wg[c] = 2 * hashFloat(this.config.seed, block, c, 1) - 1;
      wb[c] = 2 * hashFloat(this.config.seed, block, c, 2) - 1;
      phase[c] = 2 * hashFloat(this.config.seed, block, c, 3) - 1;
    }
    for (let cell = 0; cell < h * w; cell++) {
      const r = latent.values[cell * 3];
      const g = latent.values[cell * 3 + 1];
      const b = latent.values[cell * 3 + 2];
      for (let c = 0; c < channels; c++) {
        out[cell * channels + c] = Math.fround(wr[c] * r + wg[c] * g + wb[c] * b + 0.05 * phase[c]);
      }
    }
    return out;
  }

  latent(frameIndex: number): Latent {
    const t = this.targets[frameIndex];
    return { h: t.h, w: t.w, values: Float32Array.from(t.values) };
  }

  initLatent(frameIndex: number, _tInv: number): Latent {
    return this.latent(frameIndex);
  }

  step(frameIndex: number, latent: Latent, t: number, modulation?: Modulation): Latent {
    const target = this.targets[frameIndex];
    const values = new Float32Array(latent.values.length);
    for (let i = 0; i < values.length; i++) {
      values[i] = Math.fround(0.5 * latent.values[i] + 0.5 * target.values[i]);
    }
    if (modulation) {
      const kick = Math.fround(modulation.sign * modulation.strength);
      for (let cell = 0; cell < latent.h * latent.w; cell++) {
        if (modulation.mask[cell]) {
          values[cell * 3] = Math.fround(values[cell * 3] + kick);
          values[cell * 3 + 1] = Math.fround(values[cell * 3 + 1] + kick);
          values[cell * 3 + 2] = Math.fround(values[cell * 3 + 2] + kick);
        }
      }
    }
    return { h: latent.h, w: latent.w, values };
  }

  decode(latent: Latent): Rgb {
    const { scale } = this;
    const width = latent.w * scale;
    const height = latent.h * scale;
    const pixels = new Uint8Array(width * height * 3);
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const cell = (Math.floor(y / scale) * latent.w + Math.floor(x / scale)) * 3;
        for (let c = 0; c < 3; c++) {
          const v = Math.min(1, Math.max(0, latent.values[cell + c]));
          pixels[(y * width + x) * 3 + c] = Math.round(v * 255);
        }
      }
    }
    return { width, height, pixels };
  }
}

export function makeBackbone(frames: Rgb[], config: ExtractorConfig): ProceduralBackbone {
  if (config.backbone !== "procedural") {
    throw new BackboneUnavailable(
      `${config.backbone} checkpoint weights are not available in this environment; ` +
        `use backbone "procedural" for development`
    );
  }
  return new ProceduralBackbone(frames, config);
}
