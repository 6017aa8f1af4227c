/**
 * Materialize the wire format for one video: per-frame feature arrays for
 * the configured blocks, one latent array per frame, the frames themselves,
 * and the manifest tying it together.
 *
 * Deterministic: the same frames, config and seed produce byte-identical
 * output files.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { makeBackbone, type ExtractorConfig } from "./backbone.js";
import { BadImage } from "./errors.js";
import { renderManifest, type FrameDoc, type ManifestDoc } from "./manifest.js";
import { encodeNpy } from "./npy.js";
import { decodePng, type Rgb } from "./png.js";

export interface ExtractResult {
  manifestPath: string;
  frameCount: number;
  coarseSize: [number, number];
}

function listFrameImages(framesDir: string): string[] {
  const entries = fs
    .readdirSync(framesDir)
    .filter((name) => name.toLowerCase().endsWith(".png"))
    .sort();
  if (entries.length === 0) {
    throw new BadImage(`${framesDir}: no .png frames found`);
  }
  return entries.map((name) => path.join(framesDir, name));
}

export function extract(framesDir: string, config: ExtractorConfig, outDir: string): ExtractResult {
  const framePaths = listFrameImages(framesDir);
  const frames: Rgb[] = framePaths.map((p) => decodePng(fs.readFileSync(p), p));
  const { width, height } = frames[0];
  for (const [i, frame] of frames.entries()) {
    if (frame.width !== width || frame.height !== height) {
      throw new BadImage(`${framePaths[i]}: frame is ${frame.height}x${frame.width}, expected ${height}x${width}`);
    }
  }

  const backbone = makeBackbone(frames, config);
  const h = backbone.coarseH;
  const w = backbone.coarseW;

  for (const sub of ["frames", "features", "latents"]) {
    fs.mkdirSync(path.join(outDir, sub), { recursive: true });
  }

  const frameDocs: FrameDoc[] = [];
  for (let i = 0; i < frames.length; i++) {
    const imageRel = path.posix.join("frames", `frame_${String(i).padStart(6, "0")}.png`);
    // copy the source bytes verbatim: no re-encode, no drift
    fs.copyFileSync(framePaths[i], path.join(outDir, imageRel));

    const features: Record<string, string> = {};
    for (const block of config.blocks) {
      const rel = path.posix.join(
        "features",
        `frame_${String(i).padStart(6, "0")}_block${String(block).padStart(2, "0")}.npy`
      );
      const grid = backbone.featureGrid(i, block);
      const channels = grid.length / (h * w);
      fs.writeFileSync(
        path.join(outDir, rel),
        encodeNpy({ dtype: "float32", shape: [h, w, channels], data: grid })
      );
      features[String(block)] = rel;
    }

    const latentRel = path.posix.join("latents", `frame_${String(i).padStart(6, "0")}.npy`);
    fs.writeFileSync(
      path.join(outDir, latentRel),
      encodeNpy({ dtype: "float32", shape: [h, w, 3], data: backbone.latent(i).values })
    );

    frameDocs.push({ image: imageRel, features, latent: latentRel });
  }

  const doc: ManifestDoc = {
    video_id: path.basename(framesDir),
    frame_count: frames.length,
    image_size: [height, width],
    coarse_size: [h, w],
    scale: backbone.scale,
    block_ids: [...config.blocks],
    frames: frameDocs,
  };
  const manifestPath = path.join(outDir, "manifest.json");
  fs.writeFileSync(manifestPath, renderManifest(doc));
  return { manifestPath, frameCount: frames.length, coarseSize: [h, w] };
}
