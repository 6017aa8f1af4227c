/**
 * Modulation request server: the other end of the engine's directory protocol.
 *
 * A request directory holds request.json and mask.npy; the server runs the
 * reference and the +/- modulated trajectories with per-step latent blending,
 * decodes the final latents, writes plus.png and minus.png, and touches the
 * done marker last. Requests are stateless; re-serving an identical request
 * directory reproduces identical responses.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import type { Latent, Modulation, ProceduralBackbone } from "./backbone.js";
import { MalformedRequest } from "./errors.js";
import { decodeNpy } from "./npy.js";
import { encodePng } from "./png.js";

export interface ModulationRequest {
  frameIndex: number;
  clusterId: number;
  strength: number;
  sign: number;
  tM: number;
  tF: number;
  blockM: number;
  mask: Uint8Array;
  maskShape: [number, number];
}

export function readRequest(requestDir: string): ModulationRequest {
  const requestFile = path.join(requestDir, "request.json");
  if (!fs.existsSync(requestFile)) {
    throw new MalformedRequest(`${requestDir}: missing request.json`);
  }
  let doc: Record<string, unknown>;
  try {
    doc = JSON.parse(fs.readFileSync(requestFile, "utf-8"));
  } catch (exc) {
    throw new MalformedRequest(`${requestDir}: unreadable request.json: ${exc}`);
  }
  for (const key of ["frame_index", "cluster_id", "lambda", "sign", "t_m", "t_f", "b_m"]) {
    if (!(key in doc)) {
      throw new MalformedRequest(`${requestDir}: request.json lacks ${JSON.stringify(key)}`);
    }
  }
  const maskFile = path.join(requestDir, "mask.npy");
  if (!fs.existsSync(maskFile)) {
    throw new MalformedRequest(`${requestDir}: missing mask.npy`);
  }
  const mask = decodeNpy(fs.readFileSync(maskFile), maskFile);
  if (mask.shape.length !== 2 || mask.dtype !== "uint8") {
    throw new MalformedRequest(`${requestDir}: mask must be a 2-D uint8 array`);
  }
  const maskData = mask.data as Uint8Array;
  if (!maskData.every((v) => v === 0 || v === 1)) {
    throw new MalformedRequest(`${requestDir}: mask must be binary`);
  }
  return {
    frameIndex: Number(doc.frame_index),
    clusterId: Number(doc.cluster_id),
    strength: Number(doc.lambda),
    sign: Number(doc.sign),
    tM: Number(doc.t_m),
    tF: Number(doc.t_f),
    blockM: Number(doc.b_m),
    mask: maskData,
    maskShape: [mask.shape[0], mask.shape[1]],
  };
}

function blend(reference: Latent, modulated: Latent, mask: Uint8Array): Latent {
  const values = new Float32Array(modulated.values.length);
  for (let cell = 0; cell < reference.h * reference.w; cell++) {
    const pick = mask[cell] ? modulated.values : reference.values;
    values[cell * 3] = pick[cell * 3];
    values[cell * 3 + 1] = pick[cell * 3 + 1];
    values[cell * 3 + 2] = pick[cell * 3 + 2];
  }
  return { h: reference.h, w: reference.w, values };
}

/** Run the modulated rollout and write the response; returns the pair. */
export function serveRequest(backbone: ProceduralBackbone, requestDir: string): void {
  const req = readRequest(requestDir);
  if (req.maskShape[0] !== backbone.coarseH || req.maskShape[1] !== backbone.coarseW) {
    throw new MalformedRequest(
      `${requestDir}: mask is ${req.maskShape[0]}x${req.maskShape[1]}, ` +
        `coarse grid is ${backbone.coarseH}x${backbone.coarseW}`
    );
  }
  if (req.frameIndex < 0 || req.frameIndex >= backbone.frames.length) {
    throw new MalformedRequest(`${requestDir}: frame_index ${req.frameIndex} out of range`);
  }
  if (req.tM > req.tF) {
    throw new MalformedRequest(`${requestDir}: t_m ${req.tM} exceeds t_f ${req.tF}`);
  }
  if (req.tF > backbone.config.samplerSteps) {
    throw new MalformedRequest(
      `${requestDir}: t_f ${req.tF} exceeds the sampler's ${backbone.config.samplerSteps} steps`
    );
  }

  const tInv = backbone.config.tInv;
  const start = Math.max(1, req.tF - tInv + 1);
  let ref = backbone.initLatent(req.frameIndex, tInv);
  let plus = ref;
  let minus = ref;
  for (let t = start; t <= req.tF; t++) {
    ref = backbone.step(req.frameIndex, ref, t);
    if (t >= req.tM) {
      const mod = (sign: 1 | -1): Modulation => ({
        mask: req.mask,
        sign,
        strength: req.strength,
        block: req.blockM,
      });
      plus = blend(ref, backbone.step(req.frameIndex, plus, t, mod(1)), req.mask);
      minus = blend(ref, backbone.step(req.frameIndex, minus, t, mod(-1)), req.mask);
    } else {
      plus = backbone.step(req.frameIndex, plus, t);
      minus = backbone.step(req.frameIndex, minus, t);
    }
  }
  fs.writeFileSync(path.join(requestDir, "plus.png"), encodePng(backbone.decode(plus)));
  fs.writeFileSync(path.join(requestDir, "minus.png"), encodePng(backbone.decode(minus)));
  fs.writeFileSync(path.join(requestDir, "done"), "");
}

export function pendingRequests(root: string): string[] {
  if (!fs.existsSync(root)) return [];
  return fs
    .readdirSync(root)
    .sort()
    .map((name) => path.join(root, name))
    .filter(
      (dir) =>
        fs.statSync(dir).isDirectory() &&
        fs.existsSync(path.join(dir, "request.json")) &&
        !fs.existsSync(path.join(dir, "done"))
    );
}

/** Serve until the root stays quiet; returns the number of requests handled. */
export async function servePending(
  backbone: ProceduralBackbone,
  root: string,
  opts: { pollMs?: number; idleRounds?: number } = {}
): Promise<number> {
  const pollMs = opts.pollMs ?? 50;
  const idleRounds = opts.idleRounds ?? 1;
  let handled = 0;
  let quiet = 0;
  while (quiet < idleRounds) {
    const pending = pendingRequests(root);
    if (pending.length === 0) {
      quiet += 1;
      await new Promise((resolve) => setTimeout(resolve, pollMs));
      continue;
    }
    quiet = 0;
    for (const dir of pending) {
      serveRequest(backbone, dir);
      handled += 1;
    }
  }
  return handled;
}
