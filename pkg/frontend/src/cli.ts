#!/usr/bin/env node
/**
 * Extractor CLI.
 *
 *   vidseg-extractor extract --frames DIR --out DIR [--config C.json]
 *   vidseg-extractor serve --root DIR --frames DIR [--config C.json] [--watch]
 *
 * Failures print the typed error name on stderr and exit nonzero.
 */

import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { configFromJson, makeBackbone, resolveConfig } from "./backbone.js";
import { ExtractorError } from "./errors.js";
import { extract } from "./extract.js";
import { decodePng } from "./png.js";
import { pendingRequests, servePending, serveRequest } from "./serve.js";

function loadConfig(configPath?: string) {
  if (!configPath) return resolveConfig();
  return configFromJson(JSON.parse(fs.readFileSync(configPath, "utf-8")));
}

function loadFrames(framesDir: string) {
  return fs
    .readdirSync(framesDir)
    .filter((name) => name.toLowerCase().endsWith(".png"))
    .sort()
    .map((name) => decodePng(fs.readFileSync(`${framesDir}/${name}`), name));
}

async function main(argv: string[]): Promise<number> {
  const command = argv[0];
  const rest = argv.slice(1);
  if (command === "extract") {
    const { values } = parseArgs({
      args: rest,
      options: {
        frames: { type: "string" },
        out: { type: "string" },
        config: { type: "string" },
      },
    });
    if (!values.frames || !values.out) {
      console.error("extract requires --frames and --out");
      return 2;
    }
    const result = extract(values.frames, loadConfig(values.config), values.out);
    console.log(
      `wrote ${result.frameCount} frames (coarse ${result.coarseSize[0]}x${result.coarseSize[1]}) -> ${result.manifestPath}`
    );
    return 0;
  }
  if (command === "serve") {
    const { values } = parseArgs({
      args: rest,
      options: {
        root: { type: "string" },
        frames: { type: "string" },
        config: { type: "string" },
        watch: { type: "boolean" },
      },
    });
    if (!values.root || !values.frames) {
      console.error("serve requires --root and --frames");
      return 2;
    }
    const backbone = makeBackbone(loadFrames(values.frames), loadConfig(values.config));
    if (values.watch) {
      console.log(`serving ${values.root} (ctrl-c to stop)`);
      // run until interrupted
      for (;;) {
        await servePending(backbone, values.root, { idleRounds: 20 });
      }
    }
    const pending = pendingRequests(values.root);
    for (const dir of pending) serveRequest(backbone, dir);
    console.log(`served ${pending.length} pending request(s)`);
    return 0;
  }
  console.error("usage: vidseg-extractor <extract|serve> ...");
  return 2;
}

main(process.argv.slice(2))
  .then((code) => process.exit(code))
  .catch((exc) => {
    if (exc instanceof ExtractorError) {
      console.error(`${exc.name}: ${exc.message}`);
    } else {
      console.error(exc);
    }
    process.exit(1);
  });
