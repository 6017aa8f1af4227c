/** Video manifest document, exactly as the segmentation engine's loader expects. */

export interface FrameDoc {
  image: string;
  features: Record<string, string>;
  latent: string;
  gt?: string;
}

export interface ManifestDoc {
  video_id: string;
  frame_count: number;
  image_size: [number, number];
  coarse_size: [number, number];
  scale: number;
  block_ids: number[];
  num_gt_classes?: number;
  frames: FrameDoc[];
}

export function renderManifest(doc: ManifestDoc): string {
  return JSON.stringify(doc, null, 2) + "\n";
}
