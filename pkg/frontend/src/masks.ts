/** Painted region-mask layers, one per style slot.
 *
 * The invariant maintained here is per-pixel exclusivity: painting a pixel
 * into one slot erases it from every other slot, so layers can never
 * overlap. Coverage is completed only at request-build time, when every
 * unassigned pixel falls back to the first active slot.
 */

import { MAX_STYLES, type Stroke } from "./types.js";

export class MaskLayers {
  readonly width: number;
  readonly height: number;
  private layers: Uint8Array[];

  constructor(width: number, height: number) {
    if (width <= 0 || height <= 0) {
      throw new Error(`mask grid must be positive, got ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.layers = Array.from({ length: MAX_STYLES }, () => new Uint8Array(width * height));
  }

  /** Stamp circular strokes into `slot`, erasing those pixels elsewhere. */
  paint(slot: number, strokes: Stroke[]): void {
    this.checkSlot(slot);
    const target = this.layers[slot]!;
    for (const stroke of strokes) {
      const r = Math.max(0, stroke.radius);
      const x0 = Math.max(0, Math.floor(stroke.x - r));
      const x1 = Math.min(this.width - 1, Math.ceil(stroke.x + r));
      const y0 = Math.max(0, Math.floor(stroke.y - r));
      const y1 = Math.min(this.height - 1, Math.ceil(stroke.y + r));
      const r2 = r * r;
      for (let y = y0; y <= y1; y++) {
        for (let x = x0; x <= x1; x++) {
          const dx = x - stroke.x;
          const dy = y - stroke.y;
          if (dx * dx + dy * dy > r2) continue;
          const idx = y * this.width + x;
          for (const layer of this.layers) layer[idx] = 0;
          target[idx] = 1;
        }
      }
    }
  }

  /** Remove every painted pixel (submit then falls back to slot coverage). */
  clearAll(): void {
    for (const layer of this.layers) layer.fill(0);
  }

  layer(slot: number): Uint8Array {
    this.checkSlot(slot);
    return this.layers[slot]!;
  }

  paintedPixelCount(): number {
    let count = 0;
    for (const layer of this.layers) {
      for (const v of layer) count += v;
    }
    return count;
  }

  /** True when no stroke has been painted anywhere. */
  isEmpty(): boolean {
    return this.paintedPixelCount() === 0;
  }

  /**
   * Masks for the given active slots with full coverage: unassigned pixels
   * (including pixels painted only into inactive slots) go to the first
   * active slot. The result partitions the grid by construction.
   */
  withCoverage(activeSlots: number[]): Uint8Array[] {
    if (activeSlots.length === 0) throw new Error("no active style slots");
    const result = activeSlots.map((slot) => Uint8Array.from(this.layers[slot]!));
    const fallback = result[0]!;
    const n = this.width * this.height;
    for (let idx = 0; idx < n; idx++) {
      let assigned = 0;
      for (const mask of result) assigned += mask[idx]!;
      if (assigned === 0) fallback[idx] = 1;
    }
    return result;
  }

  private checkSlot(slot: number): void {
    if (!Number.isInteger(slot) || slot < 0 || slot >= MAX_STYLES) {
      throw new Error(`slot must be 0..${MAX_STYLES - 1}, got ${slot}`);
    }
  }
}
