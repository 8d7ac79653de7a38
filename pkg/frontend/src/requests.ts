/** Build schema-valid stylize requests from the control state.
 *
 * Canonicalization keeps equivalent controls on one request shape:
 * zero-weight styles are dropped (corner weights send a single-style
 * request), a single style sends no weights field, and masks that reduce
 * to full first-slot coverage are dropped entirely. Masked mode sends no
 * weights (regions, not blending, select styles).
 */

import { activeSlots, type ControlState } from "./state.js";
import type { ImageRef, StylizePayload } from "./types.js";

export function buildStylizeRequest(state: ControlState): StylizePayload {
  if (state.content === null) throw new Error("upload a content image first");
  const active = activeSlots(state);
  if (active.length === 0) throw new Error("upload at least one style image");

  const masks = state.masks;
  const masked = masks !== null && !masks.isEmpty();

  let slots: number[];
  let weights: number[] | null = null;
  let regionMasks: Uint8Array[] | null = null;

  if (masked) {
    slots = active;
    regionMasks = masks.withCoverage(active);
    if (slots.length === 1) {
      // full coverage on one style is just that style
      regionMasks = null;
    }
  } else {
    const total = active.reduce((acc, i) => acc + state.weights[i]!, 0);
    if (total <= 0) throw new Error("style weights vanished");
    slots = active.filter((i) => state.weights[i]! > 0);
    if (slots.length > 1) {
      weights = slots.map((i) => state.weights[i]! / total);
    }
  }

  return {
    content: state.content,
    styles: slots.map((i) => state.styles[i] as ImageRef),
    alpha: Math.min(1, Math.max(0, state.alpha)),
    preserveColor: state.preserveColor,
    weights,
    masks: regionMasks,
    maskWidth: masks?.width ?? 0,
    maskHeight: masks?.height ?? 0,
  };
}

/** Re-check a payload against the service schema; returns violations. */
export function validatePayload(payload: StylizePayload): string[] {
  const problems: string[] = [];
  if (payload.styles.length < 1 || payload.styles.length > 4) {
    problems.push(`style count ${payload.styles.length} outside 1..4`);
  }
  if (!(payload.alpha >= 0 && payload.alpha <= 1)) {
    problems.push(`alpha ${payload.alpha} outside [0, 1]`);
  }
  if (payload.weights !== null) {
    if (payload.weights.length !== payload.styles.length) {
      problems.push("weights length differs from style count");
    }
    if (payload.weights.some((w) => w < 0)) problems.push("negative weight");
    const sum = payload.weights.reduce((a, b) => a + b, 0);
    if (Math.abs(sum - 1) > 1e-6) problems.push(`weights sum to ${sum}`);
  }
  if (payload.masks !== null) {
    if (payload.masks.length !== payload.styles.length) {
      problems.push("mask count differs from style count");
    }
    const n = payload.maskWidth * payload.maskHeight;
    for (let idx = 0; idx < n; idx++) {
      let covered = 0;
      for (const mask of payload.masks) {
        const v = mask[idx]!;
        if (v !== 0 && v !== 1) problems.push(`non-binary mask value ${v}`);
        covered += v;
      }
      if (covered > 1) {
        problems.push(`masks overlap at pixel ${idx}`);
        break;
      }
      if (covered < 1) {
        problems.push(`masks leave pixel ${idx} uncovered`);
        break;
      }
    }
  }
  return problems;
}

/** Transport encoding; `encodeMask` turns a binary mask into PNG bytes. */
export function payloadToFormData(
  payload: StylizePayload,
  encodeMask?: (mask: Uint8Array, width: number, height: number) => Blob,
): FormData {
  const form = new FormData();
  form.append("content", new Blob([payload.content.bytes]), payload.content.name);
  for (const style of payload.styles) {
    form.append("style", new Blob([style.bytes]), style.name);
  }
  form.append("alpha", String(payload.alpha));
  if (payload.preserveColor) form.append("color_preserve", "true");
  if (payload.weights !== null) form.append("weights", payload.weights.join(","));
  if (payload.masks !== null) {
    if (!encodeMask) throw new Error("mask encoding requires a PNG encoder");
    payload.masks.forEach((mask, i) => {
      form.append("mask", encodeMask(mask, payload.maskWidth, payload.maskHeight), `mask${i}.png`);
    });
  }
  return form;
}
