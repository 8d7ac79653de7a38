/** Playground control state and its pure update functions.
 *
 * Weights always form a simplex over the occupied style slots: any slider
 * move pins the touched slot and rescales the others proportionally, and
 * adding or removing a style renormalizes. Empty slots carry weight 0.
 */

import { MaskLayers } from "./masks.js";
import { MAX_STYLES, type ImageRef } from "./types.js";

export interface ControlState {
  content: ImageRef | null;
  styles: (ImageRef | null)[];
  weights: number[];
  alpha: number;
  preserveColor: boolean;
  masks: MaskLayers | null;
  inFlight: boolean;
}

export function createState(): ControlState {
  return {
    content: null,
    styles: Array.from({ length: MAX_STYLES }, () => null),
    weights: Array.from({ length: MAX_STYLES }, () => 0),
    alpha: 1.0,
    preserveColor: false,
    masks: null,
    inFlight: false,
  };
}

export function activeSlots(state: ControlState): number[] {
  const slots: number[] = [];
  state.styles.forEach((style, i) => {
    if (style !== null) slots.push(i);
  });
  return slots;
}

function renormalized(weights: number[], active: number[], pinned?: number): number[] {
  const out = weights.map((w, i) => (active.includes(i) ? Math.max(0, w) : 0));
  if (active.length === 0) return out.map(() => 0);
  const pinnedValue = pinned !== undefined ? Math.min(1, out[pinned]!) : 0;
  const others = active.filter((i) => i !== pinned);
  const remaining = pinned !== undefined ? 1 - pinnedValue : 1;
  let othersSum = 0;
  for (const i of others) othersSum += out[i]!;
  if (pinned !== undefined) out[pinned] = pinnedValue;
  if (others.length === 0) {
    if (pinned !== undefined) out[pinned] = 1;
    return out;
  }
  for (const i of others) {
    out[i] = othersSum > 0 ? (out[i]! / othersSum) * remaining : remaining / others.length;
  }
  return out;
}

export function setContent(state: ControlState, image: ImageRef, width: number, height: number): ControlState {
  return { ...state, content: image, masks: new MaskLayers(width, height) };
}

export function setStyle(state: ControlState, slot: number, image: ImageRef | null): ControlState {
  checkSlot(slot);
  const styles = state.styles.slice();
  styles[slot] = image;
  const weights = state.weights.slice();
  if (image !== null && weights[slot] === 0) weights[slot] = 1;
  const active: number[] = [];
  styles.forEach((s, i) => {
    if (s !== null) active.push(i);
  });
  return { ...state, styles, weights: renormalized(weights, active) };
}

/** Slider move: pin the touched slot, rescale the rest of the simplex. */
export function setWeight(state: ControlState, slot: number, value: number): ControlState {
  checkSlot(slot);
  if (state.styles[slot] === null) return state;
  const clamped = Math.min(1, Math.max(0, value));
  const weights = state.weights.slice();
  weights[slot] = clamped;
  return { ...state, weights: renormalized(weights, activeSlots(state), slot) };
}

export function setAlpha(state: ControlState, value: number): ControlState {
  return { ...state, alpha: Math.min(1, Math.max(0, value)) };
}

export function setPreserveColor(state: ControlState, on: boolean): ControlState {
  return { ...state, preserveColor: on };
}

function checkSlot(slot: number): void {
  if (!Number.isInteger(slot) || slot < 0 || slot >= MAX_STYLES) {
    throw new Error(`slot must be 0..${MAX_STYLES - 1}, got ${slot}`);
  }
}
