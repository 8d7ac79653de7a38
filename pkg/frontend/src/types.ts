/** Shared types for the playground core (browser-agnostic). */

/** An uploaded image: raw encoded bytes plus a display name. */
export interface ImageRef {
  name: string;
  bytes: Uint8Array<ArrayBuffer>;
}

export const MAX_STYLES = 4;

/** One circular brush stamp in content-pixel coordinates. */
export interface Stroke {
  x: number;
  y: number;
  radius: number;
}

/** The logical stylize request before transport encoding. */
export interface StylizePayload {
  content: ImageRef;
  /** Styles actually sent, in slot order. */
  styles: ImageRef[];
  alpha: number;
  preserveColor: boolean;
  /** Interpolation weights matching `styles`; omitted for a single style or masked mode. */
  weights: number[] | null;
  /** Binary region masks matching `styles` (row-major width*height); null when unmasked. */
  masks: Uint8Array[] | null;
  maskWidth: number;
  maskHeight: number;
}

export interface StylizeResponse {
  status: number;
  /** PNG bytes on 200, UTF-8 JSON on errors. */
  body: Uint8Array<ArrayBuffer>;
}

export type HttpPost = (payload: StylizePayload) => Promise<StylizeResponse>;
