/** DOM shell: wires uploads, sliders, mask painting, and the result pane
 * to the playground core. Talks to the stylization service at the same
 * origin (override with ?api=http://host:port).
 */

import { MaskLayers } from "./masks.js";
import { payloadToFormData } from "./requests.js";
import {
  activeSlots,
  createState,
  setAlpha,
  setContent,
  setPreserveColor,
  setStyle,
  setWeight,
  type ControlState,
} from "./state.js";
import { StylizeClient } from "./submit.js";
import { MAX_STYLES, type StylizePayload, type StylizeResponse } from "./types.js";

const API_BASE = new URLSearchParams(location.search).get("api") ?? "";
const SLOT_COLORS = ["#e5484d", "#3e63dd", "#30a46c", "#f5a623"];

let state: ControlState = createState();
let brushSlot = 0;
let painting = false;

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

function maskToPng(mask: Uint8Array, width: number, height: number): Blob {
  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(width, height);
  for (let i = 0; i < mask.length; i++) {
    const v = mask[i]! ? 255 : 0;
    img.data[4 * i] = v;
    img.data[4 * i + 1] = v;
    img.data[4 * i + 2] = v;
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  const url = canvas.toDataURL("image/png");
  const raw = atob(url.split(",")[1]!);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return new Blob([bytes], { type: "image/png" });
}

const post = async (payload: StylizePayload): Promise<StylizeResponse> => {
  const response = await fetch(`${API_BASE}/api/stylize`, {
    method: "POST",
    body: payloadToFormData(payload, maskToPng),
  });
  return { status: response.status, body: new Uint8Array(await response.arrayBuffer()) };
};

const client = new StylizeClient(post, {
  onResult(png) {
    banner("");
    const current = $<HTMLImageElement>("result");
    const previous = $<HTMLImageElement>("previous");
    if (current.src) {
      previous.src = current.src;
      previous.style.display = "block";
    }
    current.src = URL.createObjectURL(new Blob([png], { type: "image/png" }));
    current.style.display = "block";
  },
  onValidation(message) {
    banner(message, "#b42318");
  },
  onNetworkError(message) {
    banner(`service unreachable (${message}) — adjust a control to retry`, "#b54708");
  },
  onInFlight(inFlight) {
    state = { ...state, inFlight };
    $("spinner").style.visibility = inFlight ? "visible" : "hidden";
  },
});

function banner(message: string, color = "#b42318"): void {
  const el = $("banner");
  el.textContent = message;
  el.style.color = color;
  el.style.display = message ? "block" : "none";
}

function resubmit(): void {
  if (state.content && activeSlots(state).length > 0) client.submit(state);
}

async function fileBytes(file: File): Promise<Uint8Array<ArrayBuffer>> {
  return new Uint8Array(await file.arrayBuffer());
}

function drawOverlay(): void {
  const canvas = $<HTMLCanvasElement>("maskCanvas");
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!state.masks) return;
  const { width, height } = state.masks;
  const img = ctx.createImageData(width, height);
  for (let slot = 0; slot < MAX_STYLES; slot++) {
    const layer = state.masks.layer(slot);
    const color = SLOT_COLORS[slot]!;
    const r = parseInt(color.slice(1, 3), 16);
    const g = parseInt(color.slice(3, 5), 16);
    const b = parseInt(color.slice(5, 7), 16);
    for (let i = 0; i < layer.length; i++) {
      if (!layer[i]) continue;
      img.data[4 * i] = r;
      img.data[4 * i + 1] = g;
      img.data[4 * i + 2] = b;
      img.data[4 * i + 3] = 110;
    }
  }
  ctx.putImageData(img, 0, 0);
}

function canvasPoint(canvas: HTMLCanvasElement, event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

function wireMaskPainting(): void {
  const canvas = $<HTMLCanvasElement>("maskCanvas");
  canvas.addEventListener("mousedown", (e) => {
    painting = true;
    paintAt(e);
  });
  canvas.addEventListener("mousemove", (e) => {
    if (painting) paintAt(e);
  });
  for (const evt of ["mouseup", "mouseleave"] as const) {
    canvas.addEventListener(evt, () => {
      if (!painting) return;
      painting = false;
      resubmit();
    });
  }

  function paintAt(event: MouseEvent): void {
    if (!state.masks) return;
    const { x, y } = canvasPoint(canvas, event);
    const radius = Number($<HTMLInputElement>("brushSize").value);
    state.masks.paint(brushSlot, [{ x, y, radius }]);
    drawOverlay();
  }
}

function wireControls(): void {
  $<HTMLInputElement>("contentInput").addEventListener("change", async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const bytes = await fileBytes(file);
    const bitmap = await createImageBitmap(new Blob([bytes]));
    const width = bitmap.width - (bitmap.width % 16);
    const height = bitmap.height - (bitmap.height % 16);
    state = setContent(state, { name: file.name, bytes }, width, height);
    const preview = $<HTMLImageElement>("contentPreview");
    preview.src = URL.createObjectURL(new Blob([bytes]));
    preview.style.display = "block";
    const canvas = $<HTMLCanvasElement>("maskCanvas");
    canvas.width = width;
    canvas.height = height;
    drawOverlay();
    resubmit();
  });

  for (let slot = 0; slot < MAX_STYLES; slot++) {
    $<HTMLInputElement>(`styleInput${slot}`).addEventListener("change", async (e) => {
      const file = (e.target as HTMLInputElement).files?.[0];
      if (!file) return;
      state = setStyle(state, slot, { name: file.name, bytes: await fileBytes(file) });
      const preview = $<HTMLImageElement>(`stylePreview${slot}`);
      preview.src = URL.createObjectURL(file);
      preview.style.display = "block";
      syncWeightSliders();
      resubmit();
    });
    $<HTMLInputElement>(`weight${slot}`).addEventListener("input", (e) => {
      state = setWeight(state, slot, Number((e.target as HTMLInputElement).value));
      syncWeightSliders();
      resubmit();
    });
    $<HTMLButtonElement>(`brush${slot}`).addEventListener("click", () => {
      brushSlot = slot;
      for (let i = 0; i < MAX_STYLES; i++) {
        $(`brush${i}`).classList.toggle("active", i === slot);
      }
    });
  }

  $<HTMLInputElement>("alpha").addEventListener("input", (e) => {
    const value = Number((e.target as HTMLInputElement).value);
    state = setAlpha(state, value);
    $("alphaValue").textContent = value.toFixed(2);
    resubmit();
  });

  $<HTMLInputElement>("preserveColor").addEventListener("change", (e) => {
    state = setPreserveColor(state, (e.target as HTMLInputElement).checked);
    resubmit();
  });

  $<HTMLButtonElement>("clearMasks").addEventListener("click", () => {
    state.masks?.clearAll();
    drawOverlay();
    resubmit();
  });
}

function syncWeightSliders(): void {
  for (let slot = 0; slot < MAX_STYLES; slot++) {
    const slider = $<HTMLInputElement>(`weight${slot}`);
    slider.value = String(state.weights[slot]);
    slider.disabled = state.styles[slot] === null;
    $(`weightValue${slot}`).textContent = state.weights[slot]!.toFixed(2);
  }
}

wireControls();
wireMaskPainting();
syncWeightSliders();
fetch(`${API_BASE}/api/health`)
  .then((r) => r.json())
  .then((h) => banner(`connected to ${h.checkpoint}`, "#067647"))
  .catch(() => banner("stylization service not reachable yet", "#b54708"));
