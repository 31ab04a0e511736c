// Click-drag box selection: screen coordinates to frame pixel coordinates.
// The video canvas may be displayed at any scale; the drag is divided by the
// display scale so the init_box always carries frame pixels.

export interface DragResult {
  box: [number, number, number, number] | null;
  hint: string | null;
}

export const MIN_BOX_PX = 4;

export function dragToFrameBox(
  startX: number,
  startY: number,
  endX: number,
  endY: number,
  displayScale: number,
): DragResult {
  if (displayScale <= 0) throw new Error(`display scale must be positive, got ${displayScale}`);
  const x0 = Math.min(startX, endX) / displayScale;
  const y0 = Math.min(startY, endY) / displayScale;
  const w = Math.abs(endX - startX) / displayScale;
  const h = Math.abs(endY - startY) / displayScale;
  if (w < MIN_BOX_PX || h < MIN_BOX_PX) {
    return { box: null, hint: `box must be at least ${MIN_BOX_PX}x${MIN_BOX_PX} frame pixels` };
  }
  return { box: [x0, y0, w, h], hint: null };
}
