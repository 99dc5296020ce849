/**
 * Mouse-drag shape tools rasterized to polygon vertices. Curved shapes are
 * approximated with 32 vertices; straight lines become thin rectangles so
 * everything downstream stays a polygon.
 */

import type { HalfspaceDoc, Vertex } from "./types.js";

export const CURVE_VERTICES = 32;

export function rectPolygon(x0: number, y0: number, x1: number, y1: number): Vertex[] {
  const [ax, bx] = x0 <= x1 ? [x0, x1] : [x1, x0];
  const [ay, by] = y0 <= y1 ? [y0, y1] : [y1, y0];
  return [
    [ax, ay],
    [bx, ay],
    [bx, by],
    [ax, by],
  ];
}

export function ellipsePolygon(
  cx: number,
  cy: number,
  rx: number,
  ry: number,
  n: number = CURVE_VERTICES,
): Vertex[] {
  const out: Vertex[] = [];
  for (let i = 0; i < n; i++) {
    const t = (2 * Math.PI * i) / n;
    out.push([cx + rx * Math.cos(t), cy + ry * Math.sin(t)]);
  }
  return out;
}

export function circlePolygon(
  cx: number,
  cy: number,
  r: number,
  n: number = CURVE_VERTICES,
): Vertex[] {
  return ellipsePolygon(cx, cy, r, r, n);
}

export function linePolygon(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  width = 2,
): Vertex[] {
  const dx = x1 - x0;
  const dy = y1 - y0;
  const len = Math.hypot(dx, dy);
  if (len === 0) throw new Error("line endpoints coincide");
  const nx = (-dy / len) * (width / 2);
  const ny = (dx / len) * (width / 2);
  return [
    [x0 + nx, y0 + ny],
    [x1 + nx, y1 + ny],
    [x1 - nx, y1 - ny],
    [x0 - nx, y0 - ny],
  ];
}

/**
 * Polygon covering the infeasible half-plane of a linear constraint,
 * clipped to a view rectangle, for shading. Uses the server-computed
 * half-space; the client never re-derives the side.
 */
export function halfspaceShade(
  hs: HalfspaceDoc,
  viewX0: number,
  viewY0: number,
  viewX1: number,
  viewY1: number,
): Vertex[] {
  const [nx, ny] = hs.normal;
  const s = hs.infeasible_sign;
  const value = (p: Vertex) => s * (nx * p[0] + ny * p[1] - hs.offset);
  const rect: Vertex[] = [
    [viewX0, viewY0],
    [viewX1, viewY0],
    [viewX1, viewY1],
    [viewX0, viewY1],
  ];
  const out: Vertex[] = [];
  for (let i = 0; i < rect.length; i++) {
    const cur = rect[i];
    const nxt = rect[(i + 1) % rect.length];
    const fc = value(cur);
    const fn = value(nxt);
    if (fc >= 0) out.push(cur);
    if ((fc > 0 && fn < 0) || (fc < 0 && fn > 0)) {
      const t = fc / (fc - fn);
      out.push([cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])]);
    }
  }
  return out;
}
