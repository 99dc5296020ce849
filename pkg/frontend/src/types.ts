/** Shared wire types mirroring the service's JSON documents. */

export interface SiteDoc {
  id: string;
  name: string;
  lat: number;
  lon: number;
  zoom: number;
  state: string;
  meters_per_pixel: number;
  image_size: number;
}

export interface GridRef {
  row: number;
  col: number;
}

export interface PointRef extends GridRef {
  x: number;
  y: number;
}

export interface PromptSetBody {
  provenance: string;
  boxes: GridRef[];
  points: PointRef[];
}

export type Vertex = [number, number];

export type ElementKind =
  | "site_bounds"
  | "perimeter"
  | "subspace"
  | "exclusion_zone"
  | "linear_constraint";

export interface ElementDoc {
  id: string;
  type: ElementKind;
  label: string;
  provenance: string;
  convex: boolean;
  vertices: Vertex[];
}

export interface JobDoc {
  job_id: string;
  kind: string;
  started: string;
  finished: string;
  outcome: string;
  message: string[];
}

export interface HalfspaceDoc {
  normal: [number, number];
  offset: number;
  infeasible_sign: number;
}

export const GRID_CELLS = 12;
export const CELL_SIZE = 256;
export const IMAGE_SIZE = GRID_CELLS * CELL_SIZE;
