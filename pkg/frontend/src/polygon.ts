/** Free-vertex polygon drawing state for one image canvas. */

import type { Point } from "./types.js";

export class PolygonDraft {
  private vertices: Point[] = [];

  addVertex(x: number, y: number): void {
    this.vertices.push([x, y]);
  }

  get size(): number {
    return this.vertices.length;
  }

  get points(): Point[] {
    return this.vertices.map((v) => [v[0], v[1]]);
  }

  /** Close the polygon; fewer than 3 vertices is degenerate and rejected. */
  close(): Point[] {
    if (this.vertices.length < 3) {
      throw new Error(`a polygon needs at least 3 vertices, got ${this.vertices.length}`);
    }
    const done = this.points;
    this.vertices = [];
    return done;
  }

  cancel(): void {
    this.vertices = [];
  }
}
