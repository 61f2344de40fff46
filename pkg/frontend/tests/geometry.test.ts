import { describe, expect, it } from "vitest";

import { pointInPolygon, Quadtree } from "../src/geometry.js";

const square = [
  { x: 0, y: 0 },
  { x: 10, y: 0 },
  { x: 10, y: 10 },
  { x: 0, y: 10 },
];

describe("pointInPolygon", () => {
  it("accepts interior points and rejects exterior ones", () => {
    expect(pointInPolygon({ x: 5, y: 5 }, square)).toBe(true);
    expect(pointInPolygon({ x: 15, y: 5 }, square)).toBe(false);
    expect(pointInPolygon({ x: -1, y: -1 }, square)).toBe(false);
  });

  it("handles concave polygons", () => {
    const lShape = [
      { x: 0, y: 0 }, { x: 10, y: 0 }, { x: 10, y: 4 },
      { x: 4, y: 4 }, { x: 4, y: 10 }, { x: 0, y: 10 },
    ];
    expect(pointInPolygon({ x: 2, y: 8 }, lShape)).toBe(true);
    expect(pointInPolygon({ x: 8, y: 8 }, lShape)).toBe(false);
  });

  it("returns false for degenerate polygons", () => {
    expect(pointInPolygon({ x: 1, y: 1 }, square.slice(0, 2))).toBe(false);
    expect(pointInPolygon({ x: 1, y: 1 }, [])).toBe(false);
  });
});

describe("Quadtree", () => {
  it("finds the nearest payload within the radius", () => {
    const tree = new Quadtree<number>(0, 0, 100, 100);
    for (let i = 0; i < 100; i++) {
      tree.insert((i * 7) % 100, (i * 13) % 100, i);
    }
    tree.insert(50, 50, 999);
    expect(tree.nearest(50.4, 50.4, 2)).toBe(999);
  });

  it("returns null when nothing is in range", () => {
    const tree = new Quadtree<number>(0, 0, 100, 100);
    tree.insert(10, 10, 1);
    expect(tree.nearest(90, 90, 5)).toBeNull();
  });

  it("handles thousands of points (split path)", () => {
    const tree = new Quadtree<number>(0, 0, 1000, 1000);
    let expectedId = -1;
    for (let i = 0; i < 5000; i++) {
      const x = (i * 97) % 1000;
      const y = (i * 61) % 1000;
      tree.insert(x, y, i);
      if (x === 500 && y === 500) expectedId = i;
    }
    tree.insert(500, 500, 77777);
    expect([77777, expectedId]).toContain(tree.nearest(500, 500, 1));
  });
});
