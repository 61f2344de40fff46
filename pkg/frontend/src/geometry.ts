/** Geometry helpers: point-in-polygon for the lasso and a quadtree for
 * hover hit-testing at scatterplot scale (thousands of points at 60 fps). */

export interface XY {
  x: number;
  y: number;
}

/** Ray-casting test; points exactly on an edge count as outside (strict). */
export function pointInPolygon(point: XY, polygon: XY[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  const n = polygon.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const crosses =
      a.y > point.y !== b.y > point.y &&
      point.x < ((b.x - a.x) * (point.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) inside = !inside;
  }
  return inside;
}

interface QuadItem<T> extends XY {
  payload: T;
}

interface QuadNode<T> {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  items: QuadItem<T>[];
  children: QuadNode<T>[] | null;
}

const NODE_CAPACITY = 16;

/** Fixed-bounds point quadtree supporting nearest-within-radius queries. */
export class Quadtree<T> {
  private root: QuadNode<T>;

  constructor(x0: number, y0: number, x1: number, y1: number) {
    this.root = { x0, y0, x1, y1, items: [], children: null };
  }

  insert(x: number, y: number, payload: T): void {
    let node = this.root;
    for (;;) {
      if (node.children === null) {
        node.items.push({ x, y, payload });
        if (node.items.length > NODE_CAPACITY && this.canSplit(node)) {
          this.split(node);
        }
        return;
      }
      node = node.children[this.childIndex(node, x, y)];
    }
  }

  private canSplit(node: QuadNode<T>): boolean {
    return node.x1 - node.x0 > 1e-9 && node.y1 - node.y0 > 1e-9;
  }

  private childIndex(node: QuadNode<T>, x: number, y: number): number {
    const mx = (node.x0 + node.x1) / 2;
    const my = (node.y0 + node.y1) / 2;
    return (x >= mx ? 1 : 0) + (y >= my ? 2 : 0);
  }

  private split(node: QuadNode<T>): void {
    const mx = (node.x0 + node.x1) / 2;
    const my = (node.y0 + node.y1) / 2;
    node.children = [
      { x0: node.x0, y0: node.y0, x1: mx, y1: my, items: [], children: null },
      { x0: mx, y0: node.y0, x1: node.x1, y1: my, items: [], children: null },
      { x0: node.x0, y0: my, x1: mx, y1: node.y1, items: [], children: null },
      { x0: mx, y0: my, x1: node.x1, y1: node.y1, items: [], children: null },
    ];
    for (const item of node.items) {
      node.children[this.childIndex(node, item.x, item.y)].items.push(item);
    }
    node.items = [];
  }

  /** Closest payload within `radius` of (x, y), or null. */
  nearest(x: number, y: number, radius: number): T | null {
    let best: T | null = null;
    let bestDist = radius * radius;
    const visit = (node: QuadNode<T>): void => {
      const dx = Math.max(node.x0 - x, 0, x - node.x1);
      const dy = Math.max(node.y0 - y, 0, y - node.y1);
      if (dx * dx + dy * dy > bestDist) return;
      if (node.children !== null) {
        for (const child of node.children) visit(child);
        return;
      }
      for (const item of node.items) {
        const d = (item.x - x) ** 2 + (item.y - y) ** 2;
        if (d <= bestDist) {
          bestDist = d;
          best = item.payload;
        }
      }
    };
    visit(this.root);
    return best;
  }
}
