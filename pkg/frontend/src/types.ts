/** Wire types for the annotation service (mirrors the /api payloads). */

export type PointState = "supervised" | "auto" | "manual" | "unlabeled";

export interface PointView {
  id: number;
  x: number;
  y: number;
  state: PointState;
  label: number | null;
  confidence: number | null;
}

export interface ClassInfo {
  id: number;
  name: string;
  color: string;
}

export interface SessionCounts {
  supervised: number;
  unsupervised: number;
  auto: number;
  manual: number;
  residue: number;
  test: number;
}

export interface SessionSnapshot {
  points: PointView[];
  tau: number;
  classes: ClassInfo[];
  counts: SessionCounts;
  status: "open" | "finalized";
  protocol: string;
  thumbnails: boolean;
}

export interface ThresholdResponse {
  tau: number;
  counts: { auto: number; residue: number };
  evicted: number[];
}

export interface FinalizeReport {
  protocol: string;
  seed: number;
  kappa: number;
  propagation_accuracy: number | null;
  counts: {
    supervised: number;
    unsupervised: number;
    auto: number;
    manual: number;
    test: number;
  };
}

export interface Assignment {
  id: number;
  label: number;
}

export interface ApiFailure {
  error: string;
  detail: string;
}
