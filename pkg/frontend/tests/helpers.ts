/** Fake service transport: programmable routes, full request recording. */

import { ApiClient, FetchLike } from "../src/api.js";
import type {
  AnnotationRecord,
  ComparisonResultWire,
  ServiceConfig,
  TrialPayload,
} from "../src/types.js";

export interface RecordedCall {
  url: string;
  method: string;
  body?: unknown;
  headers?: Record<string, string>;
}

export class FakeServer {
  calls: RecordedCall[] = [];
  private routes = new Map<string, { status: number; body: unknown }>();

  route(method: string, path: string, body: unknown, status = 200): void {
    this.routes.set(`${method} ${path}`, { status, body });
  }

  fetchLike: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    this.calls.push({
      url,
      method,
      body: init?.body ? JSON.parse(init.body) : undefined,
      headers: init?.headers,
    });
    const hit = this.routes.get(`${method} ${url.split("?")[0]}`);
    if (!hit) {
      return { status: 404, json: async () => ({ detail: `no route ${method} ${url}` }) };
    }
    return { status: hit.status, json: async () => hit.body };
  };

  client(annotator = "tester"): ApiClient {
    return new ApiClient(this.fetchLike, "", annotator);
  }

  callsTo(method: string, prefix: string): RecordedCall[] {
    return this.calls.filter((c) => c.method === method && c.url.startsWith(prefix));
  }
}

export function serviceConfig(overrides: Partial<ServiceConfig> = {}): ServiceConfig {
  return {
    min_conclusive_annotations: 5,
    min_inconclusive_annotations: 1,
    decisions: ["same_eye", "different_eyes", "dont_know"],
    plan_size_per_class: 10,
    low_pmi_hours: 72,
    pipeline: { angle_tol: 20 },
    ...overrides,
  };
}

export function evaluationTrial(overrides: Partial<TrialPayload> = {}): TrialPayload {
  return {
    trial_id: "t000001",
    step: "evaluation",
    pair_id: "p01",
    annotator_id: "tester",
    status: "open",
    prior_trial: null,
    shown_prior_annotations: null,
    pair: {
      pair_id: "p01",
      a: { image: "a.png", mask: "a_mask.png" },
      b: { image: "b.png", mask: "b_mask.png" },
    },
    ...overrides,
  };
}

export function matchingAnnotation(offset = 0): AnnotationRecord {
  const tri = (d: number): [number, number][] => [
    [1 + d, 1],
    [6 + d, 1],
    [3 + d, 6],
  ];
  return { role: "matching", polygon_a: tri(offset), polygon_b: tri(offset + 2) };
}

export function verificationTrial(
  shown: number[],
  priorAnnotations: AnnotationRecord[],
  overrides: Partial<TrialPayload> = {}
): TrialPayload {
  return evaluationTrial({
    trial_id: "t000002",
    step: "verification",
    prior_trial: "t000001",
    shown_prior_annotations: shown,
    prior: {
      trial_id: "t000001",
      decision: "same_eye",
      annotations: priorAnnotations,
      annotation_indices: shown,
    },
    ...overrides,
  });
}

export function comparisonResult(nPairs: number, noEvidence = false): ComparisonResultWire {
  const pairs = [];
  for (let i = 0; i < nPairs; i++) {
    pairs.push({
      id_a: `a${i}`,
      id_b: `b${i}`,
      distance: 0.05 * (i + 1),
      offset: [i, -i] as [number, number],
      overlap_area: 100,
      centroid_a: [10 + i, 12 + i] as [number, number],
      centroid_b: [14 + i, 11 + i] as [number, number],
      polygon_a: [
        [5, 5],
        [15, 5],
        [15, 15],
        [5, 15],
      ] as [number, number][],
      polygon_b: [
        [6, 6],
        [16, 6],
        [16, 16],
        [6, 16],
      ] as [number, number][],
    });
  }
  const score = noEvidence
    ? 0.5
    : pairs.reduce((acc, p) => acc + p.distance, 0) / Math.max(1, pairs.length);
  return {
    score,
    pairs: noEvidence ? [] : pairs,
    n_candidates: nPairs * 2,
    no_evidence: noEvidence,
    params: { angle_tol: 20 },
    evidence_svg: "evidence/p01.sha.svg",
  };
}
