/** Wire formats of the comparison/trial service. */

export type Decision = "same_eye" | "different_eyes" | "dont_know";

export interface ServiceConfig {
  min_conclusive_annotations: number;
  min_inconclusive_annotations: number;
  decisions: Decision[];
  plan_size_per_class: number;
  low_pmi_hours: number;
  pipeline: Record<string, unknown>;
}

export type Point = [number, number];

export interface AnnotationRecord {
  role: "matching" | "nonmatching";
  polygon_a?: Point[] | null;
  polygon_b?: Point[] | null;
}

export interface PriorTrialEcho {
  trial_id: string;
  decision: Decision;
  annotations: AnnotationRecord[];
  annotation_indices: number[];
}

export interface TrialPayload {
  trial_id: string;
  step: "evaluation" | "verification";
  pair_id: string;
  annotator_id: string;
  status: "open" | "closed";
  prior_trial: string | null;
  shown_prior_annotations: number[] | null;
  pair: {
    pair_id: string;
    a: { image: string; mask: string };
    b: { image: string; mask: string };
  };
  prior?: PriorTrialEcho;
}

export interface MatchPairWire {
  id_a: string;
  id_b: string;
  distance: number;
  offset: [number, number];
  overlap_area: number;
  centroid_a: Point | null;
  centroid_b: Point | null;
  polygon_a: Point[] | null;
  polygon_b: Point[] | null;
}

export interface ComparisonResultWire {
  score: number;
  pairs: MatchPairWire[];
  n_candidates: number;
  no_evidence: boolean;
  params: Record<string, unknown>;
  evidence_svg?: string;
  pair_id?: string;
}
