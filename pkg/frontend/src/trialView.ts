/** State behind the trial screen: drawing, linking, decision, gated submit.
 *
 * Validation constants come from the service /config endpoint; nothing is
 * hardcoded client-side, so client and server always agree on the
 * annotation-count rule and the submit control can never produce a payload
 * the server would reject for that rule.
 */

import { ApiClient, ApiError } from "./api.js";
import { PolygonDraft } from "./polygon.js";
import type {
  AnnotationRecord,
  Decision,
  Point,
  ServiceConfig,
  TrialPayload,
} from "./types.js";

export type Side = "a" | "b";

export class TrialSession {
  config: ServiceConfig | null = null;
  trial: TrialPayload | null = null;
  decision: Decision | null = null;
  annotations: AnnotationRecord[] = [];
  drafts: Record<Side, PolygonDraft> = { a: new PolygonDraft(), b: new PolygonDraft() };
  /** closed polygons awaiting linkage into a matching annotation */
  pending: Record<Side, Point[] | null> = { a: null, b: null };
  lastError: string | null = null;

  constructor(private api: ApiClient) {}

  async init(): Promise<ServiceConfig> {
    if (!this.config) {
      this.config = await this.api.getConfig();
    }
    return this.config;
  }

  async loadNext(step: "evaluation" | "verification"): Promise<TrialPayload> {
    await this.init();
    const trial = await this.api.nextTrial(step);
    if (step === "verification") {
      const prior = trial.prior;
      if (!prior) {
        throw new Error("verification trial payload carries no prior-trial echo");
      }
      const shown = trial.shown_prior_annotations ?? [];
      if (
        prior.annotation_indices.length !== prior.annotations.length ||
        prior.annotation_indices.some((v, i) => v !== shown[i]) ||
        prior.annotation_indices.length !== shown.length
      ) {
        throw new Error("prior-annotation subset echo does not match the trial record");
      }
    }
    this.trial = trial;
    this.decision = null;
    this.annotations = [];
    this.pending = { a: null, b: null };
    this.lastError = null;
    return trial;
  }

  get isVerification(): boolean {
    return this.trial?.step === "verification";
  }

  get priorDecision(): Decision | null {
    return this.trial?.prior?.decision ?? null;
  }

  get priorAnnotations(): AnnotationRecord[] {
    return this.trial?.prior?.annotations ?? [];
  }

  // -- drawing ---------------------------------------------------------------

  addVertex(side: Side, x: number, y: number): void {
    this.requireOpen();
    this.drafts[side].addVertex(x, y);
  }

  /** Close the active draft on one side; it becomes that side's pending polygon. */
  closePolygon(side: Side): Point[] {
    this.requireOpen();
    const poly = this.drafts[side].close();
    this.pending[side] = poly;
    return poly;
  }

  /** Pair the two pending polygons into one matching annotation. */
  linkPending(): AnnotationRecord {
    this.requireOpen();
    const pa = this.pending.a;
    const pb = this.pending.b;
    if (!pa || !pb) {
      throw new Error("linking needs one closed polygon on each image");
    }
    const record: AnnotationRecord = { role: "matching", polygon_a: pa, polygon_b: pb };
    this.annotations.push(record);
    this.pending = { a: null, b: null };
    return record;
  }

  /** Keep one side's pending polygon as a nonmatching annotation. */
  keepNonmatching(side: Side): AnnotationRecord {
    this.requireOpen();
    const poly = this.pending[side];
    if (!poly) {
      throw new Error(`no closed polygon pending on image ${side.toUpperCase()}`);
    }
    const record: AnnotationRecord =
      side === "a"
        ? { role: "nonmatching", polygon_a: poly }
        : { role: "nonmatching", polygon_b: poly };
    this.annotations.push(record);
    this.pending[side] = null;
    return record;
  }

  removeAnnotation(index: number): void {
    this.requireOpen();
    this.annotations.splice(index, 1);
  }

  // -- decision + submit -------------------------------------------------------

  selectDecision(decision: Decision): void {
    this.requireOpen();
    if (this.config && !this.config.decisions.includes(decision)) {
      throw new Error(`unknown decision ${decision}`);
    }
    this.decision = decision;
  }

  requiredAnnotations(decision: Decision | null = this.decision): number {
    if (!this.config) {
      throw new Error("config not loaded");
    }
    if (decision === null) {
      return Number.POSITIVE_INFINITY;
    }
    return decision === "dont_know"
      ? this.config.min_inconclusive_annotations
      : this.config.min_conclusive_annotations;
  }

  get canSubmit(): boolean {
    return (
      this.trial !== null &&
      this.decision !== null &&
      this.config !== null &&
      this.annotations.length >= this.requiredAnnotations()
    );
  }

  /**
   * Submit the decision. Refuses locally while the annotation-count rule is
   * unmet; on server rejection the view state is kept intact and the message
   * is surfaced verbatim in lastError.
   */
  async submit(): Promise<TrialPayload> {
    this.requireOpen();
    if (!this.canSubmit) {
      throw new Error(
        `submit blocked: decision ${this.decision ?? "unset"} needs at least ` +
          `${this.requiredAnnotations()} annotation(s), have ${this.annotations.length}`
      );
    }
    const trial = this.trial as TrialPayload;
    try {
      const closed = await this.api.submitDecision(
        trial.trial_id,
        this.decision as Decision,
        this.annotations
      );
      this.trial = null;
      this.decision = null;
      this.annotations = [];
      this.pending = { a: null, b: null };
      this.lastError = null;
      return closed;
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.message : String(err);
      throw err;
    }
  }

  private requireOpen(): void {
    if (!this.trial || this.trial.status !== "open") {
      throw new Error("no open trial");
    }
  }
}
