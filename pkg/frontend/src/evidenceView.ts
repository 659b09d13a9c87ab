/** State behind the evidence-review screen for one compared pair. */

import { ApiClient, ApiError } from "./api.js";
import type { ComparisonResultWire } from "./types.js";

/** Deterministic per-pair palette keyed by pair index. */
export const PAIR_PALETTE = [
  "#00a0a0",
  "#d46a00",
  "#7030c0",
  "#2e8b2e",
  "#c02060",
  "#2050c0",
  "#909000",
  "#b03030",
] as const;

export function pairColor(index: number): string {
  return PAIR_PALETTE[index % PAIR_PALETTE.length];
}

export interface EvidenceLink {
  index: number;
  idA: string;
  idB: string;
  distance: number;
  color: string;
}

export class EvidenceView {
  result: ComparisonResultWire | null = null;
  /** true when no comparison exists yet and the examiner must run one */
  missing = false;
  hovered: number | null = null;
  reviewed: boolean | null = null;

  constructor(private api: ApiClient, public pairId: string) {}

  async load(): Promise<void> {
    try {
      this.result = await this.api.getResult(this.pairId);
      this.missing = false;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.result = null;
        this.missing = true;
        return;
      }
      throw err;
    }
  }

  async runComparison(): Promise<void> {
    this.result = await this.api.runComparison(this.pairId);
    this.missing = false;
  }

  /** One entry per accepted pair — the overlay invariant. */
  get links(): EvidenceLink[] {
    if (!this.result || this.result.no_evidence) {
      return [];
    }
    return this.result.pairs.map((p, index) => ({
      index,
      idA: p.id_a,
      idB: p.id_b,
      distance: p.distance,
      color: pairColor(index),
    }));
  }

  get noEvidence(): boolean {
    return this.result?.no_evidence ?? false;
  }

  hover(index: number | null): void {
    if (index !== null && (index < 0 || index >= this.links.length)) {
      throw new Error(`no pair at index ${index}`);
    }
    this.hovered = index;
  }

  async review(agree: boolean): Promise<void> {
    if (!this.result) {
      throw new Error("nothing to review: run the comparison first");
    }
    await this.api.recordReview(this.pairId, agree);
    this.reviewed = agree;
  }
}
