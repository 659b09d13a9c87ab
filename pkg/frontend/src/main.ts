/** Browser bootstrap: wires the trial and evidence screens to the service. */

import { ApiClient } from "./api.js";
import { replaceChildren } from "./dom.js";
import { EvidenceView } from "./evidenceView.js";
import { renderEvidenceView, renderTrialView } from "./render.js";
import { TrialSession, Side } from "./trialView.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing #${id}`);
  }
  return found as T;
}

async function refresh(root: HTMLElement, session: TrialSession): Promise<void> {
  replaceChildren(root, renderTrialView(session));
  wireTrialHandlers(root, session);
}

function wireTrialHandlers(root: HTMLElement, session: TrialSession): void {
  root.querySelectorAll("button.decision").forEach((btn) => {
    btn.addEventListener("click", () => {
      session.selectDecision(btn.getAttribute("data-decision") as never);
      void refresh(root, session);
    });
  });
  const submit = root.querySelector('button[data-action="submit"]');
  submit?.addEventListener("click", async () => {
    try {
      await session.submit();
      await session.loadNext(session.trial?.step ?? "evaluation");
    } catch {
      // lastError is rendered; state is intentionally preserved
    }
    void refresh(root, session);
  });
  root.querySelectorAll("svg.draw-layer").forEach((layer) => {
    layer.addEventListener("click", (ev) => {
      const side = (layer.getAttribute("data-side") ?? "a") as Side;
      const rect = (layer as SVGSVGElement).getBoundingClientRect();
      const e = ev as MouseEvent;
      session.addVertex(side, e.clientX - rect.left, e.clientY - rect.top);
    });
    layer.addEventListener("dblclick", () => {
      const side = (layer.getAttribute("data-side") ?? "a") as Side;
      session.closePolygon(side);
      if (session.pending.a && session.pending.b) {
        session.linkPending();
      }
      void refresh(root, session);
    });
  });
}

async function showEvidence(root: HTMLElement, view: EvidenceView): Promise<void> {
  replaceChildren(root, renderEvidenceView(view));
  root.querySelector('[data-action="run-comparison"]')?.addEventListener("click", async () => {
    await view.runComparison();
    void showEvidence(root, view);
  });
  root.querySelector('[data-action="agree"]')?.addEventListener("click", async () => {
    await view.review(true);
    void showEvidence(root, view);
  });
  root.querySelector('[data-action="disagree"]')?.addEventListener("click", async () => {
    await view.review(false);
    void showEvidence(root, view);
  });
}

export async function bootstrap(): Promise<void> {
  const api = new ApiClient(
    (url, init) => fetch(url, init),
    "",
    (el<HTMLInputElement>("annotator").value || "anonymous").trim()
  );
  const session = new TrialSession(api);
  const trialRoot = el<HTMLDivElement>("trial-root");
  const evidenceRoot = el<HTMLDivElement>("evidence-root");

  el<HTMLButtonElement>("start-evaluation").addEventListener("click", async () => {
    api.annotatorId = el<HTMLInputElement>("annotator").value.trim();
    await session.loadNext("evaluation");
    void refresh(trialRoot, session);
  });
  el<HTMLButtonElement>("start-verification").addEventListener("click", async () => {
    api.annotatorId = el<HTMLInputElement>("annotator").value.trim();
    await session.loadNext("verification");
    void refresh(trialRoot, session);
  });
  el<HTMLButtonElement>("load-evidence").addEventListener("click", async () => {
    const view = new EvidenceView(api, el<HTMLInputElement>("pair-id").value.trim());
    await view.load();
    void showEvidence(evidenceRoot, view);
  });
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  void bootstrap();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => void bootstrap());
}
