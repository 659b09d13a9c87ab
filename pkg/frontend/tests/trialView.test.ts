import { describe, expect, it } from "vitest";

import { renderTrialView, countNodes, collectText } from "../src/render.js";
import { TrialSession } from "../src/trialView.js";
import {
  FakeServer,
  evaluationTrial,
  matchingAnnotation,
  serviceConfig,
  verificationTrial,
} from "./helpers.js";

async function openEvaluation(server = new FakeServer()) {
  server.route("GET", "/config", serviceConfig());
  server.route("GET", "/trials/next", evaluationTrial());
  const session = new TrialSession(server.client());
  await session.loadNext("evaluation");
  return { server, session };
}

describe("annotation count rule", () => {
  it("refuses conclusive submission below five annotations and never calls the API", async () => {
    const { server, session } = await openEvaluation();
    session.selectDecision("same_eye");
    for (let i = 0; i < 4; i++) {
      session.annotations.push(matchingAnnotation(i));
    }
    expect(session.canSubmit).toBe(false);
    await expect(session.submit()).rejects.toThrow(/at least 5/);
    expect(server.callsTo("POST", "/trials/")).toHaveLength(0);
    // the rendered submit control is disabled as well
    const view = renderTrialView(session);
    const text = JSON.stringify(view);
    expect(text).toContain('"disabled":"disabled"');
  });

  it("accepts five matching annotations for a conclusive decision", async () => {
    const { server, session } = await openEvaluation();
    server.route("POST", "/trials/t000001/decision",
      { ...evaluationTrial(), status: "closed" });
    session.selectDecision("same_eye");
    for (let i = 0; i < 5; i++) {
      session.annotations.push(matchingAnnotation(i));
    }
    expect(session.canSubmit).toBe(true);
    const closed = await session.submit();
    expect(closed.status).toBe("closed");
    expect(server.callsTo("POST", "/trials/")).toHaveLength(1);
    // view cleared on success
    expect(session.trial).toBeNull();
    expect(session.annotations).toHaveLength(0);
  });

  it("allows dont_know with a single annotation", async () => {
    const { server, session } = await openEvaluation();
    server.route("POST", "/trials/t000001/decision",
      { ...evaluationTrial(), status: "closed" });
    session.selectDecision("dont_know");
    expect(session.canSubmit).toBe(false);
    session.annotations.push(matchingAnnotation());
    expect(session.canSubmit).toBe(true);
    await session.submit();
    expect(server.callsTo("POST", "/trials/")).toHaveLength(1);
  });

  it("takes the threshold from /config rather than a client literal", async () => {
    const server = new FakeServer();
    server.route("GET", "/config", serviceConfig({ min_conclusive_annotations: 3 }));
    server.route("GET", "/trials/next", evaluationTrial());
    const session = new TrialSession(server.client());
    await session.loadNext("evaluation");
    session.selectDecision("different_eyes");
    session.annotations.push(matchingAnnotation(0), matchingAnnotation(1));
    expect(session.canSubmit).toBe(false);
    session.annotations.push(matchingAnnotation(2));
    expect(session.canSubmit).toBe(true);
  });

  it("keeps the view state and surfaces the message when the server rejects", async () => {
    const { server, session } = await openEvaluation();
    server.route("POST", "/trials/t000001/decision",
      { detail: "trial 't000001' was already submitted" }, 409);
    session.selectDecision("same_eye");
    for (let i = 0; i < 5; i++) {
      session.annotations.push(matchingAnnotation(i));
    }
    await expect(session.submit()).rejects.toThrow(/already submitted/);
    expect(session.trial).not.toBeNull();
    expect(session.annotations).toHaveLength(5);
    expect(session.lastError).toContain("already submitted");
    expect(collectText(renderTrialView(session))).toContain("already submitted");
  });
});

describe("drawing and linking", () => {
  it("builds a matching annotation from one closed polygon per image", async () => {
    const { session } = await openEvaluation();
    session.addVertex("a", 1, 1);
    session.addVertex("a", 6, 1);
    session.addVertex("a", 3, 6);
    session.closePolygon("a");
    session.addVertex("b", 2, 2);
    session.addVertex("b", 7, 2);
    session.addVertex("b", 4, 7);
    session.closePolygon("b");
    const record = session.linkPending();
    expect(record.role).toBe("matching");
    expect(record.polygon_a).toHaveLength(3);
    expect(record.polygon_b).toHaveLength(3);
    expect(session.annotations).toHaveLength(1);
  });

  it("rejects degenerate polygons inline", async () => {
    const { session } = await openEvaluation();
    session.addVertex("a", 1, 1);
    session.addVertex("a", 2, 2);
    expect(() => session.closePolygon("a")).toThrow(/at least 3/);
    expect(session.annotations).toHaveLength(0);
  });

  it("keeps a single polygon as a nonmatching annotation", async () => {
    const { session } = await openEvaluation();
    session.addVertex("b", 1, 1);
    session.addVertex("b", 5, 1);
    session.addVertex("b", 3, 4);
    session.closePolygon("b");
    const record = session.keepNonmatching("b");
    expect(record.role).toBe("nonmatching");
    expect(record.polygon_a).toBeUndefined();
    expect(record.polygon_b).toHaveLength(3);
  });
});

describe("verification view", () => {
  it("renders the prior decision and exactly the server-chosen subset", async () => {
    const server = new FakeServer();
    const prior = [matchingAnnotation(0), matchingAnnotation(4), matchingAnnotation(9)];
    server.route("GET", "/config", serviceConfig());
    server.route("GET", "/trials/next", verificationTrial([0, 2, 4], prior));
    const session = new TrialSession(server.client());
    await session.loadNext("verification");
    expect(session.isVerification).toBe(true);
    expect(session.priorDecision).toBe("same_eye");
    expect(session.priorAnnotations).toHaveLength(3);
    const view = renderTrialView(session);
    const text = collectText(view);
    expect(text).toContain("previous examiner decided: same eye");
    // each matching prior annotation shows one polygon per image side
    const priorSvgs = view.children.filter(
      (c) => typeof c !== "string" && c.attrs.class === "prior-overlay"
    );
    expect(priorSvgs).toHaveLength(1);
    expect(countNodes(priorSvgs[0] as never, "polygon")).toBe(prior.length * 2);
  });

  it("rejects payloads whose subset echo disagrees with the trial record", async () => {
    const server = new FakeServer();
    const bad = verificationTrial([0, 1], [matchingAnnotation()]);
    // indices claim two annotations but only one was echoed
    server.route("GET", "/config", serviceConfig());
    server.route("GET", "/trials/next", bad);
    const session = new TrialSession(server.client());
    await expect(session.loadNext("verification")).rejects.toThrow(/subset echo/);
  });
});
