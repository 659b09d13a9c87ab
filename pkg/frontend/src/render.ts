/** Pure view-tree builders; main.ts materializes them into real DOM.
 *
 * Keeping rendering as plain data makes the structural invariants (link
 * counts, prior-annotation echoes, submit gating) testable without a
 * browser.
 */

import { EvidenceView, pairColor } from "./evidenceView.js";
import { TrialSession } from "./trialView.js";
import type { AnnotationRecord, Point } from "./types.js";

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: (VNode | string)[] = []
): VNode {
  return { tag, attrs, children };
}

export function countNodes(root: VNode, tag: string): number {
  let n = root.tag === tag ? 1 : 0;
  for (const child of root.children) {
    if (typeof child !== "string") {
      n += countNodes(child, tag);
    }
  }
  return n;
}

export function collectText(root: VNode): string {
  let out = "";
  for (const child of root.children) {
    out += typeof child === "string" ? child : collectText(child);
  }
  return out;
}

function pointsAttr(poly: Point[]): string {
  return poly.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}

function annotationPolygons(
  annotations: AnnotationRecord[],
  side: "a" | "b",
  cls: string
): VNode[] {
  const out: VNode[] = [];
  for (const ann of annotations) {
    const poly = side === "a" ? ann.polygon_a : ann.polygon_b;
    if (poly) {
      out.push(h("polygon", { class: cls, points: pointsAttr(poly), fill: "none" }));
    }
  }
  return out;
}

export function renderTrialView(session: TrialSession, imageBase = ""): VNode {
  const trial = session.trial;
  if (!trial) {
    return h("div", { class: "trial empty" }, ["no open trial"]);
  }
  const sides: VNode[] = (["a", "b"] as const).map((side) =>
    h("div", { class: `panel panel-${side}` }, [
      h("img", { src: `${imageBase}/files/${trial.pair[side].image}` }),
      h(
        "svg",
        { class: "draw-layer", "data-side": side },
        [
          ...annotationPolygons(session.annotations, side, "annotation"),
          ...(session.pending[side]
            ? [h("polygon", {
                class: "pending",
                points: pointsAttr(session.pending[side] as Point[]),
                fill: "none",
              })]
            : []),
        ]
      ),
    ])
  );

  const decisions = (session.config?.decisions ?? []).map((d) =>
    h(
      "button",
      {
        class: session.decision === d ? "decision selected" : "decision",
        "data-decision": d,
      },
      [d.replace("_", " ")]
    )
  );

  const counter = Number.isFinite(session.requiredAnnotations())
    ? `${session.annotations.length} / ${session.requiredAnnotations()} annotations`
    : `${session.annotations.length} annotations (select a decision)`;

  const children: (VNode | string)[] = [
    h("div", { class: "images" }, sides),
    h("div", { class: "decisions" }, decisions),
    h("div", { class: "annotation-count" }, [counter]),
    h(
      "button",
      session.canSubmit
        ? { class: "submit", "data-action": "submit" }
        : { class: "submit", "data-action": "submit", disabled: "disabled" },
      ["submit decision"]
    ),
  ];

  if (session.isVerification && trial.prior) {
    children.unshift(
      h("div", { class: "prior-overlay" }, [
        h("div", { class: "prior-decision" }, [
          `previous examiner decided: ${trial.prior.decision.replace("_", " ")}`,
        ]),
        h("svg", { class: "prior-annotations side-a" },
          annotationPolygons(trial.prior.annotations, "a", "prior")),
        h("svg", { class: "prior-annotations side-b" },
          annotationPolygons(trial.prior.annotations, "b", "prior")),
      ])
    );
  }
  if (session.lastError) {
    children.push(h("div", { class: "error" }, [session.lastError]));
  }
  return h("div", { class: `trial ${trial.step}` }, children);
}

export function renderEvidenceView(view: EvidenceView, imageBase = ""): VNode {
  if (view.missing) {
    return h("div", { class: "evidence missing" }, [
      "no comparison stored for this pair",
      h("button", { "data-action": "run-comparison" }, ["run comparison"]),
    ]);
  }
  const result = view.result;
  if (!result) {
    return h("div", { class: "evidence loading" }, ["loading"]);
  }
  if (result.no_evidence) {
    return h("div", { class: "evidence no-evidence" }, [
      h("div", { class: "banner" }, [
        "no matching evidence — sentinel score 0.5000",
      ]),
      reviewControls(view),
    ]);
  }
  const outlines: VNode[] = [];
  const lines: VNode[] = [];
  const labels: VNode[] = [];
  result.pairs.forEach((pair, index) => {
    const color = pairColor(index);
    const cls = view.hovered === index ? "pair hovered" : "pair";
    if (pair.polygon_a) {
      outlines.push(h("polygon", {
        class: cls, points: pointsAttr(pair.polygon_a), stroke: color, fill: "none",
        "data-pair": String(index),
      }));
    }
    if (pair.polygon_b) {
      outlines.push(h("polygon", {
        class: `${cls} side-b`, points: pointsAttr(pair.polygon_b), stroke: color,
        fill: "none", "data-pair": String(index),
      }));
    }
    if (pair.centroid_a && pair.centroid_b) {
      lines.push(h("line", {
        class: cls,
        x1: pair.centroid_a[0].toFixed(2),
        y1: pair.centroid_a[1].toFixed(2),
        x2: pair.centroid_b[0].toFixed(2),
        y2: pair.centroid_b[1].toFixed(2),
        stroke: color,
        "data-pair": String(index),
      }));
    }
    labels.push(h("li", { class: cls, "data-pair": String(index) }, [
      `${pair.id_a} ↔ ${pair.id_b}: distance ${pair.distance.toFixed(4)}`,
    ]));
  });
  const svgSrc = result.evidence_svg ? `${imageBase}/files/${result.evidence_svg}` : "";
  return h("div", { class: "evidence" }, [
    h("div", { class: "score" }, [
      `score ${result.score.toFixed(4)} from ${result.pairs.length} pair(s)`,
    ]),
    h("svg", { class: "overlay", "data-backdrop": svgSrc }, [...outlines, ...lines]),
    h("ul", { class: "pair-distances" }, labels),
    reviewControls(view),
  ]);
}

function reviewControls(view: EvidenceView): VNode {
  return h("div", { class: "review" }, [
    h("button", {
      "data-action": "agree",
      class: view.reviewed === true ? "selected" : "",
    }, ["agree"]),
    h("button", {
      "data-action": "disagree",
      class: view.reviewed === false ? "selected" : "",
    }, ["disagree"]),
  ]);
}
