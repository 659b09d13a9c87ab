/** Materialize a view tree into real DOM nodes (browser side only). */

import type { VNode } from "./render.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SVG_TAGS = new Set(["svg", "polygon", "line", "circle", "text", "image", "g"]);

export function materialize(node: VNode, doc: Document = document): Element {
  const el = SVG_TAGS.has(node.tag)
    ? doc.createElementNS(SVG_NS, node.tag)
    : doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    el.setAttribute(key, value);
  }
  for (const child of node.children) {
    el.appendChild(typeof child === "string" ? doc.createTextNode(child) : materialize(child, doc));
  }
  return el;
}

export function replaceChildren(target: Element, node: VNode): void {
  target.replaceChildren(materialize(node, target.ownerDocument));
}
