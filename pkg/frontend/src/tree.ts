// Derivation-tree rendering: one <details> per node, children built lazily
// on first expand.

import type { ExplainNode } from "./api";

export function factLabel(node: ExplainNode): string {
  const args = node.fact.args
    .map((a) => (typeof a === "string" ? `"${a}"` : String(a)))
    .join(", ");
  return `${node.fact.relation}(${args})`;
}

export function nodeSummary(node: ExplainNode): string {
  if (node.rule === null) {
    return node.line === null ? `${factLabel(node)} — input fact` : `${factLabel(node)} — program fact (line ${node.line})`;
  }
  const bindings = Object.entries(node.bindings)
    .map(([name, value]) => `${name}=${typeof value === "string" ? `"${value}"` : value}`)
    .join(", ");
  return `${factLabel(node)} — rule at line ${node.line}${bindings ? ` [${bindings}]` : ""}`;
}

export function renderTreeNode(node: ExplainNode, doc: Document): HTMLElement {
  if (node.children.length === 0 && node.rule === null) {
    const leaf = doc.createElement("div");
    leaf.className = "tree-leaf";
    leaf.textContent = nodeSummary(node);
    return leaf;
  }
  const details = doc.createElement("details");
  details.className = "tree-node";
  const summary = doc.createElement("summary");
  summary.textContent = nodeSummary(node);
  details.appendChild(summary);

  let built = false;
  const buildChildren = () => {
    if (built) return;
    built = true;
    if (node.rule !== null) {
      const rule = doc.createElement("div");
      rule.className = "tree-rule";
      rule.textContent = node.rule;
      details.appendChild(rule);
    }
    for (const check of node.checks) {
      const line = doc.createElement("div");
      line.className = "tree-check";
      line.textContent = checkSummary(check);
      details.appendChild(line);
    }
    for (const child of node.children) {
      details.appendChild(renderTreeNode(child, doc));
    }
  };
  details.addEventListener("toggle", () => {
    if (details.open) buildChildren();
  });
  return details;
}

function checkSummary(check: Record<string, unknown>): string {
  switch (check.kind) {
    case "constraint":
      return `check: ${check.text} (${check.lhs} vs ${check.rhs})`;
    case "absent":
      return `check: no ${check.pattern} (stratum ${check.stratum})`;
    case "count":
      return `count: ${check.target} = ${check.value}`;
    default:
      return `check: ${JSON.stringify(check)}`;
  }
}
