/**
 * Report rendering: collapsed-by-default method sections under a pinned
 * TL;DR on the soundness tab, dimension sections on the contribution tab,
 * and the shared bibliography. Markdown is rendered through the safe
 * renderer, so report content can never execute script.
 */

import { StructuredReportPayload } from "./api.js";
import { renderMarkdown } from "./markdown.js";
import { Tab } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function subsection(title: string, body: string): HTMLElement {
  const wrap = el("div", "report-subsection");
  wrap.appendChild(el("h4", "subsection-title", title));
  const content = el("div", "subsection-body");
  content.innerHTML = renderMarkdown(body);
  wrap.appendChild(content);
  return wrap;
}

function bibliography(report: StructuredReportPayload): HTMLElement {
  const wrap = el("section", "bibliography");
  wrap.appendChild(el("h3", undefined, "Bibliography"));
  const list = el("ul");
  for (const entry of report.bibliography) {
    const item = el("li");
    const link = el("a", "citation-link", entry.key);
    link.setAttribute("href", entry.url);
    link.setAttribute("target", "_blank");
    link.setAttribute("rel", "noopener noreferrer");
    item.appendChild(link);
    item.appendChild(
      document.createTextNode(
        ` ${entry.title}${entry.date ? ` (${entry.date})` : ""}`,
      ),
    );
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

function renderSoundness(report: StructuredReportPayload): HTMLElement {
  const container = el("div", "soundness-report");
  if (report.soundness_tldr) {
    const tldr = el("div", "tldr-pinned");
    tldr.appendChild(el("h3", undefined, "TL;DR"));
    const body = el("div");
    body.innerHTML = renderMarkdown(report.soundness_tldr);
    tldr.appendChild(body);
    container.appendChild(tldr);
  }
  for (const section of report.soundness_sections) {
    const details = el("details", "method-section") as HTMLDetailsElement;
    details.open = false;
    const summary = el(
      "summary",
      "method-summary",
      `Method ${section.method_index + 1}: ${section.method.slice(0, 120)}` +
        ` — score ${section.soundness_score}/10`,
    );
    details.appendChild(summary);
    details.appendChild(subsection("Support", section.support));
    details.appendChild(subsection("Contradictions", section.contradictions));
    details.appendChild(subsection("Suggestions", section.suggestions));
    container.appendChild(details);
  }
  if (report.soundness_sections.length === 0) {
    container.appendChild(
      el("p", "empty-state", "No soundness sections in this report."),
    );
  }
  return container;
}

function renderContribution(report: StructuredReportPayload): HTMLElement {
  const container = el("div", "contribution-report");
  for (const section of report.contribution_sections) {
    const block = el("section", "dimension-section");
    block.appendChild(el("h3", "dimension-title", `Dimension: ${section.dimension}`));
    block.appendChild(subsection("Strengths", section.strengths));
    block.appendChild(subsection("Weaknesses", section.weaknesses));
    block.appendChild(subsection("Suggestions", section.suggestions));
    container.appendChild(block);
  }
  if (report.contribution_sections.length === 0) {
    container.appendChild(
      el("p", "empty-state", "No contribution sections in this report."),
    );
  }
  return container;
}

export function renderReport(
  report: StructuredReportPayload,
  tab: Tab,
): HTMLElement {
  try {
    const container = el("div", "report");
    container.appendChild(
      tab === "soundness" ? renderSoundness(report) : renderContribution(report),
    );
    if (report.bibliography.length > 0) {
      container.appendChild(bibliography(report));
    }
    return container;
  } catch (err) {
    const fallback = el("div", "report-fallback");
    fallback.appendChild(
      el("p", "diagnostic", `Report could not be rendered: ${String(err)}`),
    );
    const raw = el("pre", "raw-report");
    raw.textContent = JSON.stringify(report, null, 2);
    fallback.appendChild(raw);
    return fallback;
  }
}
