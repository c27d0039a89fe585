import type { Guidelines } from "./api.js";
import { el } from "./dom.js";

/** The Likert rubric panel. The description text nodes carry the
 * guideline strings exactly as the service returned them: the scoring
 * UI must show the shipped rubric verbatim, so nothing is trimmed,
 * re-capitalized, or concatenated with other text. */

export const LIKERT_SCORES = ["1", "2", "3", "4", "5"] as const;

export function rubricPanel(doc: Document, guidelines: Guidelines): HTMLElement {
  const list = el(doc, "ol", { class: "rubric" });
  for (const score of LIKERT_SCORES) {
    const text = guidelines.likert[score];
    if (text === undefined) {
      continue;
    }
    list.append(
      el(doc, "li", { class: "rubric-entry", "data-score": score }, [
        el(doc, "span", { class: "rubric-score" }, [score]),
        el(doc, "span", { class: "rubric-text" }, [text]),
      ]),
    );
  }
  return el(doc, "section", { class: "rubric-panel" }, [
    el(doc, "h3", {}, ["Violation rubric"]),
    list,
  ]);
}

/** The exact strings a rubric panel displays, in score order. */
export function rubricTexts(panel: HTMLElement): string[] {
  return Array.from(panel.querySelectorAll(".rubric-text")).map((node) => node.textContent ?? "");
}
