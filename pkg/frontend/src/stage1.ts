import { ApiError, Client, DecisionBody, Guidelines, PendingClaim } from "./api.js";
import { clear, el } from "./dom.js";
import { ReviewTimer } from "./timer.js";

/** Stage-1 triage: one pending flagged claim at a time, six categories,
 * debunk evidence required with UNAPPROVED. Claims render in the exact
 * order the service returned them. */

export interface DecisionDraft {
  category: string | null;
  debunkDate: string;
  debunkUrl: string;
}

export type Validation =
  | { ok: true; category: string; debunkDate: string | null; debunkUrl: string | null }
  | { ok: false; error: string };

const DATE_SHAPE = /^\d{4}-\d{2}-\d{2}$/;

function naOrNull(value: string): string | null {
  return value.trim().toUpperCase() === "NA" ? null : value.trim();
}

export function validateDecision(draft: DecisionDraft): Validation {
  if (!draft.category) {
    return { ok: false, error: "Pick a category before submitting." };
  }
  if (draft.category !== "UNAPPROVED") {
    return { ok: true, category: draft.category, debunkDate: null, debunkUrl: null };
  }
  const date = draft.debunkDate.trim();
  const url = draft.debunkUrl.trim();
  if (!date || !url) {
    return {
      ok: false,
      error: 'UNAPPROVED needs a debunk date and URL (enter "NA" if none exists).',
    };
  }
  const debunkDate = naOrNull(date);
  if (debunkDate !== null && !DATE_SHAPE.test(debunkDate)) {
    return { ok: false, error: 'Debunk date must be YYYY-MM-DD or "NA".' };
  }
  return { ok: true, category: "UNAPPROVED", debunkDate, debunkUrl: naOrNull(url) };
}

export interface Stage1Options {
  makeTimer?: () => ReviewTimer;
  onSpawned?: (clusterId: string) => void;
  onNotice?: (message: string) => void;
  win?: Pick<Window, "addEventListener" | "removeEventListener">;
}

export class Stage1Panel {
  readonly root: HTMLElement;
  private claims: PendingClaim[] = [];
  private timers = new Map<string, ReviewTimer>();
  private detaches = new Map<string, () => void>();
  private busy: Promise<void> = Promise.resolve();
  private readonly makeTimer: () => ReviewTimer;

  constructor(
    private readonly doc: Document,
    private readonly client: Client,
    private readonly annotatorId: string,
    private readonly guidelines: Guidelines,
    private readonly options: Stage1Options = {},
  ) {
    this.root = el(doc, "section", { class: "stage1" });
    this.makeTimer = options.makeTimer ?? (() => new ReviewTimer());
  }

  /** Resolves once every submit queued so far has settled. */
  settle(): Promise<void> {
    return this.busy;
  }

  async refresh(): Promise<void> {
    const page = await this.client.pendingClaims();
    this.claims = page.claims;
    this.render();
  }

  private render(): void {
    clear(this.root);
    this.root.append(el(this.doc, "h2", {}, [`Pending claims (${this.claims.length})`]));
    if (this.claims.length === 0) {
      this.root.append(el(this.doc, "p", { class: "empty" }, ["Queue is empty."]));
      return;
    }
    const list = el(this.doc, "div", { class: "claim-list" });
    for (const claim of this.claims) {
      list.append(this.claimCard(claim));
    }
    this.root.append(list);
  }

  private claimCard(claim: PendingClaim): HTMLElement {
    let timer = this.timers.get(claim.cluster_id);
    if (!timer) {
      // panel-open starts the clock; re-renders must not reset it
      timer = this.makeTimer();
      timer.start();
      if (this.options.win) {
        this.detaches.set(claim.cluster_id, timer.watch(this.options.win));
      }
      this.timers.set(claim.cluster_id, timer);
    }

    const header = el(this.doc, "header", {}, [
      el(this.doc, "strong", { class: "canonical" }, [claim.canonical]),
      el(this.doc, "span", { class: "stats" }, [
        ` z=${claim.z === null ? "?" : claim.z.toFixed(2)}`
        + ` · first seen ${claim.first_seen ?? "?"}`
        + ` · ${claim.post_count} posts`,
      ]),
    ]);

    const examples = el(this.doc, "ul", { class: "examples" });
    for (const example of claim.examples) {
      examples.append(el(this.doc, "li", { "data-post": example.post_id }, [example.text]));
    }

    const categories = el(this.doc, "div", { class: "categories" });
    for (const [value, help] of Object.entries(this.guidelines.stage1_categories)) {
      const input = el(this.doc, "input", {
        type: "radio",
        name: `category-${claim.cluster_id}`,
        value,
        id: `cat-${claim.cluster_id}-${value}`,
      });
      categories.append(
        el(this.doc, "label", { class: "category", title: help, for: input.id }, [input, value]),
      );
    }

    const debunkDate = el(this.doc, "input", {
      class: "debunk-date",
      placeholder: "debunk date (YYYY-MM-DD or NA)",
    });
    const debunkUrl = el(this.doc, "input", {
      class: "debunk-url",
      placeholder: "debunk URL (or NA)",
    });
    const debunkRow = el(this.doc, "div", { class: "debunk hidden" }, [debunkDate, debunkUrl]);
    categories.addEventListener("change", () => {
      const picked = this.pickedCategory(card);
      debunkRow.classList.toggle("hidden", picked !== "UNAPPROVED");
    });

    const error = el(this.doc, "p", { class: "error", role: "alert" });
    const submit = el(this.doc, "button", { class: "submit" }, ["Submit decision"]);
    const card = el(this.doc, "article", { class: "claim", "data-cluster": claim.cluster_id }, [
      header,
      examples,
      categories,
      debunkRow,
      error,
      submit,
    ]);
    submit.addEventListener("click", () => {
      this.busy = this.busy.then(() => this.submit(claim, card));
    });
    return card;
  }

  private pickedCategory(card: HTMLElement): string | null {
    const checked = card.querySelector<HTMLInputElement>("input[type=radio]:checked");
    return checked ? checked.value : null;
  }

  private async submit(claim: PendingClaim, card: HTMLElement): Promise<void> {
    const errorNode = card.querySelector<HTMLElement>(".error");
    const draft: DecisionDraft = {
      category: this.pickedCategory(card),
      debunkDate: card.querySelector<HTMLInputElement>(".debunk-date")?.value ?? "",
      debunkUrl: card.querySelector<HTMLInputElement>(".debunk-url")?.value ?? "",
    };
    const checked = validateDecision(draft);
    if (!checked.ok) {
      if (errorNode) {
        errorNode.textContent = checked.error;
      }
      return;
    }
    const body: DecisionBody = {
      annotator_id: this.annotatorId,
      category: checked.category,
      elapsed_seconds: this.timers.get(claim.cluster_id)?.seconds(),
    };
    if (checked.category === "UNAPPROVED") {
      body.debunk_date = checked.debunkDate;
      body.debunk_url = checked.debunkUrl;
    }
    try {
      const result = await this.client.decideClaim(claim.cluster_id, body);
      this.drop(claim.cluster_id);
      if (result.spawned.length > 0) {
        this.options.onSpawned?.(claim.cluster_id);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.drop(claim.cluster_id);
        this.options.onNotice?.(`"${claim.canonical}" was decided by another moderator.`);
        return;
      }
      if (errorNode) {
        errorNode.textContent = err instanceof Error ? err.message : String(err);
      }
    }
  }

  private drop(clusterId: string): void {
    this.claims = this.claims.filter((c) => c.cluster_id !== clusterId);
    this.detaches.get(clusterId)?.();
    this.detaches.delete(clusterId);
    this.timers.delete(clusterId);
    this.render();
  }
}
