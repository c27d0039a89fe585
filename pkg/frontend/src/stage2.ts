import { ApiError, Client, Guidelines, ReviewBody, SampleTweet } from "./api.js";
import { clear, el } from "./dom.js";
import { LIKERT_SCORES, rubricPanel } from "./rubric.js";
import { ReviewTimer } from "./timer.js";

/** Stage-2 scoring: every sampled post of an unapproved claim gets a
 * duplicate mark or a 1-5 rubric score. Queues are discovered from the
 * event log, so a page refresh rebuilds exactly what the service knows. */

export type ScoreDraft = { duplicate: true } | { duplicate: false; likert: number | null };

export function validateScore(draft: ScoreDraft): { ok: true } | { ok: false; error: string } {
  if (!draft.duplicate && draft.likert === null) {
    return { ok: false, error: "Pick a score or mark the post as a duplicate." };
  }
  return { ok: true };
}

export interface Stage2Options {
  makeTimer?: () => ReviewTimer;
  onNotice?: (message: string) => void;
  onReviewed?: (postId: string, isViolation: boolean) => void;
  win?: Pick<Window, "addEventListener" | "removeEventListener">;
}

interface QueueView {
  clusterId: string;
  tweets: SampleTweet[];
}

export class Stage2Panel {
  readonly root: HTMLElement;
  private queues: QueueView[] = [];
  private timers = new Map<string, ReviewTimer>();
  private detaches = new Map<string, () => void>();
  private busy: Promise<void> = Promise.resolve();
  private readonly makeTimer: () => ReviewTimer;

  constructor(
    private readonly doc: Document,
    private readonly client: Client,
    private readonly annotatorId: string,
    private readonly guidelines: Guidelines,
    private readonly options: Stage2Options = {},
  ) {
    this.root = el(doc, "section", { class: "stage2" });
    this.makeTimer = options.makeTimer ?? (() => new ReviewTimer());
  }

  settle(): Promise<void> {
    return this.busy;
  }

  /** Unapproved clusters come from CLAIM_DECIDED events; each one's
   * sample is then fetched fresh. */
  async refresh(): Promise<void> {
    const page = await this.client.exportEvents();
    const clusterIds: string[] = [];
    for (const event of page.events) {
      if (event.kind !== "CLAIM_DECIDED") {
        continue;
      }
      const decision = event.payload["decision"] as { cluster_id?: string; category?: string };
      const cid = decision?.cluster_id;
      if (decision?.category === "UNAPPROVED" && cid && !clusterIds.includes(cid)) {
        clusterIds.push(cid);
      }
    }
    const queues: QueueView[] = [];
    for (const clusterId of clusterIds) {
      try {
        const sample = await this.client.tweetSample(clusterId);
        queues.push({ clusterId, tweets: sample.tweets });
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 404)) {
          throw err;
        }
      }
    }
    this.queues = queues;
    this.render();
  }

  private render(): void {
    clear(this.root);
    const pending = this.queues.reduce(
      (sum, queue) => sum + queue.tweets.filter((t) => !t.reviewed).length,
      0,
    );
    this.root.append(el(this.doc, "h2", {}, [`Sampled posts to score (${pending})`]));
    this.root.append(rubricPanel(this.doc, this.guidelines));
    if (pending === 0) {
      this.root.append(el(this.doc, "p", { class: "empty" }, ["Nothing waiting for a score."]));
      return;
    }
    for (const queue of this.queues) {
      const section = el(this.doc, "section", { class: "queue", "data-cluster": queue.clusterId });
      for (const tweet of queue.tweets) {
        if (!tweet.reviewed) {
          section.append(this.tweetCard(queue.clusterId, tweet));
        }
      }
      this.root.append(section);
    }
  }

  private tweetCard(clusterId: string, tweet: SampleTweet): HTMLElement {
    let timer = this.timers.get(tweet.post_id);
    if (!timer) {
      timer = this.makeTimer();
      timer.start();
      if (this.options.win) {
        this.detaches.set(tweet.post_id, timer.watch(this.options.win));
      }
      this.timers.set(tweet.post_id, timer);
    }

    const scores = el(this.doc, "div", { class: "scores" });
    for (const score of LIKERT_SCORES) {
      const input = el(this.doc, "input", {
        type: "radio",
        name: `likert-${tweet.post_id}`,
        value: score,
        id: `likert-${tweet.post_id}-${score}`,
      });
      scores.append(
        el(this.doc, "label", { for: input.id, title: this.guidelines.likert[score] ?? "" }, [
          input,
          score,
        ]),
      );
    }
    const duplicate = el(this.doc, "input", { type: "checkbox", class: "duplicate" });
    const error = el(this.doc, "p", { class: "error", role: "alert" });
    const submit = el(this.doc, "button", { class: "submit" }, ["Save review"]);
    const card = el(this.doc, "article", { class: "tweet", "data-post": tweet.post_id }, [
      el(this.doc, "p", { class: "text" }, [tweet.text]),
      scores,
      el(this.doc, "label", { class: "duplicate-row" }, [duplicate, "duplicate of another sampled post"]),
      error,
      submit,
    ]);
    submit.addEventListener("click", () => {
      this.busy = this.busy.then(() => this.submit(clusterId, tweet, card));
    });
    return card;
  }

  private draftFrom(card: HTMLElement): ScoreDraft {
    const duplicate = card.querySelector<HTMLInputElement>(".duplicate")?.checked ?? false;
    if (duplicate) {
      return { duplicate: true };
    }
    const checked = card.querySelector<HTMLInputElement>("input[type=radio]:checked");
    return { duplicate: false, likert: checked ? Number(checked.value) : null };
  }

  private async submit(clusterId: string, tweet: SampleTweet, card: HTMLElement): Promise<void> {
    const errorNode = card.querySelector<HTMLElement>(".error");
    const draft = this.draftFrom(card);
    const checked = validateScore(draft);
    if (!checked.ok) {
      if (errorNode) {
        errorNode.textContent = checked.error;
      }
      return;
    }
    const body: ReviewBody = {
      cluster_id: clusterId,
      annotator_id: this.annotatorId,
      is_duplicate: draft.duplicate,
      likert: draft.duplicate ? null : (draft as { likert: number | null }).likert,
      elapsed_seconds: this.timers.get(tweet.post_id)?.seconds(),
    };
    try {
      const result = await this.client.reviewTweet(tweet.post_id, body);
      this.markReviewed(tweet.post_id);
      this.options.onReviewed?.(tweet.post_id, result.is_violation);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.markReviewed(tweet.post_id);
        this.options.onNotice?.("That post was already reviewed by another moderator.");
        return;
      }
      if (errorNode) {
        errorNode.textContent = err instanceof Error ? err.message : String(err);
      }
    }
  }

  private markReviewed(postId: string): void {
    for (const queue of this.queues) {
      for (const tweet of queue.tweets) {
        if (tweet.post_id === postId) {
          tweet.reviewed = true;
        }
      }
    }
    this.detaches.get(postId)?.();
    this.detaches.delete(postId);
    this.timers.delete(postId);
    this.render();
  }
}
