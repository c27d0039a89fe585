import { ApiConfig, Client, Guidelines } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { clear, el } from "./dom.js";
import { Stage1Panel } from "./stage1.js";
import { Stage2Panel } from "./stage2.js";

/** Composition root. The only state that survives a refresh is the
 * session (base URL, token, annotator handle) in sessionStorage; every
 * panel rebuilds itself from service responses. */

export interface Session {
  baseUrl: string;
  token: string | null;
  annotatorId: string;
}

const SESSION_KEY = "tw.session";

export function loadSession(storage: Storage): Session | null {
  const raw = storage.getItem(SESSION_KEY);
  if (!raw) {
    return null;
  }
  try {
    const parsed = JSON.parse(raw) as Session;
    if (typeof parsed.baseUrl === "string" && typeof parsed.annotatorId === "string") {
      return parsed;
    }
  } catch {
    // fall through to null; a corrupt session just means logging in again
  }
  return null;
}

export function saveSession(storage: Storage, session: Session): void {
  storage.setItem(SESSION_KEY, JSON.stringify(session));
}

export class App {
  readonly root: HTMLElement;
  readonly client: Client;
  stage1!: Stage1Panel;
  stage2!: Stage2Panel;
  dashboard: Dashboard;
  private notices: HTMLElement;

  constructor(
    private readonly doc: Document,
    private readonly session: Session,
    fetchFn?: ConstructorParameters<typeof Client>[1],
  ) {
    const config: ApiConfig = { baseUrl: session.baseUrl, token: session.token };
    this.client = new Client(config, fetchFn);
    this.root = el(doc, "main", { class: "app" });
    this.notices = el(doc, "div", { class: "notices" });
    this.dashboard = new Dashboard(doc, this.client);
  }

  /** Fetches guidelines once, builds the panels, and does a first load. */
  async start(): Promise<void> {
    const guidelines: Guidelines = await this.client.guidelines();
    const win = this.doc.defaultView ?? undefined;
    this.stage1 = new Stage1Panel(this.doc, this.client, this.session.annotatorId, guidelines, {
      onSpawned: () => {
        void this.stage2.refresh();
      },
      onNotice: (message) => this.notice(message),
      win,
    });
    this.stage2 = new Stage2Panel(this.doc, this.client, this.session.annotatorId, guidelines, {
      onNotice: (message) => this.notice(message),
      onReviewed: () => {
        void this.dashboard.refresh();
      },
      win,
    });
    clear(this.root);
    this.root.append(this.notices, this.stage1.root, this.stage2.root, this.dashboard.root);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    await this.stage1.refresh();
    await this.stage2.refresh();
    await this.dashboard.refresh();
  }

  notice(message: string): void {
    const note = el(this.doc, "p", { class: "notice", role: "status" }, [message]);
    this.notices.append(note);
  }
}
