import { App, loadSession, saveSession, Session } from "./app.js";
import { el } from "./dom.js";

/** Browser entry: a login form for base URL, token, and annotator
 * handle, then the console itself. */

function loginForm(doc: Document, onSubmit: (session: Session) => void): HTMLElement {
  const baseUrl = el(doc, "input", {
    id: "base-url",
    value: "http://127.0.0.1:8000",
    placeholder: "service base URL",
  });
  const token = el(doc, "input", { id: "token", placeholder: "bearer token (leave blank if open)" });
  const annotator = el(doc, "input", { id: "annotator", placeholder: "your moderator handle" });
  const error = el(doc, "p", { class: "error", role: "alert" });
  const button = el(doc, "button", {}, ["Open console"]);
  button.addEventListener("click", () => {
    if (!annotator.value.trim()) {
      error.textContent = "A moderator handle is required.";
      return;
    }
    onSubmit({
      baseUrl: baseUrl.value.trim(),
      token: token.value.trim() || null,
      annotatorId: annotator.value.trim(),
    });
  });
  return el(doc, "form", { class: "login" }, [
    el(doc, "h1", {}, ["trendwatch console"]),
    baseUrl,
    token,
    annotator,
    error,
    button,
  ]);
}

async function boot(doc: Document, win: Window): Promise<void> {
  const mount = doc.getElementById("app") ?? doc.body;
  const existing = loadSession(win.sessionStorage);

  const open = async (session: Session) => {
    saveSession(win.sessionStorage, session);
    const app = new App(doc, session);
    mount.replaceChildren(app.root);
    try {
      await app.start();
    } catch (err) {
      win.sessionStorage.clear();
      mount.replaceChildren(
        el(doc, "div", { class: "offline-banner", role: "alert" }, [
          `Could not reach the service: ${err instanceof Error ? err.message : String(err)}`,
        ]),
      );
    }
  };

  if (existing) {
    await open(existing);
  } else {
    mount.replaceChildren(loginForm(doc, (session) => void open(session)));
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  void boot(document, window);
}
